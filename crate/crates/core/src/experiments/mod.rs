//! Scenario runners behind the command-line tool.
//!
//! Every scenario maps a config to a [`Report`]: summary rows, a detail
//! table and a list of in-run assertions. Trials are addressed by index
//! through [`SeedSplitter`](crate::rng::SeedSplitter), and results are
//! collected in index order, so output does not depend on the thread count.

mod config;
pub mod fixtures;
mod scenarios;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

pub use config::{parse_count, ExperimentConfig, Scenario};
pub use scenarios::{
    oracle_sample, run_events, run_extremes, run_gamma_scaling, run_localise, run_pmf_crosscheck, run_split_law,
    OracleSample,
};

use crate::error::{invalid, Result};
use crate::stats;

/// Header of `summary.csv`.
pub const SUMMARY_HEADER: &str = "scenario,t,metric,estimate,ci_low,ci_high,n,successes,ks_stat,chi2_p";

/// One line of `summary.csv`.
///
/// Proportions carry `successes` and a Wilson interval; other metrics carry
/// a distribution-free or normal interval and leave `successes` empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: Scenario,
    pub t: f64,
    pub metric: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
    pub successes: Option<u64>,
    pub ks_stat: Option<f64>,
    pub chi2_p: Option<f64>,
}

impl SummaryRow {
    pub fn value(scenario: Scenario, t: f64, metric: impl Into<String>, estimate: f64, ci: (f64, f64), n: u64) -> Self {
        SummaryRow {
            scenario,
            t,
            metric: metric.into(),
            estimate,
            ci_low: ci.0,
            ci_high: ci.1,
            n,
            successes: None,
            ks_stat: None,
            chi2_p: None,
        }
    }

    pub fn proportion(scenario: Scenario, t: f64, metric: impl Into<String>, successes: u64, n: u64) -> Self {
        let est = if n == 0 { f64::NAN } else { successes as f64 / n as f64 };
        let ci = if n == 0 { (0.0, 1.0) } else { stats::wilson_interval(successes, n) };
        SummaryRow { successes: Some(successes), ..Self::value(scenario, t, metric, est, ci, n) }
    }

    /// Median with its order-statistic interval.
    pub fn median(scenario: Scenario, t: f64, metric: impl Into<String>, values: &[f64]) -> Self {
        Self::quantile(scenario, t, metric, values, 0.5)
    }

    pub fn quantile(scenario: Scenario, t: f64, metric: impl Into<String>, values: &[f64], q: f64) -> Self {
        let v = stats::sorted(values);
        if v.is_empty() {
            return Self::value(scenario, t, metric, f64::NAN, (f64::NAN, f64::NAN), 0);
        }
        let est = stats::quantile_sorted(&v, q);
        let (lo, hi) = stats::quantile_interval_sorted(&v, q);
        Self::value(scenario, t, metric, est, (lo.min(est), hi.max(est)), v.len() as u64)
    }

    /// Mean with a normal 95% interval.
    pub fn mean(scenario: Scenario, t: f64, metric: impl Into<String>, values: &[f64]) -> Self {
        let (m, se) = stats::mean_and_se(values);
        Self::value(scenario, t, metric, m, (m - stats::Z95 * se, m + stats::Z95 * se), values.len() as u64)
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.t,
            self.metric,
            self.estimate,
            self.ci_low,
            self.ci_high,
            self.n,
            self.successes.map(|s| s.to_string()).unwrap_or_default(),
            opt(self.ks_stat),
            opt(self.chi2_p)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), passed, detail: detail.into() }
    }
}

/// Output of one scenario run.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<SummaryRow>,
    pub detail_header: String,
    pub detail: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub diagnostics: Map<String, Value>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn rows_for(&self, metric: &str) -> Vec<&SummaryRow> {
        self.rows.iter().filter(|r| r.metric == metric).collect()
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(SUMMARY_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(s, "{}", r.to_csv()).unwrap();
        }
        s
    }

    pub fn detail_csv(&self) -> String {
        let mut s = self.detail_header.clone();
        s.push('\n');
        for line in &self.detail {
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

/// `est[k+1] >= est[k] - 2 max(width[k], width[k+1])` along the rows.
pub fn non_decreasing_within_two_widths(rows: &[&SummaryRow]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for w in rows.windows(2) {
        let slack = 2.0 * w[0].width().max(w[1].width());
        let step_ok = w[1].estimate >= w[0].estimate - slack;
        ok &= step_ok;
        parts.push(format!("t={}: {} -> t={}: {} (slack {})", w[0].t, w[0].estimate, w[1].t, w[1].estimate, slack));
    }
    (ok && !rows.is_empty(), parts.join("; "))
}

/// Strict decrease of the point estimates along the rows.
pub fn strictly_decreasing(rows: &[&SummaryRow]) -> (bool, String) {
    let ok = rows.len() >= 2 && rows.windows(2).all(|w| w[1].estimate < w[0].estimate);
    let seq: Vec<String> = rows.iter().map(|r| format!("{}@{}", r.estimate, r.t)).collect();
    (ok, seq.join(" > "))
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    match config.scenario {
        Scenario::Localise => run_localise(config),
        Scenario::SplitLaw => run_split_law(config),
        Scenario::GammaScaling => run_gamma_scaling(config),
        Scenario::Events => run_events(config),
        Scenario::Extremes => run_extremes(config),
        Scenario::PmfCheck => run_pmf_crosscheck(config),
    }
}

/// Runs on a dedicated pool of `config.threads` workers (all cores if unset).
pub fn run_with_threads(config: &ExperimentConfig) -> Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| run(config))
}

/// Runs the scenario and writes `summary.csv`, `detail.csv` and `meta.json`
/// into `config.out_dir`.
pub fn run_and_write(config: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    let report = run_with_threads(config)?;
    let wall = start.elapsed().as_secs_f64();
    write_outputs(&report, config, wall)?;
    Ok(report)
}

pub fn write_outputs(report: &Report, config: &ExperimentConfig, wall_clock_seconds: f64) -> Result<()> {
    let dir: &Path = &config.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.csv"), report.summary_csv())?;
    fs::write(dir.join("detail.csv"), report.detail_csv())?;
    let meta = json!({
        "scenario": config.scenario,
        "config": config,
        "versions": {
            "slowtrap": env!("CARGO_PKG_VERSION"),
        },
        "threads": config.threads.unwrap_or_else(rayon::current_num_threads),
        "wall_clock_seconds": wall_clock_seconds,
        "summary_columns": SUMMARY_HEADER,
        "passed": report.passed(),
        "assertions": report.assertions,
        "diagnostics": report.diagnostics,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| invalid(e.to_string()))?;
    fs::write(dir.join("meta.json"), text + "\n")?;
    Ok(())
}
