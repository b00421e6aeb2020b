//! Key-value experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment                 blank lines and '#' comments are ignored
//! key = value               keys are case-sensitive, whitespace is trimmed
//! t = 1e3, 1e4, 1e5         lists are comma-separated
//! family = log-power(2.5)   log | log-power(beta) | exp-sqrt-log
//! ```
//!
//! Counts accept integer or exponent notation (`2e4`). Unknown keys are an
//! error. Command-line flags override file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscape::TailFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Localise,
    SplitLaw,
    GammaScaling,
    Events,
    Extremes,
    PmfCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Localise,
        Scenario::SplitLaw,
        Scenario::GammaScaling,
        Scenario::Events,
        Scenario::Extremes,
        Scenario::PmfCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Localise => "localise",
            Scenario::SplitLaw => "split-law",
            Scenario::GammaScaling => "gamma-scaling",
            Scenario::Events => "events",
            Scenario::Extremes => "extremes",
            Scenario::PmfCheck => "pmf-check",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario '{s}'")))
    }
}

/// Everything a scenario run needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(serialize_with = "display")]
    pub family: TailFunction,
    pub t: Vec<f64>,
    pub landscapes: u64,
    /// Monte Carlo paths per landscape (localise, split-law).
    pub paths: u64,
    pub seed: u64,
    /// Poisson truncation tolerance of the uniformization oracle.
    pub tol: f64,
    /// Window certification tolerance.
    pub window_tol: f64,
    /// Window half-width factor `c` in `c d_t h_t`.
    pub window_c: f64,
    pub thresholds: Vec<f64>,
    /// Panel lengths for the sum/max statistics.
    pub n_values: Vec<u64>,
    pub panels: u64,
    /// Horizon `T` and number of grid points of the gap statistic.
    pub horizon: f64,
    pub grid_points: u64,
    pub trials: u64,
    /// Target `L(l)` of the first-exceedence level.
    pub level_scale: f64,
    #[serde(serialize_with = "display")]
    pub bounds_family: TailFunction,
    pub cap: u64,
    /// Times of the `ell_t r_t / t` check.
    pub ell_t: Vec<f64>,
    pub mc_paths: u64,
    pub tv_paths: Vec<u64>,
    pub tv_replicates: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

fn display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl ExperimentConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let mut c = ExperimentConfig {
            scenario,
            family: TailFunction::ExpSqrtLog,
            t: vec![1e3, 1e4, 1e5, 1e6],
            landscapes: 200,
            paths: 0,
            seed: 1,
            tol: 1e-10,
            window_tol: 1e-6,
            window_c: 4.0,
            thresholds: vec![0.5, 0.9],
            n_values: vec![100, 1000, 10000],
            panels: 1000,
            horizon: 1.0,
            grid_points: 20,
            trials: 10_000,
            level_scale: 50.0,
            bounds_family: TailFunction::ExpSqrtLog,
            cap: 1 << 16,
            ell_t: (4..=12).map(|k| 10f64.powi(k)).collect(),
            mc_paths: 100_000,
            tv_paths: vec![1000, 10_000, 100_000],
            tv_replicates: 8,
            out_dir: PathBuf::from("out").join(scenario.name()),
            threads: None,
        };
        match scenario {
            Scenario::Localise | Scenario::SplitLaw => {}
            Scenario::GammaScaling => {
                c.family = TailFunction::Log;
                c.t = vec![1e6];
                c.landscapes = 20_000;
            }
            Scenario::Events => {
                c.t = vec![1e4, 1e6, 1e8];
                c.landscapes = 1000;
            }
            Scenario::Extremes => {
                c.family = TailFunction::Log;
                c.t = vec![1e4, 1e6, 1e8];
                c.trials = 10_000;
            }
            Scenario::PmfCheck => {
                c.t = vec![0.0, 1.0, 10.0, 50.0];
            }
        }
        c
    }

    /// Defaults for `scenario` overridden by the entries of `text`.
    pub fn parse(scenario: Scenario, text: &str) -> Result<Self> {
        let mut c = Self::defaults(scenario);
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config { line: line_no, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected 'key = value'".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), line_no).is_some() {
                return Err(err(format!("duplicate key '{k}'")));
            }
            c.set(k, v).map_err(|e| err(e.to_string()))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "scenario" => {
                let s: Scenario = v.parse()?;
                if s != self.scenario {
                    return Err(Error::InvalidArgument(format!("config is for '{s}', not '{}'", self.scenario)));
                }
            }
            "family" => self.family = v.parse()?,
            "bounds_family" => self.bounds_family = v.parse()?,
            "t" => self.t = parse_list(v, parse_real)?,
            "ell_t" => self.ell_t = parse_list(v, parse_real)?,
            "landscapes" => self.landscapes = parse_count(v)?,
            "paths" => self.paths = parse_count(v)?,
            "seed" => self.seed = v.parse().map_err(|_| bad(key, v))?,
            "tol" => self.tol = parse_real(v)?,
            "window_tol" => self.window_tol = parse_real(v)?,
            "window_c" => self.window_c = parse_real(v)?,
            "thresholds" => self.thresholds = parse_list(v, parse_real)?,
            "n_values" => self.n_values = parse_list(v, parse_count)?,
            "panels" => self.panels = parse_count(v)?,
            "horizon" => self.horizon = parse_real(v)?,
            "grid_points" => self.grid_points = parse_count(v)?,
            "trials" => self.trials = parse_count(v)?,
            "level_scale" => self.level_scale = parse_real(v)?,
            "cap" => self.cap = parse_count(v)?,
            "mc_paths" => self.mc_paths = parse_count(v)?,
            "tv_paths" => self.tv_paths = parse_list(v, parse_count)?,
            "tv_replicates" => self.tv_replicates = parse_count(v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "threads" => self.threads = Some(parse_count(v)? as usize),
            _ => return Err(Error::InvalidArgument(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.t.is_empty() || self.t.windows(2).any(|w| w[1] <= w[0]) {
            return fail("t values must be non-empty and strictly increasing");
        }
        let t_floor_ok = if self.scenario == Scenario::PmfCheck {
            self.t[0] >= 0.0
        } else {
            self.t[0] > 0.0
        };
        if !t_floor_ok || self.t.iter().any(|t| !t.is_finite()) {
            return fail("t values must be finite and positive (non-negative for pmf-check)");
        }
        let counts = [self.landscapes, self.panels, self.trials, self.grid_points, self.cap, self.mc_paths, self.tv_replicates];
        if counts.contains(&0) || self.n_values.contains(&0) || self.tv_paths.contains(&0) {
            return fail("all counts must be at least 1");
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) || self.tv_paths.windows(2).any(|w| w[1] <= w[0]) {
            return fail("n_values and tv_paths must be strictly increasing");
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) || !(self.window_tol > 0.0) {
            return fail("tolerances must be positive");
        }
        if !(self.window_c >= 1.0) || !(self.horizon >= 1.0) {
            return fail("window_c and horizon must be at least 1");
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1");
        }
        Ok(())
    }
}

fn bad(key: &str, v: &str) -> Error {
    Error::InvalidArgument(format!("bad value '{v}' for '{key}'"))
}

fn parse_real(v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("expected a number, got '{v}'")))
}

/// Non-negative integer, also in exponent notation.
pub fn parse_count(v: &str) -> Result<u64> {
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(Error::InvalidArgument(format!("expected a count, got '{v}'"))),
    }
}

fn parse_list<T>(v: &str, f: fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(|s| f(s.trim())).collect()
}
