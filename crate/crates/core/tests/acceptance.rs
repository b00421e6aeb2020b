//! Acceptance suite. Each test prints one `PASS`/`FAIL` line straight to
//! stderr, so the lines show up even when the harness captures output.

use std::io::Write;
use std::time::{Duration, Instant};

use slowtrap::experiments::{fixtures, run_with_threads, ExperimentConfig, Report, Scenario, SummaryRow};
use slowtrap::extremes::{first_exceedence_law, sum_max_ratios};
use slowtrap::landscape::TailFunction;
use slowtrap::pmf::{self, reference, Boundary, PmfOptions};
use slowtrap::rng::{Domain, SeedSplitter};
use slowtrap::stats;
use slowtrap::walker::{srw_hits_first, srw_hitting_probability};

fn verdict(name: &str, passed: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let ok = passed && elapsed < budget;
    let line = format!(
        "{} {name} [{:.1}s / {}s] {detail}\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(passed, "{name}: {detail}");
    assert!(elapsed < budget, "{name}: took {elapsed:?}, budget {budget:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn failed(report: &Report) -> String {
    let bad: Vec<String> =
        report.assertions.iter().filter(|a| !a.passed).map(|a| format!("{}: {}", a.name, a.detail)).collect();
    bad.join("; ")
}

#[test]
fn localisation_site_is_exactly_geometric() {
    let start = Instant::now();
    let c = ExperimentConfig::defaults(Scenario::GammaScaling);
    assert_eq!((c.family, c.t.as_slice(), c.landscapes), (TailFunction::Log, &[1e6][..], 20_000));
    let report = run_with_threads(&c).unwrap();
    let row = report.rows_for("mean_z1_over_r")[0];
    let p = row.chi2_p.unwrap();
    verdict(
        "geometric law of Z1 (Log, t=1e6, 2e4 landscapes)",
        p > 1e-3,
        start.elapsed(),
        secs(60),
        &format!("chi2 p = {p}"),
    );
}

#[test]
fn uniformization_matches_ode_and_monte_carlo() {
    let start = Instant::now();
    let w = fixtures::window_21();
    let mut worst = 0.0f64;
    for t in [1.0, 10.0, 50.0] {
        let law = pmf::pmf_at_time(&w, t, Boundary::Absorbing, PmfOptions { tol: 1e-13, ..Default::default() }).unwrap();
        let ode = reference::rk4_transient(&w.sigma, Boundary::Absorbing, 10, t, (t * 400.0) as usize);
        worst = law.mass.iter().zip(&ode).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    let mut c = ExperimentConfig::defaults(Scenario::PmfCheck);
    c.t = vec![1.0, 10.0, 50.0];
    assert_eq!(c.mc_paths, 100_000);
    let report = run_with_threads(&c).unwrap();
    let tv: Vec<f64> = report.rows_for("tv_mc").iter().map(|r| r.estimate).collect();
    let max_tv = tv.iter().cloned().fold(0.0, f64::max);
    verdict(
        "uniformization vs ODE and Monte Carlo (21-site fixture)",
        worst <= 1e-8 && max_tv < 0.02,
        start.elapsed(),
        secs(120),
        &format!("max |uniformization - ode| = {worst:e}, TV at 1e5 paths = {tv:?}"),
    );
}

#[test]
fn srw_hitting_probability_by_optional_stopping() {
    let start = Instant::now();
    let exact = srw_hitting_probability(3, -7).unwrap();
    assert_eq!(exact, 0.7);
    let split = SeedSplitter::new(1);
    let n = 100_000u64;
    let hits = (0..n).filter(|&j| srw_hits_first(3, -7, &mut split.stream(Domain::Srw, &[j]))).count();
    let p = hits as f64 / n as f64;
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    verdict(
        "SRW hits 3 before -7 with probability 0.7",
        (p - exact).abs() <= 3.0 * se,
        start.elapsed(),
        secs(10),
        &format!("estimate {p}, |diff| / se = {:.2}", (p - exact).abs() / se),
    );
}

#[test]
fn ring_return_probability_decreases_to_equilibrium() {
    let start = Instant::now();
    let w = fixtures::ring_11();
    let grid = fixtures::ring_time_grid();
    assert_eq!(grid.len(), 50);
    let result = pmf::monotone_return_probability(&w, 0, &grid, 1e-9);
    let pi = pmf::equilibrium_periodic(&w.sigma).unwrap()[5];
    let (ok, detail) = match &result {
        Ok(v) => {
            let gap = (v[49] - pi).abs();
            (gap <= 1e-6, format!("p(t_max) = {}, pi(start) = {pi}, gap {gap:e}", v[49]))
        }
        Err(e) => (false, e.to_string()),
    };
    verdict("monotone return on the 11-site ring", ok, start.elapsed(), secs(10), &detail);
}

#[test]
fn first_exceedence_is_exponential_in_the_limit() {
    let start = Instant::now();
    let tail = TailFunction::Log;
    let level = tail.ln_inverse(50.0).exp();
    assert!((tail.eval(level) - 50.0).abs() < 1e-9);
    let law = first_exceedence_law(tail, level, 10_000, SeedSplitter::new(1).seed(Domain::Panel, &[0, 2])).unwrap();
    verdict(
        "first exceedence n_l / L(l) vs Exp(1) at L(l) = 50",
        law.ks_exponential <= law.ks_geometric_bound + 0.01,
        start.elapsed(),
        secs(30),
        &format!("ks = {}, geometric-vs-exponential = {}", law.ks_exponential, law.ks_geometric_bound),
    );
}

#[test]
fn sum_is_dominated_by_max() {
    let start = Instant::now();
    let split = SeedSplitter::new(1);
    let mut excess = Vec::new();
    let mut ratio_at_max = 0.0;
    for n in [100u64, 1000, 10_000] {
        let pairs = sum_max_ratios(TailFunction::Log, n as usize, 1000, split.seed(Domain::Panel, &[n]));
        excess.push(stats::median(&pairs.iter().map(|p| p.1).collect::<Vec<_>>()));
        ratio_at_max = stats::median(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    }
    let decreasing = excess.windows(2).all(|w| w[1] < w[0]);
    verdict(
        "median S_n/M_n decreasing in n and within [1, 1.1] at n = 1e4",
        decreasing && (1.0..=1.1).contains(&ratio_at_max),
        start.elapsed(),
        secs(60),
        &format!("median ln(S/M - 1) = {excess:?}, median S/M at 1e4 = {ratio_at_max}"),
    );
}

/// Medians of P(X_t in Gamma_t) at seed 1, 200 landscapes.
const FROZEN_LOCALISE_MEDIANS: [f64; 4] = [0.8279836328082655, 0.8864658995582304, 0.9129256915778989, 0.9274311933596523];

#[test]
fn localisation_probability_trend() {
    let start = Instant::now();
    let c = ExperimentConfig::defaults(Scenario::Localise);
    assert_eq!((c.family, c.landscapes), (TailFunction::ExpSqrtLog, 200));
    assert_eq!(c.t, vec![1e3, 1e4, 1e5, 1e6]);
    let report = run_with_threads(&c).unwrap();
    let medians: Vec<f64> = report.rows_for("median_p_gamma").iter().map(|r| r.estimate).collect();
    let a = report.assertion("median_p_gamma_non_decreasing").unwrap();
    verdict(
        "median P(X_t in Gamma_t) non-decreasing over t = 1e3..1e6",
        a.passed && report.passed(),
        start.elapsed(),
        secs(900),
        &format!("medians {medians:?}; {}", failed(&report)),
    );
    for (m, f) in medians.iter().zip(FROZEN_LOCALISE_MEDIANS) {
        assert!((m - f).abs() <= 1e-9, "regression: median {m} vs frozen {f}");
    }
}

#[test]
fn split_law_trend() {
    let start = Instant::now();
    let c = ExperimentConfig::defaults(Scenario::SplitLaw);
    let report = run_with_threads(&c).unwrap();
    let dev: Vec<f64> = report.rows_for("median_split_deviation").iter().map(|r| r.estimate).collect();
    let ks: Vec<f64> = report.rows_for("ks_p_z1_uniform").iter().map(|r| r.estimate).collect();
    let passed = report.assertion("median_split_deviation_decreasing").unwrap().passed
        && report.assertion("ks_uniform_decreasing").unwrap().passed;
    verdict(
        "split deviation and uniform KS decreasing over t = 1e3..1e6",
        passed && report.passed(),
        start.elapsed(),
        secs(900),
        &format!("median deviation {dev:?}, KS {ks:?}; {}", failed(&report)),
    );
}

#[test]
fn event_probability_trend() {
    let start = Instant::now();
    let c = ExperimentConfig::defaults(Scenario::Events);
    assert_eq!(c.t, vec![1e4, 1e6, 1e8]);
    let report = run_with_threads(&c).unwrap();
    let admissible = report.rows_for("freq_joint");
    // t = 1e4 is pre-asymptotic; its frequency at the floor h is reported
    // in the diagnostics and joined to the trend here.
    let pre = &report.diagnostics["pre_asymptotic_excluded"][0];
    let (k, n) = (pre["at_floor_h"]["joint"].as_u64().unwrap(), pre["at_floor_h"]["n"].as_u64().unwrap());
    let floor_row = SummaryRow::proportion(Scenario::Events, 1e4, "freq_joint", k, n);
    let mut all = vec![&floor_row];
    all.extend(admissible.iter().copied());
    let (three_point, detail) = slowtrap::experiments::non_decreasing_within_two_widths(&all);
    verdict(
        "joint event frequency non-decreasing over t = 1e4, 1e6, 1e8",
        report.passed() && three_point && admissible.len() == 2,
        start.elapsed(),
        secs(300),
        &format!("{detail} (t = 1e4 at floor h = 2); {}", failed(&report)),
    );
}

fn small_config(s: Scenario) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(s);
    match s {
        Scenario::Localise | Scenario::SplitLaw => {
            c.t = vec![1e3, 1e4];
            c.landscapes = 24;
            c.paths = 5;
        }
        Scenario::GammaScaling => c.landscapes = 3000,
        Scenario::Events => c.landscapes = 300,
        Scenario::Extremes => {
            c.panels = 100;
            c.trials = 1000;
            c.n_values = vec![100, 1000];
        }
        Scenario::PmfCheck => {
            c.mc_paths = 5000;
            c.tv_paths = vec![500, 5000];
            c.tv_replicates = 2;
        }
    }
    c
}

#[test]
fn summaries_are_identical_across_thread_counts() {
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for s in Scenario::ALL {
        let mut c = small_config(s);
        let mut outputs = Vec::new();
        for threads in [1, 4, 8] {
            c.threads = Some(threads);
            outputs.push(run_with_threads(&c).unwrap().summary_csv());
        }
        outputs.push(run_with_threads(&c).unwrap().summary_csv());
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            mismatched.push(s.name());
        }
    }
    verdict(
        "bit-identical summary.csv at 1, 4 and 8 threads for every scenario",
        mismatched.is_empty(),
        start.elapsed(),
        secs(600),
        &format!("mismatched: {mismatched:?}"),
    );
}
