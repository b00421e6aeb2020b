use std::process::Command;

use slowtrap::experiments::{run_with_threads, ExperimentConfig, Scenario, SUMMARY_HEADER};
use slowtrap::stats::wilson_interval;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slowtrap"))
}

fn temp_dir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("slowtrap-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn cli_writes_outputs_and_exit_code() {
    let dir = temp_dir("pmf");
    let cfg = dir.with_extension("cfg");
    std::fs::write(&cfg, "# quick run\nmc_paths = 20000\ntv_paths = 1000, 10000\ntv_replicates = 4\n").unwrap();
    let status = bin()
        .args(["pmf-check", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&dir)
        .args(["--t", "0", "--t", "10", "--seed", "3"])
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with(SUMMARY_HEADER));
    assert!(std::fs::read_to_string(dir.join("detail.csv")).unwrap().starts_with("t,z,"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 3);
    assert_eq!(meta["passed"], true);
    assert!(meta["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn cli_rejects_bad_config() {
    let dir = temp_dir("bad");
    let cfg = dir.with_extension("cfg");
    std::fs::write(&cfg, "landscapes = -3\n").unwrap();
    let out = bin().args(["events", "--config"]).arg(&cfg).arg("--out-dir").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn cli_summary_is_identical_across_thread_counts() {
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let dir = temp_dir(&format!("ev{threads}"));
        let status = bin()
            .args(["events", "--t", "1e6", "--t", "1e8", "--threads", threads, "--out-dir"])
            .arg(&dir)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(dir.join("summary.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn proportion_rows_carry_wilson_intervals() {
    let mut c = ExperimentConfig::defaults(Scenario::Events);
    c.landscapes = 300;
    let report = run_with_threads(&c).unwrap();
    let mut checked = 0;
    for r in &report.rows {
        if let Some(k) = r.successes {
            assert_eq!(wilson_interval(k, r.n), (r.ci_low, r.ci_high));
            assert!(r.ci_low <= r.estimate && r.estimate <= r.ci_high);
            checked += 1;
        }
    }
    assert!(checked >= 10);
}

#[test]
fn monte_carlo_agrees_with_oracle() {
    let mut c = ExperimentConfig::defaults(Scenario::Localise);
    c.t = vec![300.0];
    c.landscapes = 12;
    c.paths = 400;
    let report = run_with_threads(&c).unwrap();
    let a = report.assertion("mc_matches_oracle_t_300").unwrap();
    assert!(a.passed, "{}", a.detail);
    let within = report.rows_for("mc_landscapes_within_3se")[0];
    assert!(within.estimate >= 0.9);
}

#[test]
fn split_law_detail_is_consistent() {
    let mut c = ExperimentConfig::defaults(Scenario::SplitLaw);
    c.t = vec![1e4];
    c.landscapes = 30;
    let report = run_with_threads(&c).unwrap();
    for line in &report.detail {
        let f: Vec<&str> = line.split(',').collect();
        let (p_gamma, p1, p2): (f64, f64, f64) = (f[8].parse().unwrap(), f[9].parse().unwrap(), f[10].parse().unwrap());
        assert!((p_gamma - p1 - p2).abs() < 1e-12);
        assert!((0.0..=1.0 + 1e-12).contains(&p_gamma));
    }
}
