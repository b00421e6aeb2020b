use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slowtrap::experiments::{run_and_write, ExperimentConfig, Scenario};

/// Trap model experiments on slowly varying landscapes.
#[derive(Parser)]
#[command(name = "slowtrap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distribution over landscapes of P(X_t in Gamma_t).
    Localise(Common),
    /// Split of the mass between the two localisation sites.
    SplitLaw(Common),
    /// Law of the localisation sites scaled by r_t.
    GammaScaling(Common),
    /// Frequencies of the landscape events A, B and C.
    Events(Common),
    /// Sum/max statistics and first exceedences of i.i.d. sequences.
    Extremes(Common),
    /// Uniformization oracle against ODE integration and Monte Carlo.
    PmfCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Time value; repeat for several.
    #[arg(long = "t")]
    t: Vec<f64>,
}

fn build(scenario: Scenario, args: Common) -> slowtrap::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::parse(scenario, &std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::defaults(scenario),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(d) = args.out_dir {
        config.out_dir = d;
    }
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    if !args.t.is_empty() {
        config.t = args.t;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Localise(a) => (Scenario::Localise, a),
        Command::SplitLaw(a) => (Scenario::SplitLaw, a),
        Command::GammaScaling(a) => (Scenario::GammaScaling, a),
        Command::Events(a) => (Scenario::Events, a),
        Command::Extremes(a) => (Scenario::Extremes, a),
        Command::PmfCheck(a) => (Scenario::PmfCheck, a),
    };
    let report = match build(scenario, args).and_then(|c| run_and_write(&c)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for a in &report.assertions {
        println!("{} {}: {}", if a.passed { "ok  " } else { "FAIL" }, a.name, a.detail);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
