use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use esq_cli::commands;
use esq_cli::config::parse_config;
use esq_cli::AppError;

#[derive(Parser)]
#[command(
    name = "esq",
    version,
    about = "Experiment runner for infinite-server queues with state-dependent arrivals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the stability conditions and arrival envelopes of a model
    Validate(ConfigArg),
    /// Run replica trajectories and dump events and snapshots
    Simulate(ConfigArg),
    /// Estimate the stationary occupancy law two ways and compare
    Stationary(ConfigArg),
    /// Sample first-emptying and regeneration times with moment estimates
    Hitting(ConfigArg),
    /// Run coupled pairs and estimate the coupling-time survival
    Couple(ConfigArg),
    /// Verify the drift majorant on randomized states
    DriftCheck(ConfigArg),
    /// Bracket the distance to stationarity between two bounds over time
    Convergence(ConfigArg),
    /// Evaluate the explicit constants of the convergence machinery
    Constants(ConfigArg),
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Path to the experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
}

/// Worker-count override; unset means rayon's default.
const WORKERS_ENV: &str = "ESQ_WORKERS";

fn init_workers() {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // failure means a pool already exists, which is fine
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring {WORKERS_ENV}={v:?} (want a positive integer)"),
        }
    }
}

fn run(cli: Cli) -> Result<String, AppError> {
    let (arg, run): (&ConfigArg, fn(&esq_cli::config::ExperimentConfig) -> _) = match &cli.command {
        Command::Validate(a) => (a, commands::validate::run as _),
        Command::Simulate(a) => (a, commands::simulate::run as _),
        Command::Stationary(a) => (a, commands::stationary::run as _),
        Command::Hitting(a) => (a, commands::hitting::run as _),
        Command::Couple(a) => (a, commands::couple::run as _),
        Command::DriftCheck(a) => (a, commands::drift_check::run as _),
        Command::Convergence(a) => (a, commands::convergence::run as _),
        Command::Constants(a) => (a, commands::constants::run as _),
    };
    let text = std::fs::read_to_string(&arg.config)?;
    let cfg = parse_config(&text)?;
    run(&cfg)
}

fn main() -> ExitCode {
    init_workers();
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
