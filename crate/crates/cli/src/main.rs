//! Command-line front-end for the anti-profile SVM toolkit.
//!
//! Exit codes: 0 on success, 2 on input/validation errors, 3 on
//! numerical/convergence errors. All diagnostics go to stderr; set the
//! `APSVM_LOG` environment variable (error/warn/info/debug) to control
//! verbosity.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use apsvm::{ErrorKind, Result};
use clap::{Parser, Subcommand};

use crate::config::{pick, FileConfig};

#[derive(Parser, Debug)]
#[command(name = "apsvm", version, about = "Anti-profile SVM toolkit")]
struct Cli {
    /// JSON config file; explicit flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for anything randomized (simulation, bandwidth draws,
    /// subsampling). Defaults to 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the benchmark sweep. Defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a classifier and write model.json.
    Train(commands::train::TrainArgs),
    /// Score a CSV against a saved model.
    Predict(commands::predict::PredictArgs),
    /// Draw the three-class Gaussian simulation as CSV.
    Simulate(commands::simulate::SimulateArgs),
    /// Heterogeneity diagnostics and exploratory views.
    Diagnose(commands::diagnose::DiagnoseArgs),
    /// Repeated simulation sweep comparing both modes.
    Benchmark(commands::benchmark::BenchmarkArgs),
    /// Variance-ratio feature ranking.
    RankFeatures(commands::rank::RankArgs),
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = pick(cli.seed, file.seed, 0);
    if let Some(threads) = pick(cli.threads, file.threads, 0).checked_sub(1) {
        // An explicit --threads >= 1; 0 or absent keeps rayon's default.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads + 1)
            .build_global();
    }

    match cli.command {
        Command::Train(args) => commands::train::run(args, &file, seed),
        Command::Predict(args) => commands::predict::run(args),
        Command::Simulate(args) => commands::simulate::run(args, &file, seed),
        Command::Diagnose(args) => commands::diagnose::run(args, &file, seed),
        Command::Benchmark(args) => commands::benchmark::run(args, &file, seed),
        Command::RankFeatures(args) => commands::rank::run(args, &file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("APSVM_LOG", "info"))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            match error.kind() {
                ErrorKind::Input => ExitCode::from(2),
                ErrorKind::Numerical => ExitCode::from(3),
            }
        }
    }
}
