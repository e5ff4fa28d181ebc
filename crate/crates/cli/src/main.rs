//! `tlsdyn`: simulate spectroscopy campaigns, estimate T1, run the
//! statistics and track defect features.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.
//! The output directory is `--out`, else `$TLSDYN_OUT_DIR`, else the
//! config's `output_dir`, else the working directory.

mod estimate;
mod output;
mod simulate;
mod stats;
mod track;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "tlsdyn",
    version,
    about = "TLS fluctuation campaigns and T1 estimators"
)]
struct Cli {
    /// Directory for all outputs.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a campaign from a JSON config.
    Simulate(simulate::Args),
    /// Per-qubit estimator table from a map and a T1 series.
    Estimate(estimate::Args),
    /// Statistical reports.
    #[command(subcommand)]
    Stats(stats::Command),
    /// Extract minima and fit feature linewidths.
    Track(track::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a, cli.out),
        Command::Estimate(a) => estimate::run(a, cli.out),
        Command::Stats(c) => stats::run(c, cli.out),
        Command::Track(a) => track::run(a, cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
