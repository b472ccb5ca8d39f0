//! `tir-ipw`: estimate and compare mean time-in-range from intermittently
//! observed glucose trajectories under informative follow-up.

mod commands;
mod data;
mod opts;
mod ranges;
mod report;
mod scenario_file;

use clap::{Parser, Subcommand};

use crate::opts::CommonOpts;

#[derive(Parser)]
#[command(
    name = "tir-ipw",
    version,
    about = "Mean time-in-range estimation under intermittent and informative missingness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate mean TIR for one cohort with bootstrap inference.
    Estimate(CommonOpts),
    /// Compare mean TIR across two or more cohorts with Wald tests.
    Compare(CommonOpts),
    /// Generate a synthetic dataset from a scenario and write it as CSVs.
    Simulate(CommonOpts),
    /// Run the Monte Carlo replication harness over a scenario.
    Replicate(CommonOpts),
}

fn main() {
    let cli = Cli::parse();
    if let Ok(value) = std::env::var("TIR_IPW_THREADS") {
        match value.trim().parse::<usize>() {
            Ok(n) if n > 0 => tir_core::exec::configure_threads(Some(n)),
            _ => {
                eprintln!("error: TIR_IPW_THREADS must be a positive integer, got `{value}`");
                std::process::exit(2);
            }
        }
    }
    let result = match cli.command {
        Command::Estimate(opts) => commands::estimate::run(opts),
        Command::Compare(opts) => commands::compare::run(opts),
        Command::Simulate(opts) => commands::simulate::run(opts),
        Command::Replicate(opts) => commands::replicate::run(opts),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
