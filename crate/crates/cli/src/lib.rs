//! Command-line front end for `tailbound`: reads an experiment config,
//! computes bounds, runs simulations and writes CSV and JSON reports.
//!
//! Exit codes: 0 on success or a passed check, 1 when a bound is violated or
//! an exponent misses its tolerance, 2 on invalid input or refused estimation.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

pub use commands::Outcome;
pub use config::{ExperimentConfig, Route};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("cannot parse config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] tailbound::Error),
}

impl CliError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tailbound",
    version,
    about = "Modified Bernstein tail bounds and their Monte Carlo verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV and JSON reports
    #[arg(long, global = true, default_value = "tailbound-out")]
    pub out: PathBuf,
    /// Overrides sim.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Never changes results.
    #[arg(long, global = true, env = "TAILBOUND_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Tabulate the bound selected by `route`
    Bound,
    /// Simulate S_n and tabulate its empirical tail
    Simulate,
    /// Check the bound against a simulated tail with a DKW band
    Verify,
    /// Estimate the tail exponent and compare it with min(m, 2)
    Exponent,
    /// Summarize the reports found in the output directory
    Report,
}

/// Runs one command and maps the result onto the exit-code contract.
pub fn run(cli: &Cli) -> i32 {
    match commands::dispatch(cli.command, &cli.common) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
