//! Batch driver for analytic curves, simulations and comparisons.

pub mod commands;
pub mod config;

use std::fmt;

use clap::{Parser, Subcommand};

pub use commands::{cmd_analytic, cmd_compare, cmd_density, cmd_simulate, CompareReport, DeltaResult};
pub use config::{Format, Options, OutputOptions, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_THRESHOLD: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values.
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<matern_contact::Error> for CliError {
    fn from(e: matern_contact::Error) -> Self {
        match e {
            matern_contact::Error::InvalidParams(m) => CliError::Usage(m),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "matern-contact",
    version,
    about = "Contact-distance CDFs for Matérn hard-core type-II processes, analytic and simulated",
    after_help = "Exit codes: 0 ok, 1 a sup distance exceeded --threshold, 2 usage error, 3 runtime failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the analytic CDF for each delta (columns r,F,abs_error)
    Analytic(Options),
    /// Simulate and write the pooled empirical CDF (columns r,F_hat,n)
    Simulate(Options),
    /// Simulate, compare with the analytic CDF, and write a report
    Compare(Options),
    /// Closed-form MHC intensity next to the Monte-Carlo estimate
    Density(Options),
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Analytic(o) => cmd_analytic(&o).map(|_| EXIT_OK),
        Command::Simulate(o) => cmd_simulate(&o).map(|_| EXIT_OK),
        Command::Compare(o) => {
            cmd_compare(&o).map(|r| if r.passed { EXIT_OK } else { EXIT_THRESHOLD })
        }
        Command::Density(o) => cmd_density(&o).map(|_| EXIT_OK),
    }
}
