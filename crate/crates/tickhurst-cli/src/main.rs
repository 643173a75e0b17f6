// `!(x > 0.0)` guards reject NaN as well as nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Command-line pipeline over the tickhurst library.
//!
//! Subcommands: `ingest` (quote parsing and arrival crosstab), `returns`
//! (time-adjusted return construction), `analyze` (local/global Hurst,
//! scramble bootstrap, hourly tables, figure data), `bootstrap` (bootstrap
//! and Z-tests only), `simulate` (synthetic series), and `report` (one-shot
//! ingest + analyze).
//!
//! Settings resolve as flags > config file (TOML, `--config`) > defaults.
//! Every command
//! writes its artifacts plus a `manifest.json` listing each file with its
//! SHA-256, so identical inputs and settings yield byte-identical runs.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 data error,
//! 3 internal error.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use tickhurst::Error;

#[derive(Parser)]
#[command(name = "tickhurst", version, about = "Local and global Hurst-exponent analysis of irregular quote series", propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a quote CSV; emit the hour × weekday arrival crosstab,
    /// rejected rows, and an ingest summary
    Ingest(config::IngestArgs),
    /// Build the time-adjusted return series from a quote CSV
    Returns(config::ReturnsArgs),
    /// Full analysis: local/global Hurst, scramble bootstrap with Z-tests,
    /// hourly decomposition and profile tables, figure data
    Analyze(config::AnalyzeArgs),
    /// Scramble bootstrap and Z-tests only
    Bootstrap(config::BootstrapArgs),
    /// Generate a synthetic series (fractional Gaussian noise or IID
    /// Gaussian) in the shared returns schema
    Simulate(config::SimulateArgs),
    /// One-shot pipeline: ingest artifacts plus the full analysis set in
    /// one directory
    Report(config::AnalyzeArgs),
}

fn error_kind(error: &Error) -> &'static str {
    match error {
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Config(_) => "config",
        Error::Data(_) => "data",
        Error::Degenerate(_) => "degenerate",
        Error::Internal(_) => "internal",
    }
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) => 1,
        Error::Io(_) | Error::Csv(_) | Error::Data(_) | Error::Degenerate(_) => 2,
        Error::Internal(_) => 3,
    }
}

fn run(cli: Cli) -> tickhurst::Result<()> {
    match cli.command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Returns(args) => commands::returns(args),
        Command::Analyze(args) => commands::analyze(args, commands::AnalyzeScope::AnalysisOnly),
        Command::Bootstrap(args) => commands::bootstrap(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Report(args) => commands::analyze(args, commands::AnalyzeScope::WithIngest),
    }
}

fn main() {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        use clap::error::ErrorKind;
        let code = match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
            _ => 1,
        };
        let _ = e.print();
        std::process::exit(code);
    });
    if let Err(error) = run(cli) {
        // machine-readable error report on stderr
        eprintln!(
            "{}",
            serde_json::json!({ "error": error_kind(&error), "message": error.to_string() })
        );
        std::process::exit(exit_code(&error));
    }
}
