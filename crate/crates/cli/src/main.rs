//! `qct`: the QC triage workflow as one multiplexed binary.
//!
//! Exit codes: 0 success, 1 partial failure, 2 usage or environment error.

mod cmd;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "qct", version, about = "QC triage for large imaging datasets")]
struct Cli {
    /// BIDS dataset root.
    #[arg(long, global = true, env = "QCT_DATA_ROOT")]
    data_root: Option<PathBuf>,
    /// QC archive root, kept apart from the data.
    #[arg(long, global = true, env = "QCT_ARCHIVE")]
    archive: Option<PathBuf>,
    /// Directory of `<pipeline>.toml` recipes.
    #[arg(long, global = true, env = "QCT_RECIPES")]
    recipes: Option<PathBuf>,
    /// Parallel workers for render and preflight; defaults to logical cores.
    #[arg(long, global = true, env = "QCT_WORKERS")]
    workers: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Walk the data root and write the manifest into the archive.
    Scan,
    /// Render QC PNGs for one pipeline and initialize its ledger.
    Render(cmd::render::Args),
    /// Run quantitative checks for one pipeline.
    Preflight(cmd::preflight::Args),
    /// Serve the review API and UI.
    Serve(cmd::serve::Args),
    /// Merge ledgers into one CSV.
    Aggregate(cmd::aggregate::Args),
    /// Per-pipeline counts and failure rates.
    Stats(cmd::stats::Args),
}

/// Successful runs either completed fully or with some item failures.
pub enum Outcome {
    Done,
    Partial,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let config = RunConfig {
        data_root: cli.data_root,
        archive: cli.archive,
        recipes: cli.recipes,
        workers: cli.workers,
    };
    let result = (|| {
        config.validate()?;
        config.init_workers()?;
        match cli.command {
            Command::Scan => cmd::scan::run(&config),
            Command::Render(a) => cmd::render::run(&config, &a),
            Command::Preflight(a) => cmd::preflight::run(&config, &a),
            Command::Serve(a) => cmd::serve::run(&config, &a),
            Command::Aggregate(a) => cmd::aggregate::run(&config, &a),
            Command::Stats(a) => cmd::stats::run(&config, &a),
        }
    })();
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
