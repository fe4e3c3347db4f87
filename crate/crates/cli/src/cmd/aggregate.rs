use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use qctriage::ledger::{merge_results, ResultsTable};

use crate::config::RunConfig;
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Merged CSV to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Only ledgers of this dataset.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Ledger files to merge instead of those in the archive.
    pub inputs: Vec<PathBuf>,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<Outcome> {
    let paths: Vec<PathBuf> = if args.inputs.is_empty() {
        let archive = config.archive()?;
        archive
            .ledgers()
            .with_context(|| format!("listing {}", archive.root().display()))?
            .into_iter()
            .filter(|l| args.dataset.as_ref().is_none_or(|d| *d == l.dataset))
            .map(|l| l.path)
            .collect()
    } else {
        args.inputs.clone()
    };
    if paths.is_empty() {
        bail!("no ledgers found to aggregate");
    }
    let tables = paths
        .iter()
        .map(|p| ResultsTable::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let (merged, report) = merge_results(&tables);
    merged.save(&args.output)?;
    eprintln!(
        "merged {} rows from {} ledgers into {}; {} conflicts resolved",
        merged.len(),
        tables.len(),
        args.output.display(),
        report.conflicts
    );
    for id in &report.conflicting_items {
        log::info!("conflict resolved for {id}");
    }
    Ok(Outcome::Done)
}
