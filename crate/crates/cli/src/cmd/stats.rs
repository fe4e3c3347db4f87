use anyhow::{Context, Result};
use qctriage::ledger::{summarize, ResultsTable};

use crate::config::RunConfig;
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Machine-readable CSV instead of an aligned table.
    #[arg(long)]
    pub csv: bool,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<Outcome> {
    let archive = config.archive()?;
    let ledgers = archive
        .ledgers()
        .with_context(|| format!("listing {}", archive.root().display()))?;
    if ledgers.is_empty() {
        println!("no ledgers in {}", archive.root().display());
        return Ok(Outcome::Done);
    }
    let mut rows = Vec::new();
    for l in &ledgers {
        let t = ResultsTable::load(&l.path)?;
        rows.push((l, summarize(&t)));
    }
    if args.csv {
        println!("dataset,pipeline,total,yes,no,maybe,failure_rate");
        for (l, s) in &rows {
            let c = s.counts;
            println!("{},{},{},{},{},{},{:.4}", l.dataset, l.pipeline, c.total(), c.yes, c.no, c.maybe, s.failure_rate);
        }
        return Ok(Outcome::Done);
    }
    let dw = rows.iter().map(|(l, _)| l.dataset.len()).max().unwrap_or(0).max("dataset".len());
    let pw = rows.iter().map(|(l, _)| l.pipeline.len()).max().unwrap_or(0).max("pipeline".len());
    println!("{:<dw$}  {:<pw$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>6}", "dataset", "pipeline", "total", "yes", "no", "maybe", "rate");
    for (l, s) in &rows {
        let c = s.counts;
        println!(
            "{:<dw$}  {:<pw$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>6.2}",
            l.dataset,
            l.pipeline,
            c.total(),
            c.yes,
            c.no,
            c.maybe,
            s.failure_rate
        );
    }
    Ok(Outcome::Done)
}
