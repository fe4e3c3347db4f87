use std::collections::BTreeSet;

use anyhow::{bail, Context, Result};
use qctriage::archive::Archive;
use qctriage::fsutil::write_if_changed;
use qctriage::ledger::{init_results, InitItem, LedgerLock, ResultsTable, MISSING_OUTPUTS_NOTE};
use qctriage::render::{render_recipe, RenderError};
use qctriage::RenderRecipe;
use rayon::prelude::*;

use super::{jobs, load_manifest};
use crate::config::RunConfig;
use crate::Outcome;

/// Attribution for rows created by the tool rather than a reviewer.
pub const SYSTEM_USER: &str = "system";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Pipeline name; the recipe is `<recipes>/<pipeline>.toml`.
    pub pipeline: String,
    /// Dataset label; defaults to the data root's directory name.
    #[arg(long)]
    pub dataset: Option<String>,
}

enum Rendered {
    Written,
    Unchanged,
    Missing(String),
    Failed(String),
}

pub fn run(config: &RunConfig, args: &Args) -> Result<Outcome> {
    let data_root = config.data_root()?;
    let archive = config.archive()?;
    let recipe_path = config.recipe_path(&args.pipeline)?;
    let recipe = RenderRecipe::load(&recipe_path).with_context(|| format!("loading recipe {:?}", args.pipeline))?;
    let dataset = config.dataset(args.dataset.as_deref())?;
    let manifest = load_manifest(&archive, &dataset)?;
    let jobs = jobs(&manifest, &recipe, &args.pipeline, data_root);
    if jobs.is_empty() {
        bail!("recipe {:?} applies to none of the {} manifest items", args.pipeline, manifest.items.len());
    }

    let ledger_path = archive.ledger_path(&dataset, &args.pipeline);
    std::fs::create_dir_all(archive.dataset_dir(&dataset))
        .with_context(|| format!("creating {}", archive.dataset_dir(&dataset).display()))?;
    let _lock = LedgerLock::acquire(&ledger_path)?;

    let results: Vec<(InitItem, Rendered)> = jobs
        .par_iter()
        .map(|job| {
            let rel = Archive::png_rel_path(&dataset, &args.pipeline, &job.item.entities.stem(), job.sub_output.as_deref());
            let outcome = match render_recipe(&recipe, &job.ctx) {
                Ok(bytes) => {
                    let path = archive.resolve(&rel);
                    let write = std::fs::create_dir_all(path.parent().expect("png has a parent"))
                        .and_then(|_| write_if_changed(&path, &bytes));
                    match write {
                        Ok(true) => Rendered::Written,
                        Ok(false) => Rendered::Unchanged,
                        Err(e) => Rendered::Failed(format!("writing {}: {e}", path.display())),
                    }
                }
                Err(RenderError::MissingInput(pattern)) => Rendered::Missing(pattern),
                Err(e) => Rendered::Failed(e.to_string()),
            };
            let failure = match &outcome {
                Rendered::Written | Rendered::Unchanged => None,
                Rendered::Missing(_) => Some(MISSING_OUTPUTS_NOTE.to_string()),
                Rendered::Failed(msg) => Some(format!("render failed: {msg}")),
            };
            let init = InitItem {
                entities: job.item.entities.clone(),
                pipeline: args.pipeline.clone(),
                sub_output: job.sub_output.clone(),
                png_path: rel,
                failure,
            };
            (init, outcome)
        })
        .collect();

    let (mut written, mut unchanged, mut missing, mut failed) = (0, 0, 0, 0);
    for ((_, r), job) in results.iter().zip(&jobs) {
        match r {
            Rendered::Written => written += 1,
            Rendered::Unchanged => unchanged += 1,
            Rendered::Missing(p) => {
                missing += 1;
                log::warn!("{}: missing output {p}", job.id);
            }
            Rendered::Failed(msg) => {
                failed += 1;
                log::error!("{}: {msg}", job.id);
            }
        }
    }

    // existing verdicts are never reset; only new items get initial rows
    let inits: Vec<InitItem> = results.into_iter().map(|(i, _)| i).collect();
    let added = if ledger_path.exists() {
        let mut table = ResultsTable::load(&ledger_path)?;
        let known: BTreeSet<String> = table.rows.keys().map(|k| k.to_string()).collect();
        let fresh: Vec<InitItem> = inits
            .into_iter()
            .zip(&jobs)
            .filter(|(_, j)| !known.contains(j.id.as_str()))
            .map(|(i, _)| i)
            .collect();
        if fresh.is_empty() {
            0
        } else {
            for row in init_results(&fresh, SYSTEM_USER)?.rows.into_values() {
                table.insert(row)?;
            }
            table.save(&ledger_path)?;
            fresh.len()
        }
    } else {
        let table = init_results(&inits, SYSTEM_USER)?;
        table.save(&ledger_path)?;
        table.len()
    };

    println!(
        "{dataset}/{}: {} rendered ({written} written, {unchanged} unchanged), {missing} missing outputs, {failed} failed; {added} new ledger rows in {}",
        args.pipeline,
        written + unchanged,
        ledger_path.display()
    );
    Ok(if written + unchanged == 0 {
        Outcome::Partial
    } else {
        Outcome::Done
    })
}
