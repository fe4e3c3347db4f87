use anyhow::{Context, Result};
use qctriage::preflight::{batch_outliers, run_preflight, CheckResult, PreflightConfig, PreflightReport, PreflightSpec};
use qctriage::RenderRecipe;
use rayon::prelude::*;

use super::{jobs, load_manifest};
use crate::config::RunConfig;
use crate::Outcome;

/// Checks whose metric is a continuous per-item quantity worth comparing
/// across the batch.
const BATCH_CHECKS: [&str; 3] = ["signal_decay", "cortical_thickness_mean", "bundle_mean_fa"];

#[derive(Debug, clap::Args)]
pub struct Args {
    pub pipeline: String,
    #[arg(long)]
    pub dataset: Option<String>,
    /// MAD multiplier for the batch outlier supplement.
    #[arg(long, default_value_t = qctriage::preflight::DEFAULT_MAD_K)]
    pub mad_k: f64,
    /// Skip the batch outlier supplement.
    #[arg(long)]
    pub no_batch: bool,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<Outcome> {
    let data_root = config.data_root()?;
    let archive = config.archive()?;
    let recipe = RenderRecipe::load(&config.recipe_path(&args.pipeline)?)
        .with_context(|| format!("loading recipe {:?}", args.pipeline))?;
    let dataset = config.dataset(args.dataset.as_deref())?;
    let manifest = load_manifest(&archive, &dataset)?;
    let spec = recipe.preflight.clone().unwrap_or_else(PreflightSpec::default);
    let checks = spec.checks();
    let cfg = PreflightConfig::default();

    let jobs = jobs(&manifest, &recipe, &args.pipeline, data_root);
    let results: Vec<(String, Vec<CheckResult>)> = jobs
        .par_iter()
        .map(|job| {
            let item = spec.item(&job.ctx, job.item, job.id.as_str());
            (job.id.to_string(), run_preflight(&item, &checks, &cfg))
        })
        .collect();

    let path = archive.preflight_path(&dataset, &args.pipeline);
    let report = PreflightReport::open(&path)?;
    for (id, rs) in &results {
        report.record(id, rs);
    }
    if !args.no_batch {
        for check in BATCH_CHECKS {
            let pairs = results.iter().flat_map(|(id, rs)| rs.iter().map(move |r| (id.as_str(), r)));
            let considered: Vec<&str> = pairs
                .clone()
                .filter(|(_, r)| r.check_name == check && r.metric.is_finite())
                .map(|(id, _)| id)
                .collect();
            if considered.len() < 3 {
                continue;
            }
            let outliers = batch_outliers(pairs, check, args.mad_k);
            let name = format!("{check}_batch_mad");
            for id in considered {
                let r = if outliers.iter().any(|o| o == id) {
                    CheckResult::flag(&name, f64::NAN, args.mad_k, format!("{check} metric is a batch outlier"))
                } else {
                    CheckResult::pass(&name, f64::NAN, args.mad_k, "")
                };
                report.record(id, &[r]);
            }
        }
    }
    let changed = report.flush()?;

    let flagged = results.iter().filter(|(_, rs)| rs.iter().any(CheckResult::is_flag)).count();
    println!(
        "{dataset}/{}: {} items checked, {flagged} with flags, {} suspect in report -> {}{}",
        args.pipeline,
        results.len(),
        report.suspect_items().len(),
        path.display(),
        if changed { "" } else { " (unchanged)" }
    );
    Ok(Outcome::Done)
}
