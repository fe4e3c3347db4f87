pub mod aggregate;
pub mod preflight;
pub mod render;
pub mod scan;
pub mod serve;
pub mod stats;

use std::path::Path;

use anyhow::{bail, Context, Result};
use qctriage::archive::Archive;
use qctriage::ledger::ItemId;
use qctriage::render::RenderContext;
use qctriage::{Manifest, ManifestItem, RenderRecipe};

/// One output of one manifest item under a recipe.
pub struct Job<'a> {
    pub item: &'a ManifestItem,
    pub id: ItemId,
    pub sub_output: Option<String>,
    pub ctx: RenderContext,
}

pub fn load_manifest(archive: &Archive, dataset: &str) -> Result<Manifest> {
    let path = archive.manifest_path(dataset);
    if !path.is_file() {
        bail!("no manifest at {}; run `qct scan` first", path.display());
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Manifest::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Every (item, sub-output) the recipe applies to, in manifest order.
pub fn jobs<'a>(manifest: &'a Manifest, recipe: &RenderRecipe, pipeline: &str, data_root: &Path) -> Vec<Job<'a>> {
    let subs: Vec<Option<String>> = match &recipe.sub_outputs {
        Some(list) => list.iter().cloned().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for item in manifest.items.iter().filter(|i| recipe.applies_to(&i.entities.suffix)) {
        for sub in &subs {
            out.push(Job {
                item,
                id: ItemId::new(&manifest.dataset, pipeline, &item.entities, sub.as_deref()),
                sub_output: sub.clone(),
                ctx: RenderContext {
                    data_root: data_root.to_path_buf(),
                    pipeline: pipeline.to_string(),
                    entities: item.entities.clone(),
                    image: item.image.clone(),
                    sub_output: sub.clone(),
                },
            });
        }
    }
    out
}
