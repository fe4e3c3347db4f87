use anyhow::{Context, Result};
use qctriage::dataset::scan_dataset;
use qctriage::fsutil::write_if_changed;

use crate::config::RunConfig;
use crate::Outcome;

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let root = config.data_root()?;
    let archive = config.archive()?;
    let manifest = scan_dataset(root).with_context(|| format!("scanning {}", root.display()))?;
    let path = archive.manifest_path(&manifest.dataset);
    std::fs::create_dir_all(path.parent().expect("manifest has a parent"))
        .with_context(|| format!("creating {}", archive.root().display()))?;
    let changed = write_if_changed(&path, manifest.to_json().as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;

    println!(
        "{}: {} items, {} excluded -> {}{}",
        manifest.dataset,
        manifest.items.len(),
        manifest.exclusions.len(),
        path.display(),
        if changed { "" } else { " (unchanged)" }
    );
    for item in manifest.items.iter().filter(|i| !i.flags.is_empty()) {
        println!("  flagged   {}  {}", item.image, item.flags.join(","));
    }
    for ex in &manifest.exclusions {
        println!("  excluded  {}  {}", ex.path, ex.reason);
    }
    Ok(Outcome::Done)
}
