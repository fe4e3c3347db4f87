use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qctriage::archive::Archive;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_root: Option<PathBuf>,
    pub archive: Option<PathBuf>,
    pub recipes: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn absolute(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()))
}

impl RunConfig {
    /// The data root and archive must be distinct, non-nested directories.
    pub fn validate(&self) -> Result<()> {
        if let (Some(d), Some(a)) = (&self.data_root, &self.archive) {
            let (d, a) = (absolute(d), absolute(a));
            if d == a || a.starts_with(&d) || d.starts_with(&a) {
                bail!(
                    "the QC archive ({}) must be kept apart from the data root ({})",
                    a.display(),
                    d.display()
                );
            }
        }
        if self.workers == Some(0) {
            bail!("--workers must be at least 1");
        }
        Ok(())
    }

    pub fn init_workers(&self) -> Result<()> {
        if let Some(n) = self.workers {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring worker pool")?;
        }
        Ok(())
    }

    pub fn data_root(&self) -> Result<&Path> {
        let d = self.data_root.as_deref().context("--data-root (or QCT_DATA_ROOT) is required")?;
        if !d.is_dir() {
            bail!("data root {} is not a readable directory", d.display());
        }
        Ok(d)
    }

    pub fn archive(&self) -> Result<Archive> {
        let a = self.archive.as_deref().context("--archive (or QCT_ARCHIVE) is required")?;
        Ok(Archive::new(a))
    }

    pub fn recipe_path(&self, pipeline: &str) -> Result<PathBuf> {
        let r = self.recipes.as_deref().context("--recipes (or QCT_RECIPES) is required")?;
        let p = r.join(format!("{pipeline}.toml"));
        if !p.is_file() {
            bail!("recipe {pipeline:?} not found at {}", p.display());
        }
        Ok(p)
    }

    /// Dataset label: explicit, else the data root's directory name.
    pub fn dataset(&self, explicit: Option<&str>) -> Result<String> {
        if let Some(d) = explicit {
            return Ok(d.to_string());
        }
        let root = self.data_root()?;
        absolute(root)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .context("cannot name the dataset from the data root; pass --dataset")
    }
}
