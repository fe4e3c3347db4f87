//! QC archive layout. Everything the tools write lives under one root kept
//! apart from the raw and derived data:
//!
//! ```text
//! <archive>/<dataset>/manifest.json
//! <archive>/<dataset>/<dataset>__<pipeline>__qc.csv
//! <archive>/<dataset>/<dataset>__<pipeline>__preflight.csv
//! <archive>/<dataset>/<pipeline>/<stem>[__<sub_output>].png
//! ```
//!
//! Paths stored in ledgers are relative to the archive root.

use std::path::{Path, PathBuf};

use crate::ledger::{ledger_file_name, parse_ledger_file_name};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Archive {
    root: PathBuf,
}

/// A ledger found in the archive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LedgerRef {
    pub dataset: String,
    pub pipeline: String,
    pub path: PathBuf,
}

impl Archive {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Archive { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset_dir(&self, dataset: &str) -> PathBuf {
        self.root.join(dataset)
    }

    pub fn manifest_path(&self, dataset: &str) -> PathBuf {
        self.dataset_dir(dataset).join("manifest.json")
    }

    pub fn ledger_path(&self, dataset: &str, pipeline: &str) -> PathBuf {
        self.dataset_dir(dataset).join(ledger_file_name(dataset, pipeline))
    }

    pub fn preflight_path(&self, dataset: &str, pipeline: &str) -> PathBuf {
        self.dataset_dir(dataset).join(format!("{dataset}__{pipeline}__preflight.csv"))
    }

    /// PNG location relative to the archive root, `/`-separated.
    pub fn png_rel_path(dataset: &str, pipeline: &str, stem: &str, sub_output: Option<&str>) -> String {
        match sub_output {
            Some(o) => format!("{dataset}/{pipeline}/{stem}__{o}.png"),
            None => format!("{dataset}/{pipeline}/{stem}.png"),
        }
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        rel.split('/').fold(self.root.clone(), |p, part| p.join(part))
    }

    /// All ledgers, sorted by dataset then pipeline. A missing archive
    /// root yields an empty list.
    pub fn ledgers(&self) -> std::io::Result<Vec<LedgerRef>> {
        let mut out = Vec::new();
        let datasets = match std::fs::read_dir(&self.root) {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e),
        };
        for ds in datasets {
            let ds = ds?;
            if !ds.file_type()?.is_dir() {
                continue;
            }
            let ds_name = ds.file_name().to_string_lossy().into_owned();
            for f in std::fs::read_dir(ds.path())? {
                let f = f?;
                let name = f.file_name().to_string_lossy().into_owned();
                if let Some((dataset, pipeline)) = parse_ledger_file_name(&name) {
                    if dataset == ds_name && f.file_type()?.is_file() {
                        out.push(LedgerRef {
                            dataset,
                            pipeline,
                            path: f.path(),
                        });
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let a = Archive::new("/qc");
        assert_eq!(a.ledger_path("ds", "prequal"), Path::new("/qc/ds/ds__prequal__qc.csv"));
        assert_eq!(a.preflight_path("ds", "prequal"), Path::new("/qc/ds/ds__prequal__preflight.csv"));
        assert_eq!(
            Archive::png_rel_path("ds", "tractseg", "sub-01_dwi", Some("AF_left")),
            "ds/tractseg/sub-01_dwi__AF_left.png"
        );
        assert_eq!(a.resolve("ds/p/x.png"), Path::new("/qc/ds/p/x.png"));
    }

    #[test]
    fn finds_ledgers_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let a = Archive::new(dir.path());
        for (ds, p) in [("b", "x"), ("a", "z"), ("a", "y")] {
            std::fs::create_dir_all(a.dataset_dir(ds)).unwrap();
            std::fs::write(a.ledger_path(ds, p), "").unwrap();
        }
        std::fs::write(a.preflight_path("a", "y"), "").unwrap();
        let found: Vec<_> = a.ledgers().unwrap().into_iter().map(|l| (l.dataset, l.pipeline)).collect();
        assert_eq!(
            found,
            vec![("a".into(), "y".into()), ("a".into(), "z".into()), ("b".into(), "x".into())]
        );
        assert!(Archive::new(dir.path().join("nope")).ledgers().unwrap().is_empty());
    }
}
