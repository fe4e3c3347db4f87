//! The verdict ledger: one RFC 4180 CSV per (dataset, pipeline), rewritten
//! atomically on every verdict, plus deterministic merging of ledgers from
//! several reviewers or sites.

mod lock;
mod ops;
mod table;
mod verdict;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use lock::{hostname, lock_path, LedgerLock};
pub use ops::{
    compare_rows, init_results, merge_results, summarize, InitItem, MergeReport, StatusCounts, Summary,
    MISSING_OUTPUTS_NOTE,
};
pub use table::{ItemId, ResultsRow, ResultsTable, CSV_HEADER};
pub use verdict::{format_timestamp, parse_timestamp, Status, Verdict, CLOCK_SKEW_SECS};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("invalid status {0:?}; expected yes, no or maybe")]
    InvalidStatus(String),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("duplicate item id {0}")]
    DuplicateItemId(String),
    #[error("no items to initialize")]
    EmptyManifest,
    #[error("bad timestamp {0}")]
    BadTimestamp(String),
    #[error("timestamp {0} is in the future")]
    FutureTimestamp(String),
    #[error("png_path must be relative: {0}")]
    AbsolutePath(String),
    #[error("unexpected header: {0}")]
    BadHeader(String),
    #[error("bad row: {0}")]
    BadRow(String),
    #[error("{path} is locked by {owner}")]
    Locked { path: PathBuf, owner: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        source: Box<LedgerError>,
    },
}

impl LedgerError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        LedgerError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn in_file(self, path: &Path) -> Self {
        LedgerError::InFile {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }
}

/// `<dataset>__<pipeline>__qc.csv`.
pub fn ledger_file_name(dataset: &str, pipeline: &str) -> String {
    format!("{dataset}__{pipeline}__qc.csv")
}

/// Inverse of [`ledger_file_name`].
pub fn parse_ledger_file_name(name: &str) -> Option<(String, String)> {
    let stem = name.strip_suffix("__qc.csv")?;
    let (dataset, pipeline) = stem.split_once("__")?;
    (!dataset.is_empty() && !pipeline.is_empty() && !pipeline.contains("__"))
        .then(|| (dataset.to_string(), pipeline.to_string()))
}
