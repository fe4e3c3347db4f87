//! BIDS dataset discovery: filename entities, gradient tables, the DWI
//! pre-filter and the scan manifest.

mod entities;
mod filter;
mod gradients;
mod scan;

use std::path::PathBuf;

use thiserror::Error;

pub use entities::{parse_entities, EntityMap};
pub use filter::{prefilter, CompanionRule, DwiCandidate, FilterDecision, MIN_DWI_VOLUMES};
pub use gradients::{load_gradients, parse_bvals, parse_bvecs, GradientTable, B0_THRESHOLD};
pub use scan::{scan_dataset, Exclusion, Manifest, ManifestItem};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("{0}: no sub- entity")]
    MissingSubject(String),
    #[error("{0}: no suffix")]
    NoSuffix(String),
    #[error("entity {0:?} appears twice")]
    DuplicateEntity(String),
    #[error("bad filename: {0}")]
    BadFilename(String),
    #[error("{bvals} b-values but {bvecs} b-vectors")]
    CountMismatch { bvals: usize, bvecs: usize },
    #[error("{path}: cannot parse {token:?} as a number")]
    UnparseableNumber { path: PathBuf, token: String },
    #[error("{0}: empty file")]
    EmptyFile(PathBuf),
    #[error("{0}: b-vectors must be 3×N or N×3")]
    BadShape(PathBuf),
    #[error("{0}: not a directory")]
    NotADirectory(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
