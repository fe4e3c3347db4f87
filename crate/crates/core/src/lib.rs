//! Quality-control triage for large imaging datasets.
//!
//! The crate covers the whole offline half of the workflow plus the review
//! backend:
//!
//! * [`nifti`] loads NIfTI-1 volumes and reorients them to closest-to-RAS.
//! * [`dataset`] walks BIDS trees and applies the DWI pre-filter.
//! * [`render`] turns volumes into deterministic QC PNGs from recipes.
//! * [`preflight`] runs quantitative sanity checks that pre-flag items.
//! * [`ledger`] keeps the Yes/No/Maybe verdicts in per-pipeline CSV files.
//! * [`service`] serves queues, PNGs and verdict writes over HTTP.

pub mod archive;
pub mod dataset;
pub mod fsutil;
pub mod ledger;
pub mod nifti;
pub mod preflight;
pub mod render;
pub mod service;
pub mod stats;

pub use dataset::{EntityMap, GradientTable, Manifest, ManifestItem};

pub use nifti::{Volume, VolumeHeader};

pub use ledger::{ItemId, ResultsRow, ResultsTable, Status, Verdict};
pub use preflight::{CheckResult, CheckStatus};
pub use render::{Image2D, RenderRecipe};
