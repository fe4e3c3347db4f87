//! Automated quantitative checks run before human review.
//!
//! Results only mark items as suspect in the review queue; they never set a
//! verdict.

mod connectome;
mod decay;
mod mad;
mod ranges;
mod report;
mod runner;
mod shells;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use connectome::{check_connectome, Connectome, ConnectomeConfig, Weighting};
pub use decay::{check_signal_decay, DecayConfig, DecayFit};
pub use mad::{mad_outliers, DEFAULT_MAD_K};
pub use ranges::{
    check_bvec_norms, check_scalar_range, RangeInput, RangeKind, BUNDLE_FA_RANGE, MAP_OUTLIER_FRACTION,
    THICKNESS_RANGE,
};
pub use report::{PreflightReport, REPORT_HEADER};
pub use runner::{batch_outliers, run_preflight, CheckKind, PreflightConfig, PreflightItem, PreflightSpec, ScalarSource};
pub use shells::{shell_group, Shell, DEFAULT_SHELL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Flag,
    NotApplicable,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Flag => "flag",
            CheckStatus::NotApplicable => "not_applicable",
        }
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckStatus {
    type Err = PreflightError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass" => Ok(CheckStatus::Pass),
            "flag" => Ok(CheckStatus::Flag),
            "not_applicable" => Ok(CheckStatus::NotApplicable),
            other => Err(PreflightError::Parse(format!("check status {other:?}"))),
        }
    }
}

/// Outcome of one check. A flag always carries a non-empty detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_name: String,
    pub status: CheckStatus,
    pub metric: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn pass(name: &str, metric: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            check_name: name.to_string(),
            status: CheckStatus::Pass,
            metric,
            threshold,
            detail: detail.into(),
        }
    }

    pub fn flag(name: &str, metric: f64, threshold: f64, detail: impl Into<String>) -> Self {
        let mut detail = detail.into();
        if detail.is_empty() {
            detail = "flagged".into();
        }
        CheckResult {
            check_name: name.to_string(),
            status: CheckStatus::Flag,
            metric,
            threshold,
            detail,
        }
    }

    pub fn not_applicable(name: &str, detail: impl Into<String>) -> Self {
        CheckResult {
            check_name: name.to_string(),
            status: CheckStatus::NotApplicable,
            metric: f64::NAN,
            threshold: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn is_flag(&self) -> bool {
        self.status == CheckStatus::Flag
    }
}

#[derive(Debug, Error)]
pub enum PreflightError {
    #[error("{volumes} volumes but {bvals} b-values")]
    CountMismatch { volumes: usize, bvals: usize },
    #[error("foreground mask is empty")]
    AllBackground,
    #[error("unknown kind {0:?}")]
    UnknownKind(String),
    #[error("wrong input: {0}")]
    InputMismatch(String),
    #[error("matrix is not square: {0}")]
    NotSquare(String),
    #[error("empty input")]
    EmptyInput,
    #[error("parse: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
