//! HTTP backend for the review loop.
//!
//! [`ReviewService`] holds the ledgers and a byte-bounded PNG cache and is
//! usable without a runtime; [`router`] and [`serve`] expose it over HTTP:
//!
//! | route | |
//! |---|---|
//! | `GET /api/queues` | queue list with totals, non-yes and suspect counts |
//! | `GET /api/queues/{dataset}/{pipeline}` | items in ledger order |
//! | `GET /api/png/{item_id}` | PNG bytes, `ETag`, `304` on `If-None-Match` |
//! | `POST /api/verdict` | `{item_id, status, note, user}`, durable before reply |
//! | `GET /api/progress/{dataset}/{pipeline}` | counts and last activity |

mod cache;
mod http;
mod state;

use std::path::PathBuf;

use thiserror::Error;

use crate::ledger::LedgerError;

pub use cache::{CachedPng, PngCache};
pub use http::{router, serve};
pub use state::{
    PngHit, Progress, QcItem, QueueState, QueueSummary, ReviewService, ServiceConfig, VerdictAck, DEFAULT_CACHE_MB,
    DEFAULT_READ_AHEAD,
};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("QC archive {0} does not exist")]
    ArchiveMissing(PathBuf),
    #[error("unknown queue {0}")]
    UnknownQueue(String),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("PNG for {0} is no longer in the archive")]
    FileVanished(String),
    #[error("{0} is read-only on this instance")]
    ReadOnly(String),
    #[error("invalid status {0:?}")]
    InvalidStatus(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("ledger: {0}")]
    Ledger(LedgerError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl From<LedgerError> for ServiceError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::InvalidStatus(s) => ServiceError::InvalidStatus(s),
            LedgerError::UnknownItem(s) => ServiceError::UnknownItem(s),
            other => ServiceError::Ledger(other),
        }
    }
}

impl ServiceError {
    /// Stable machine-readable name used in JSON error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::ArchiveMissing(_) => "ArchiveMissing",
            ServiceError::UnknownQueue(_) => "UnknownQueue",
            ServiceError::UnknownItem(_) => "UnknownItem",
            ServiceError::FileVanished(_) => "FileVanished",
            ServiceError::ReadOnly(_) => "ReadOnly",
            ServiceError::InvalidStatus(_) => "InvalidStatus",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::Ledger(_) => "Ledger",
            ServiceError::Io(..) => "Io",
            ServiceError::Internal(_) => "Internal",
        }
    }
}
