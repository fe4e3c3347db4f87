use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{CheckResult, CheckStatus, PreflightError};

pub const REPORT_HEADER: [&str; 6] = ["item_id", "check_name", "status", "metric", "threshold", "detail"];

type Key = (String, String);

/// Preflight results for one (dataset, pipeline), keyed by item and check.
///
/// Recording the same (item, check) again replaces the earlier row, so a
/// rerun on unchanged inputs leaves the file byte-identical. All writes go
/// through [`PreflightReport::flush`], which holds the lock for the
/// duration of the write.
#[derive(Debug)]
pub struct PreflightReport {
    path: PathBuf,
    rows: Mutex<BTreeMap<Key, CheckResult>>,
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn parse_num(s: &str) -> Result<f64, PreflightError> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| PreflightError::Parse(format!("number {s:?}")))
}

impl PreflightReport {
    /// Open a report, reading existing rows if the file exists.
    pub fn open(path: &Path) -> Result<Self, PreflightError> {
        let rows = if path.exists() {
            Self::read_rows(path)?
        } else {
            BTreeMap::new()
        };
        Ok(PreflightReport {
            path: path.to_path_buf(),
            rows: Mutex::new(rows),
        })
    }

    fn read_rows(path: &Path) -> Result<BTreeMap<Key, CheckResult>, PreflightError> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.iter().ne(REPORT_HEADER) {
            return Err(PreflightError::Parse(format!("{}: unexpected header", path.display())));
        }
        let mut rows = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let r = CheckResult {
                check_name: rec[1].to_string(),
                status: rec[2].parse()?,
                metric: parse_num(&rec[3])?,
                threshold: parse_num(&rec[4])?,
                detail: rec[5].to_string(),
            };
            rows.insert((rec[0].to_string(), r.check_name.clone()), r);
        }
        Ok(rows)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record(&self, item_id: &str, results: &[CheckResult]) {
        let mut rows = self.rows.lock().expect("report lock");
        for r in results {
            rows.insert((item_id.to_string(), r.check_name.clone()), r.clone());
        }
    }

    pub fn results(&self, item_id: &str) -> Vec<CheckResult> {
        let rows = self.rows.lock().expect("report lock");
        rows.iter()
            .filter(|((id, _), _)| id == item_id)
            .map(|(_, r)| r.clone())
            .collect()
    }

    pub fn all(&self) -> Vec<(String, CheckResult)> {
        let rows = self.rows.lock().expect("report lock");
        rows.iter().map(|((id, _), r)| (id.clone(), r.clone())).collect()
    }

    /// Items with at least one flagged check.
    pub fn suspect_items(&self) -> BTreeSet<String> {
        let rows = self.rows.lock().expect("report lock");
        rows.iter()
            .filter(|(_, r)| r.status == CheckStatus::Flag)
            .map(|((id, _), _)| id.clone())
            .collect()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        Self::encode(&self.rows.lock().expect("report lock"))
    }

    fn encode(rows: &BTreeMap<Key, CheckResult>) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_HEADER).expect("in-memory write");
        for ((id, _), r) in rows.iter() {
            w.write_record([
                id.as_str(),
                &r.check_name,
                r.status.as_str(),
                &fmt_num(r.metric),
                &fmt_num(r.threshold),
                &r.detail,
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Write atomically; returns whether the file changed.
    pub fn flush(&self) -> Result<bool, PreflightError> {
        let rows = self.rows.lock().expect("report lock");
        let bytes = Self::encode(&rows);
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| PreflightError::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
        crate::fsutil::write_if_changed(&self.path, &bytes).map_err(|e| PreflightError::Io {
            path: self.path.clone(),
            source: e,
        })
    }

    /// Flagged item ids from a report file; empty when the file is absent.
    pub fn load_suspects(path: &Path) -> Result<BTreeSet<String>, PreflightError> {
        if !path.exists() {
            return Ok(BTreeSet::new());
        }
        Ok(Self::open(path)?.suspect_items())
    }
}
