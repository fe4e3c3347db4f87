use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::verdict::{format_timestamp, parse_timestamp};
use super::{LedgerError, Status, Verdict};
use crate::dataset::EntityMap;

pub const CSV_HEADER: [&str; 14] = [
    "item_id",
    "dataset",
    "pipeline",
    "sub",
    "ses",
    "acq",
    "run",
    "suffix",
    "sub_output",
    "png_path",
    "status",
    "user",
    "timestamp",
    "note",
];

/// `dataset/pipeline/entity-stem[/sub_output]`. Ids are global across
/// queues and order lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(dataset: &str, pipeline: &str, entities: &EntityMap, sub_output: Option<&str>) -> Self {
        let mut s = format!("{dataset}/{pipeline}/{}", entities.stem());
        if let Some(o) = sub_output {
            s.push('/');
            s.push_str(o);
        }
        ItemId(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        ItemId(s)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_string())
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResultsRow {
    pub item_id: ItemId,
    pub dataset: String,
    pub pipeline: String,
    pub sub: String,
    pub ses: String,
    pub acq: String,
    pub run: String,
    pub suffix: String,
    pub sub_output: String,
    /// Relative to the QC archive root.
    pub png_path: String,
    pub verdict: Verdict,
}

impl ResultsRow {
    pub fn new(
        entities: &EntityMap,
        pipeline: &str,
        sub_output: Option<&str>,
        png_path: &str,
        verdict: Verdict,
    ) -> Self {
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        ResultsRow {
            item_id: ItemId::new(&entities.dataset, pipeline, entities, sub_output),
            dataset: entities.dataset.clone(),
            pipeline: pipeline.to_string(),
            sub: entities.subject.clone(),
            ses: opt(&entities.session),
            acq: opt(&entities.acquisition),
            run: opt(&entities.run),
            suffix: entities.suffix.clone(),
            sub_output: sub_output.unwrap_or_default().to_string(),
            png_path: png_path.to_string(),
            verdict,
        }
    }

    pub fn status(&self) -> Status {
        self.verdict.status
    }

    fn record(&self) -> [String; 14] {
        [
            self.item_id.0.clone(),
            self.dataset.clone(),
            self.pipeline.clone(),
            self.sub.clone(),
            self.ses.clone(),
            self.acq.clone(),
            self.run.clone(),
            self.suffix.clone(),
            self.sub_output.clone(),
            self.png_path.clone(),
            self.verdict.status.to_string(),
            self.verdict.user.clone(),
            format_timestamp(&self.verdict.timestamp),
            self.verdict.note.clone(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self, LedgerError> {
        if rec.len() != CSV_HEADER.len() {
            return Err(LedgerError::BadRow(format!("{} fields, expected {}", rec.len(), CSV_HEADER.len())));
        }
        let f = |i: usize| rec[i].to_string();
        let row = ResultsRow {
            item_id: ItemId(f(0)),
            dataset: f(1),
            pipeline: f(2),
            sub: f(3),
            ses: f(4),
            acq: f(5),
            run: f(6),
            suffix: f(7),
            sub_output: f(8),
            png_path: f(9),
            verdict: Verdict {
                status: rec[10].parse()?,
                user: f(11),
                timestamp: parse_timestamp(&rec[12])?,
                note: f(13),
            },
        };
        row.check_path()?;
        Ok(row)
    }

    pub(crate) fn check_path(&self) -> Result<(), LedgerError> {
        let p = &self.png_path;
        if p.starts_with('/') || p.starts_with('\\') || Path::new(p).is_absolute() || p.get(1..2) == Some(":") {
            return Err(LedgerError::AbsolutePath(p.clone()));
        }
        Ok(())
    }
}

/// One ledger, usually one `(dataset, pipeline)` CSV file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: BTreeMap<ItemId, ResultsRow>,
    /// The file this table was loaded from or is persisted to.
    pub source: Option<PathBuf>,
    /// Writes since load.
    pub revision: u64,
}

impl ResultsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ResultsRow> {
        self.rows.get(&ItemId::from(id))
    }

    /// Rows in item-id order.
    pub fn iter(&self) -> impl Iterator<Item = &ResultsRow> {
        self.rows.values()
    }

    pub fn insert(&mut self, row: ResultsRow) -> Result<(), LedgerError> {
        row.check_path()?;
        if self.rows.contains_key(&row.item_id) {
            return Err(LedgerError::DuplicateItemId(row.item_id.0.clone()));
        }
        self.rows.insert(row.item_id.clone(), row);
        Ok(())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for row in self.rows.values() {
            w.write_record(row.record()).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn from_csv<R: io::Read>(reader: R) -> Result<Self, LedgerError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(LedgerError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
        }
        let mut table = ResultsTable::new();
        for rec in rdr.records() {
            table.insert(ResultsRow::from_record(&rec?)?)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, LedgerError> {
        let file = std::fs::File::open(path).map_err(|e| LedgerError::io(path, e))?;
        let mut t = Self::from_csv(io::BufReader::new(file)).map_err(|e| e.in_file(path))?;
        t.source = Some(path.to_path_buf());
        Ok(t)
    }

    /// Atomic whole-file write.
    pub fn save(&self, path: &Path) -> Result<(), LedgerError> {
        self.save_with(path, |_| Ok(()))
    }

    /// [`ResultsTable::save`] with a hook run after the temp file is
    /// complete and before it is renamed into place.
    #[doc(hidden)]
    pub fn save_with(&self, path: &Path, before_rename: impl FnOnce(&Path) -> io::Result<()>) -> Result<(), LedgerError> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| LedgerError::io(dir, e))?;
            }
        }
        crate::fsutil::write_atomic_with(path, &self.to_csv(), before_rename).map_err(|e| LedgerError::io(path, e))
    }

    /// Replace an item's verdict and, when the table has a source file,
    /// persist before returning. On a failed write the table and the file
    /// both keep their previous revision.
    pub fn record_verdict(&mut self, item_id: &str, verdict: Verdict) -> Result<&ResultsRow, LedgerError> {
        self.record_verdict_with(item_id, verdict, |_| Ok(()))
    }

    #[doc(hidden)]
    pub fn record_verdict_with(
        &mut self,
        item_id: &str,
        verdict: Verdict,
        before_rename: impl FnOnce(&Path) -> io::Result<()>,
    ) -> Result<&ResultsRow, LedgerError> {
        verdict.validate()?;
        let key = ItemId::from(item_id);
        let previous = match self.rows.get_mut(&key) {
            Some(row) => std::mem::replace(&mut row.verdict, verdict),
            None => return Err(LedgerError::UnknownItem(item_id.to_string())),
        };
        if let Some(path) = self.source.clone() {
            if let Err(e) = self.save_with(&path, before_rename) {
                self.rows.get_mut(&key).expect("row present").verdict = previous;
                return Err(e);
            }
        }
        self.revision += 1;
        Ok(&self.rows[&key])
    }
}
