use std::cmp::{Ordering, Reverse};
use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::{ItemId, LedgerError, ResultsRow, ResultsTable, Status, Verdict};
use crate::dataset::EntityMap;

pub const MISSING_OUTPUTS_NOTE: &str = "missing outputs";

/// One manifest item after its render attempt.
#[derive(Debug, Clone)]
pub struct InitItem {
    pub entities: EntityMap,
    pub pipeline: String,
    pub sub_output: Option<String>,
    pub png_path: String,
    /// Why no PNG could be produced; such items start as an automatic `no`
    /// with this note ([`MISSING_OUTPUTS_NOTE`] for absent pipeline outputs).
    pub failure: Option<String>,
}

/// Every rendered item starts as `yes`; items that could not be rendered
/// start as an automatic `no`.
pub fn init_results(items: &[InitItem], user: &str) -> Result<ResultsTable, LedgerError> {
    if items.is_empty() {
        return Err(LedgerError::EmptyManifest);
    }
    let now = Utc::now();
    let mut table = ResultsTable::new();
    for it in items {
        let verdict = match &it.failure {
            Some(note) => Verdict::at(Status::No, user, note, now),
            None => Verdict::at(Status::Yes, user, "", now),
        };
        table.insert(ResultsRow::new(
            &it.entities,
            &it.pipeline,
            it.sub_output.as_deref(),
            &it.png_path,
            verdict,
        ))?;
    }
    Ok(table)
}

/// Total preference order between two rows for the same item: later
/// timestamp, then stronger status, then smaller user name, then the rest
/// of the row so that the winner never depends on input order.
pub fn compare_rows(a: &ResultsRow, b: &ResultsRow) -> Ordering {
    let key = |r: &ResultsRow| {
        (
            r.verdict.timestamp,
            r.verdict.status.rank(),
            Reverse(r.verdict.user.clone()),
        )
    };
    key(a).cmp(&key(b)).then_with(|| {
        let rest = |r: &ResultsRow| {
            Reverse((
                r.verdict.note.clone(),
                r.png_path.clone(),
                r.dataset.clone(),
                r.pipeline.clone(),
                (r.sub.clone(), r.ses.clone(), r.acq.clone(), r.run.clone()),
                (r.suffix.clone(), r.sub_output.clone()),
            ))
        };
        rest(a).cmp(&rest(b))
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MergeReport {
    /// Items present with differing rows in more than one input.
    pub conflicts: usize,
    pub conflicting_items: Vec<String>,
}

pub fn merge_results(tables: &[ResultsTable]) -> (ResultsTable, MergeReport) {
    let mut rows: BTreeMap<ItemId, ResultsRow> = BTreeMap::new();
    let mut conflicted: BTreeMap<ItemId, ()> = BTreeMap::new();
    for t in tables {
        for row in t.rows.values() {
            match rows.get_mut(&row.item_id) {
                None => {
                    rows.insert(row.item_id.clone(), row.clone());
                }
                Some(current) => {
                    if current != row {
                        conflicted.insert(row.item_id.clone(), ());
                        if compare_rows(row, current) == Ordering::Greater {
                            *current = row.clone();
                        }
                    }
                }
            }
        }
    }
    let report = MergeReport {
        conflicts: conflicted.len(),
        conflicting_items: conflicted.into_keys().map(|k| k.to_string()).collect(),
    };
    (
        ResultsTable {
            rows,
            source: None,
            revision: 0,
        },
        report,
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub yes: usize,
    pub no: usize,
    pub maybe: usize,
}

impl StatusCounts {
    pub fn add(&mut self, s: Status) {
        match s {
            Status::Yes => self.yes += 1,
            Status::No => self.no += 1,
            Status::Maybe => self.maybe += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.yes + self.no + self.maybe
    }

    pub fn not_yes(&self) -> usize {
        self.no + self.maybe
    }

    /// `no / total`; zero for an empty table.
    pub fn failure_rate(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.no as f64 / n as f64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub counts: StatusCounts,
    pub failure_rate: f64,
    pub per_user: BTreeMap<String, StatusCounts>,
    pub last_activity: Option<DateTime<Utc>>,
}

pub fn summarize(table: &ResultsTable) -> Summary {
    let mut s = Summary::default();
    for row in table.rows.values() {
        s.counts.add(row.verdict.status);
        s.per_user.entry(row.verdict.user.clone()).or_default().add(row.verdict.status);
        s.last_activity = s.last_activity.max(Some(row.verdict.timestamp));
    }
    s.failure_rate = s.counts.failure_rate();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_entities;
    use chrono::TimeZone;

    fn item(name: &str, missing: bool) -> InitItem {
        let mut e = parse_entities(name).unwrap();
        e.dataset = "ds".into();
        InitItem {
            png_path: format!("ds/p/{}.png", e.stem()),
            entities: e,
            pipeline: "p".into(),
            sub_output: None,
            failure: missing.then(|| MISSING_OUTPUTS_NOTE.to_string()),
        }
    }

    fn at(h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 1, h, m, 0).unwrap()
    }

    fn table_with(name: &str, status: Status, user: &str, t: DateTime<Utc>) -> ResultsTable {
        let mut tab = init_results(&[item(name, false)], "system").unwrap();
        let row = tab.rows.values_mut().next().unwrap();
        row.verdict = Verdict::at(status, user, "", t);
        tab
    }

    #[test]
    fn init_rules() {
        let t = init_results(
            &[item("sub-01_dwi.nii", false), item("sub-02_dwi.nii", false), item("sub-03_dwi.nii", true)],
            "system",
        )
        .unwrap();
        let statuses: Vec<_> = t.iter().map(|r| (r.status(), r.verdict.note.as_str())).collect();
        assert_eq!(
            statuses,
            vec![(Status::Yes, ""), (Status::Yes, ""), (Status::No, MISSING_OUTPUTS_NOTE)]
        );
        assert!(t.iter().all(|r| r.verdict.user == "system"));
        assert!(matches!(init_results(&[], "system"), Err(LedgerError::EmptyManifest)));
        assert!(matches!(
            init_results(&[item("sub-01_dwi.nii", false), item("sub-01_dwi.nii.gz", false)], "system"),
            Err(LedgerError::DuplicateItemId(_))
        ));
    }

    #[test]
    fn merge_examples() {
        let a = init_results(&[item("sub-01_dwi.nii", false), item("sub-02_dwi.nii", false)], "s").unwrap();
        let b = init_results(
            &[item("sub-03_dwi.nii", false), item("sub-04_dwi.nii", false), item("sub-05_dwi.nii", false)],
            "s",
        )
        .unwrap();
        let (m, rep) = merge_results(&[a, b]);
        assert_eq!(m.len(), 5);
        assert_eq!(rep.conflicts, 0);

        let early_yes = table_with("sub-01_dwi.nii", Status::Yes, "u", at(10, 0));
        let late_no = table_with("sub-01_dwi.nii", Status::No, "u", at(10, 5));
        let (m, rep) = merge_results(&[late_no.clone(), early_yes.clone()]);
        assert_eq!(m.iter().next().unwrap().status(), Status::No);
        assert_eq!(rep.conflicts, 1);

        let yes = table_with("sub-01_dwi.nii", Status::Yes, "u", at(10, 0));
        let maybe = table_with("sub-01_dwi.nii", Status::Maybe, "u", at(10, 0));
        for order in [[yes.clone(), maybe.clone()], [maybe, yes]] {
            let (m, _) = merge_results(&order);
            assert_eq!(m.iter().next().unwrap().status(), Status::Maybe);
        }

        let bob = table_with("sub-01_dwi.nii", Status::No, "bob", at(10, 0));
        let amy = table_with("sub-01_dwi.nii", Status::No, "amy", at(10, 0));
        let (m, _) = merge_results(&[bob, amy]);
        assert_eq!(m.iter().next().unwrap().verdict.user, "amy");
    }

    #[test]
    fn summary_counts() {
        let items: Vec<_> = (0..10).map(|i| item(&format!("sub-{i:02}_dwi.nii"), false)).collect();
        let mut t = init_results(&items, "system").unwrap();
        let ids: Vec<_> = t.rows.keys().cloned().collect();
        t.record_verdict(ids[0].as_str(), Verdict::now(Status::No, "amy", "")).unwrap();
        t.record_verdict(ids[1].as_str(), Verdict::now(Status::Maybe, "amy", "")).unwrap();
        let s = summarize(&t);
        assert_eq!(s.counts, StatusCounts { yes: 8, no: 1, maybe: 1 });
        assert!((s.failure_rate - 0.1).abs() < 1e-12);
        assert_eq!(s.per_user["amy"].total(), 2);
        assert_eq!(s.per_user["system"].yes, 8);

        let empty = summarize(&ResultsTable::new());
        assert_eq!(empty.counts.total(), 0);
        assert_eq!(empty.failure_rate, 0.0);
        assert!(empty.last_activity.is_none());
    }
}
