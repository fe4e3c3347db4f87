use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::SystemTime;

use serde::Serialize;

use super::cache::{CachedPng, PngCache};
use super::ServiceError;
use crate::archive::{Archive, LedgerRef};
use crate::ledger::{summarize, LedgerError, LedgerLock, ResultsTable, Status, StatusCounts, Verdict};
use crate::preflight::PreflightReport;

pub const DEFAULT_READ_AHEAD: usize = 32;
pub const DEFAULT_CACHE_MB: usize = 512;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub archive: PathBuf,
    pub cache_bytes: usize,
    pub read_only: bool,
    pub read_ahead: usize,
}

impl ServiceConfig {
    pub fn new(archive: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            archive: archive.into(),
            cache_bytes: DEFAULT_CACHE_MB * 1024 * 1024,
            read_only: false,
            read_ahead: DEFAULT_READ_AHEAD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueSummary {
    pub dataset: String,
    pub pipeline: String,
    pub total: usize,
    /// Items currently `no` or `maybe`.
    pub not_yes: usize,
    pub suspect: usize,
    pub read_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QcItem {
    pub item_id: String,
    pub png_path: String,
    pub status: Status,
    pub note: String,
    pub suspect: bool,
    pub position: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueState {
    pub dataset: String,
    pub pipeline: String,
    pub items: Vec<QcItem>,
    pub counts: StatusCounts,
    pub read_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Progress {
    pub dataset: String,
    pub pipeline: String,
    pub counts: StatusCounts,
    pub total: usize,
    pub last_activity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictAck {
    pub item_id: String,
    pub status: Status,
    pub user: String,
    pub timestamp: String,
    pub position: usize,
    pub total: usize,
    pub counts: StatusCounts,
}

/// One PNG fetch: the cached entry and whether it was already resident.
pub struct PngHit {
    pub png: Arc<CachedPng>,
    pub cached: bool,
}

type QueueKey = (String, String);

struct Queue {
    table: ResultsTable,
    /// Held for the service lifetime when this instance owns the ledger.
    lock: Option<LedgerLock>,
    suspects: BTreeSet<String>,
    /// File stamp at last load, for picking up another writer's changes.
    stamp: Option<(SystemTime, u64)>,
}

#[derive(Clone)]
struct ItemLoc {
    queue: QueueKey,
    position: usize,
    png_path: String,
}

/// Sync core of the review backend. The HTTP layer is a thin wrapper.
pub struct ReviewService {
    archive: Archive,
    config: ServiceConfig,
    queues: Mutex<BTreeMap<QueueKey, Queue>>,
    index: RwLock<HashMap<String, ItemLoc>>,
    order: RwLock<HashMap<QueueKey, Vec<String>>>,
    cache: PngCache,
}

fn stamp(path: &std::path::Path) -> Option<(SystemTime, u64)> {
    let m = std::fs::metadata(path).ok()?;
    Some((m.modified().ok()?, m.len()))
}

fn default_user() -> String {
    std::env::var("USER")
        .or_else(|_| std::env::var("LOGNAME"))
        .ok()
        .filter(|u| !u.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

impl ReviewService {
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        if !config.archive.is_dir() {
            return Err(ServiceError::ArchiveMissing(config.archive.clone()));
        }
        let svc = ReviewService {
            archive: Archive::new(&config.archive),
            cache: PngCache::new(config.cache_bytes),
            config,
            queues: Mutex::new(BTreeMap::new()),
            index: RwLock::new(HashMap::new()),
            order: RwLock::new(HashMap::new()),
        };
        svc.discover()?;
        Ok(svc)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn cache(&self) -> &PngCache {
        &self.cache
    }

    fn ledgers(&self) -> Result<Vec<LedgerRef>, ServiceError> {
        if !self.archive.root().is_dir() {
            return Err(ServiceError::ArchiveMissing(self.archive.root().to_path_buf()));
        }
        self.archive
            .ledgers()
            .map_err(|e| ServiceError::Io(self.archive.root().display().to_string(), e))
    }

    /// Load ledgers not seen before.
    fn discover(&self) -> Result<(), ServiceError> {
        let found = self.ledgers()?;
        let mut queues = self.queues.lock().expect("queue lock");
        for l in found {
            let key = (l.dataset.clone(), l.pipeline.clone());
            if queues.contains_key(&key) {
                continue;
            }
            let lock = if self.config.read_only {
                None
            } else {
                match LedgerLock::acquire(&l.path) {
                    Ok(lock) => Some(lock),
                    Err(LedgerError::Locked { owner, .. }) => {
                        log::warn!("{} is owned by {owner}; serving it read-only", l.path.display());
                        None
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            let table = match ResultsTable::load(&l.path) {
                Ok(t) => t,
                Err(e) => {
                    log::error!("skipping unreadable ledger: {e}");
                    continue;
                }
            };
            let mut q = Queue {
                table,
                lock,
                suspects: BTreeSet::new(),
                stamp: stamp(&l.path),
            };
            q.suspects = self.load_suspects(&key);
            self.reindex(&key, &q);
            queues.insert(key, q);
        }
        Ok(())
    }

    fn load_suspects(&self, key: &QueueKey) -> BTreeSet<String> {
        let path = self.archive.preflight_path(&key.0, &key.1);
        PreflightReport::load_suspects(&path).unwrap_or_else(|e| {
            log::warn!("ignoring preflight report {}: {e}", path.display());
            BTreeSet::new()
        })
    }

    fn reindex(&self, key: &QueueKey, q: &Queue) {
        let mut index = self.index.write().expect("index lock");
        let ids: Vec<String> = q.table.iter().map(|r| r.item_id.to_string()).collect();
        for (i, row) in q.table.iter().enumerate() {
            index.insert(
                row.item_id.to_string(),
                ItemLoc {
                    queue: key.clone(),
                    position: i + 1,
                    png_path: row.png_path.clone(),
                },
            );
        }
        self.order.write().expect("order lock").insert(key.clone(), ids);
    }

    /// Reload a queue this instance does not own if its file changed.
    fn refresh(&self, key: &QueueKey, q: &mut Queue) -> Result<(), ServiceError> {
        if q.lock.is_some() {
            return Ok(());
        }
        let path = self.archive.ledger_path(&key.0, &key.1);
        let now = stamp(&path);
        if now != q.stamp {
            q.table = ResultsTable::load(&path)?;
            q.stamp = now;
            q.suspects = self.load_suspects(key);
            self.reindex(key, q);
        }
        Ok(())
    }

    fn with_queue<T>(
        &self,
        dataset: &str,
        pipeline: &str,
        f: impl FnOnce(&QueueKey, &mut Queue) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let key = (dataset.to_string(), pipeline.to_string());
        if !self.queues.lock().expect("queue lock").contains_key(&key) {
            self.discover()?;
        }
        let mut queues = self.queues.lock().expect("queue lock");
        let q = queues
            .get_mut(&key)
            .ok_or_else(|| ServiceError::UnknownQueue(format!("{dataset}/{pipeline}")))?;
        self.refresh(&key, q)?;
        f(&key, q)
    }

    pub fn list_queues(&self) -> Result<Vec<QueueSummary>, ServiceError> {
        self.discover()?;
        let mut queues = self.queues.lock().expect("queue lock");
        let mut out = Vec::new();
        for (key, q) in queues.iter_mut() {
            self.refresh(key, q)?;
            let s = summarize(&q.table);
            out.push(QueueSummary {
                dataset: key.0.clone(),
                pipeline: key.1.clone(),
                total: q.table.len(),
                not_yes: s.counts.not_yes(),
                suspect: q.table.iter().filter(|r| q.suspects.contains(r.item_id.as_str())).count(),
                read_only: q.lock.is_none(),
            });
        }
        Ok(out)
    }

    /// Queue contents in ledger order. The first `read_ahead` PNGs are in
    /// the cache by the time this returns.
    pub fn get_queue(&self, dataset: &str, pipeline: &str) -> Result<QueueState, ServiceError> {
        let state = self.with_queue(dataset, pipeline, |key, q| {
            let total = q.table.len();
            let items = q
                .table
                .iter()
                .enumerate()
                .map(|(i, r)| QcItem {
                    item_id: r.item_id.to_string(),
                    png_path: r.png_path.clone(),
                    status: r.verdict.status,
                    note: r.verdict.note.clone(),
                    suspect: q.suspects.contains(r.item_id.as_str()),
                    position: i + 1,
                    total,
                })
                .collect();
            Ok(QueueState {
                dataset: key.0.clone(),
                pipeline: key.1.clone(),
                items,
                counts: summarize(&q.table).counts,
                read_only: q.lock.is_none(),
            })
        })?;
        let head: Vec<String> = state
            .items
            .iter()
            .take(self.config.read_ahead)
            .map(|i| i.item_id.clone())
            .collect();
        self.warm(&head);
        Ok(state)
    }

    fn locate(&self, item_id: &str) -> Option<ItemLoc> {
        self.index.read().expect("index lock").get(item_id).cloned()
    }

    fn load_png(&self, item_id: &str, loc: &ItemLoc) -> Result<Arc<CachedPng>, ServiceError> {
        let path = self.archive.resolve(&loc.png_path);
        let png = CachedPng::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ServiceError::FileVanished(item_id.to_string()),
            _ => ServiceError::Io(path.display().to_string(), e),
        })?;
        let png = Arc::new(png);
        self.cache.insert(item_id, png.clone());
        Ok(png)
    }

    /// Load any of these items that are not already cached.
    pub fn warm(&self, item_ids: &[String]) {
        for id in item_ids {
            if self.cache.contains(id) {
                continue;
            }
            if let Some(loc) = self.locate(id) {
                if let Err(e) = self.load_png(id, &loc) {
                    log::debug!("read-ahead of {id} failed: {e}");
                }
            }
        }
    }

    /// Items following `item_id` in its queue, up to the read-ahead window.
    pub fn following(&self, item_id: &str) -> Vec<String> {
        let Some(loc) = self.locate(item_id) else {
            return Vec::new();
        };
        let order = self.order.read().expect("order lock");
        order
            .get(&loc.queue)
            .map(|ids| ids.iter().skip(loc.position).take(self.config.read_ahead).cloned().collect())
            .unwrap_or_default()
    }

    pub fn get_png(&self, item_id: &str) -> Result<PngHit, ServiceError> {
        let loc = match self.locate(item_id) {
            Some(l) => l,
            None => {
                self.discover()?;
                self.locate(item_id)
                    .ok_or_else(|| ServiceError::UnknownItem(item_id.to_string()))?
            }
        };
        if let Some(png) = self.cache.get(item_id) {
            match std::fs::metadata(self.archive.resolve(&loc.png_path)) {
                Ok(meta) if png.is_current(&meta) => return Ok(PngHit { png, cached: true }),
                Ok(_) => {}
                Err(_) => {
                    self.cache.remove(item_id);
                    return Err(ServiceError::FileVanished(item_id.to_string()));
                }
            }
        }
        let png = self.load_png(item_id, &loc)?;
        Ok(PngHit { png, cached: false })
    }

    pub fn post_verdict(
        &self,
        item_id: &str,
        status: &str,
        note: &str,
        user: Option<&str>,
    ) -> Result<VerdictAck, ServiceError> {
        let status: Status = status.parse()?;
        let loc = self
            .locate(item_id)
            .ok_or_else(|| ServiceError::UnknownItem(item_id.to_string()))?;
        let user = user.filter(|u| !u.trim().is_empty()).map(str::to_string).unwrap_or_else(default_user);
        self.with_queue(&loc.queue.0, &loc.queue.1, |_, q| {
            if q.lock.is_none() {
                return Err(ServiceError::ReadOnly(format!("{}/{}", loc.queue.0, loc.queue.1)));
            }
            let row = q.table.record_verdict(item_id, Verdict::now(status, &user, note))?;
            let ack = VerdictAck {
                item_id: item_id.to_string(),
                status: row.verdict.status,
                user: row.verdict.user.clone(),
                timestamp: crate::ledger::format_timestamp(&row.verdict.timestamp),
                position: loc.position,
                total: q.table.len(),
                counts: summarize(&q.table).counts,
            };
            q.stamp = stamp(&self.archive.ledger_path(&loc.queue.0, &loc.queue.1));
            Ok(ack)
        })
    }

    pub fn get_progress(&self, dataset: &str, pipeline: &str) -> Result<Progress, ServiceError> {
        self.with_queue(dataset, pipeline, |key, q| {
            let s = summarize(&q.table);
            Ok(Progress {
                dataset: key.0.clone(),
                pipeline: key.1.clone(),
                total: s.counts.total(),
                counts: s.counts,
                last_activity: s.last_activity.as_ref().map(crate::ledger::format_timestamp),
            })
        })
    }
}
