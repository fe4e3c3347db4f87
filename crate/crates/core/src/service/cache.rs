use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use lru::LruCache;
use sha2::{Digest, Sha256};

/// PNG bytes plus what is needed to serve and revalidate them.
#[derive(Debug)]
pub struct CachedPng {
    pub bytes: Arc<[u8]>,
    /// Quoted strong validator: the SHA-256 of the bytes.
    pub etag: String,
    modified: Option<SystemTime>,
}

impl CachedPng {
    pub fn read(path: &Path) -> std::io::Result<Self> {
        let meta = std::fs::metadata(path)?;
        let bytes: Arc<[u8]> = std::fs::read(path)?.into();
        Ok(CachedPng {
            etag: format!("\"{:x}\"", Sha256::digest(&bytes)),
            bytes,
            modified: meta.modified().ok(),
        })
    }

    /// Whether the file on disk still matches this entry.
    pub fn is_current(&self, meta: &std::fs::Metadata) -> bool {
        meta.len() == self.bytes.len() as u64 && meta.modified().ok() == self.modified
    }
}

/// LRU cache bounded by total bytes rather than entry count.
pub struct PngCache {
    inner: Mutex<Inner>,
}

struct Inner {
    entries: LruCache<String, Arc<CachedPng>>,
    bytes: usize,
    capacity: usize,
}

impl PngCache {
    pub fn new(capacity_bytes: usize) -> Self {
        PngCache {
            inner: Mutex::new(Inner {
                entries: LruCache::unbounded(),
                bytes: 0,
                capacity: capacity_bytes,
            }),
        }
    }

    pub fn get(&self, key: &str) -> Option<Arc<CachedPng>> {
        self.inner.lock().expect("cache lock").entries.get(key).cloned()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.inner.lock().expect("cache lock").entries.contains(key)
    }

    /// Entries larger than the whole capacity are not kept.
    pub fn insert(&self, key: &str, png: Arc<CachedPng>) {
        let mut g = self.inner.lock().expect("cache lock");
        let size = png.bytes.len();
        if let Some(old) = g.entries.pop(key) {
            g.bytes -= old.bytes.len();
        }
        if size > g.capacity {
            return;
        }
        while g.bytes + size > g.capacity {
            match g.entries.pop_lru() {
                Some((_, old)) => g.bytes -= old.bytes.len(),
                None => break,
            }
        }
        g.bytes += size;
        g.entries.put(key.to_string(), png);
    }

    pub fn remove(&self, key: &str) {
        let mut g = self.inner.lock().expect("cache lock");
        if let Some(old) = g.entries.pop(key) {
            g.bytes -= old.bytes.len();
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes(&self) -> usize {
        self.inner.lock().expect("cache lock").bytes
    }
}
