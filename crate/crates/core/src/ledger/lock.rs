use std::fs::OpenOptions;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use super::LedgerError;

/// Advisory single-writer lock: `<csv>.lock` holding `"<pid> <host>"`.
#[derive(Debug)]
pub struct LedgerLock {
    path: PathBuf,
}

pub fn lock_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".lock");
    PathBuf::from(s)
}

pub fn hostname() -> String {
    std::fs::read_to_string("/proc/sys/kernel/hostname")
        .or_else(|_| std::fs::read_to_string("/etc/hostname"))
        .map(|s| s.trim().to_string())
        .ok()
        .filter(|s| !s.is_empty())
        .or_else(|| std::env::var("HOSTNAME").ok())
        .unwrap_or_else(|| "localhost".into())
}

/// A lock whose owner ran on this host and no longer exists. Locks from
/// other hosts are never considered stale.
fn is_stale(content: &str) -> bool {
    let mut parts = content.split_whitespace();
    let (Some(pid), Some(host)) = (parts.next(), parts.next()) else {
        return false;
    };
    let Ok(pid) = pid.parse::<u32>() else {
        return false;
    };
    host == hostname() && Path::new("/proc/self").exists() && !Path::new(&format!("/proc/{pid}")).exists()
}

impl LedgerLock {
    pub fn acquire(csv: &Path) -> Result<Self, LedgerError> {
        let path = lock_path(csv);
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    writeln!(f, "{} {}", std::process::id(), hostname()).map_err(|e| LedgerError::io(&path, e))?;
                    f.sync_all().map_err(|e| LedgerError::io(&path, e))?;
                    return Ok(LedgerLock { path });
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    let owner = std::fs::read_to_string(&path).unwrap_or_default();
                    if is_stale(&owner) {
                        log::warn!("removing stale lock {} ({})", path.display(), owner.trim());
                        let _ = std::fs::remove_file(&path);
                        continue;
                    }
                    return Err(LedgerError::Locked {
                        path,
                        owner: owner.trim().to_string(),
                    });
                }
                Err(e) => return Err(LedgerError::io(&path, e)),
            }
        }
        Err(LedgerError::Locked {
            owner: std::fs::read_to_string(&path).unwrap_or_default().trim().to_string(),
            path,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for LedgerLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
