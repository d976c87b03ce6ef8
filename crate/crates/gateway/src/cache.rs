//! Append-only JSONL response cache.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub response: String,
    /// Seconds since the Unix epoch when the entry was written.
    pub timestamp: u64,
}

/// In-memory map backed by an optional append-only file. The first entry
/// for a key wins; later duplicates in the file are ignored.
#[derive(Debug, Default)]
pub struct ResponseCache {
    map: Mutex<HashMap<String, String>>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> GatewayError {
    GatewayError::Cache(format!("{}: {e}", path.display()))
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a cache file. A torn last line from an
    /// interrupted write is skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let mut map = HashMap::new();
        let mut needs_newline = false;
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| cache_err(path, e))?;
            needs_newline = !text.is_empty() && !text.ends_with('\n');
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                if let Ok(entry) = serde_json::from_str::<CacheEntry>(line) {
                    map.entry(entry.key).or_insert(entry.response);
                }
            }
        } else if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| cache_err(path, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| cache_err(path, e))?;
        if needs_newline {
            // keep the torn fragment on its own line
            file.write_all(b"\n").map_err(|e| cache_err(path, e))?;
        }
        Ok(ResponseCache {
            map: Mutex::new(map),
            file: Some(Mutex::new(file)),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.map.lock().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores a response unless the key is already present. Returns the
    /// response now associated with the key.
    pub fn insert(&self, key: &str, response: String) -> Result<String, GatewayError> {
        let mut map = self.map.lock().expect("cache lock");
        if let Some(existing) = map.get(key) {
            return Ok(existing.clone());
        }
        if let (Some(file), Some(path)) = (&self.file, &self.path) {
            let entry = CacheEntry {
                key: key.to_string(),
                response: response.clone(),
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            };
            let mut line = serde_json::to_string(&entry).expect("entry encodes");
            line.push('\n');
            let mut f = file.lock().expect("cache file lock");
            f.write_all(line.as_bytes()).map_err(|e| cache_err(path, e))?;
            f.flush().map_err(|e| cache_err(path, e))?;
        }
        map.insert(key.to_string(), response.clone());
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/cache.jsonl");
        {
            let c = ResponseCache::open(&path).unwrap();
            c.insert("k1", "one".into()).unwrap();
            assert_eq!(c.insert("k1", "other".into()).unwrap(), "one");
            c.insert("k2", "two".into()).unwrap();
        }
        // simulate a torn write
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"key\":\"k3\",\"resp").unwrap();
        drop(f);

        let c = ResponseCache::open(&path).unwrap();
        assert_eq!(c.get("k1").as_deref(), Some("one"));
        assert_eq!(c.get("k2").as_deref(), Some("two"));
        assert_eq!(c.get("k3"), None);
        assert_eq!(c.len(), 2);
        c.insert("k4", "four".into()).unwrap();
        drop(c);
        assert_eq!(ResponseCache::open(&path).unwrap().get("k4").as_deref(), Some("four"));
    }
}
