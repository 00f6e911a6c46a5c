//! Content-addressed record cache: one file per key, a header line
//! `starkgras-cache v1 sha256=<hex of body>` and a JSON body.

use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

pub const CACHE_VERSION: u32 = 1;
const MAGIC: &str = "starkgras-cache";
const EXT: &str = "rec";

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

pub fn encode(body: &str) -> String {
    format!("{MAGIC} v{CACHE_VERSION} sha256={}\n{body}", sha256_hex(body.as_bytes()))
}

/// The body of a record; `Ok(None)` for a record written by another cache
/// version.
pub fn decode(text: &str) -> Result<Option<&str>> {
    let corrupt = |why: &str| Error::CorruptRecord(why.into());
    let (header, body) = text.split_once('\n').ok_or_else(|| corrupt("no header line"))?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(corrupt("bad magic"));
    }
    let version = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| corrupt("bad version"))?;
    if version != CACHE_VERSION {
        return Ok(None);
    }
    let sum = parts
        .next()
        .and_then(|s| s.strip_prefix("sha256="))
        .ok_or_else(|| corrupt("no checksum"))?;
    if parts.next().is_some() {
        return Err(corrupt("trailing header fields"));
    }
    if sum != sha256_hex(body.as_bytes()) {
        return Err(corrupt("checksum mismatch"));
    }
    Ok(Some(body))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    pub corrupt: usize,
    pub writes: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GcReport {
    pub kept: usize,
    pub removed: usize,
}

pub struct Cache {
    dir: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
    corrupt: AtomicUsize,
    writes: AtomicUsize,
}

impl Cache {
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Cache {
            dir: dir.to_path_buf(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            corrupt: AtomicUsize::new(0),
            writes: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Key of (module, cache version, crate version, parameters).
    pub fn key<P: Serialize>(module: &str, params: &P) -> String {
        let params = serde_json::to_string(params).expect("parameters serialize");
        let tag = format!("{module}\0v{CACHE_VERSION}\0{}\0{params}", env!("CARGO_PKG_VERSION"));
        sha256_hex(tag.as_bytes())
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.{EXT}"))
    }

    /// A corrupt or unreadable record is a miss and logs a warning.
    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let path = self.path(key);
        let found = match std::fs::read_to_string(&path) {
            Ok(text) => match decode(&text) {
                Ok(Some(body)) => match serde_json::from_str(body) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        self.warn_corrupt(&path, &e.to_string());
                        None
                    }
                },
                Ok(None) => None,
                Err(e) => {
                    self.warn_corrupt(&path, &e.to_string());
                    None
                }
            },
            Err(_) => None,
        };
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    fn warn_corrupt(&self, path: &Path, why: &str) {
        self.corrupt.fetch_add(1, Ordering::Relaxed);
        log::warn!("ignoring cache record {}: {why}", path.display());
    }

    /// Write-then-rename, so readers never see a partial record.
    pub fn put<T: Serialize>(&self, key: &str, value: &T) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        let body = serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))?;
        let mut tmp = tempfile::Builder::new()
            .prefix(".tmp-")
            .tempfile_in(&self.dir)
            .map_err(io)?;
        tmp.write_all(encode(&body).as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(self.path(key)).map_err(|e| io(e.error))?;
        self.writes.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            corrupt: self.corrupt.load(Ordering::Relaxed),
            writes: self.writes.load(Ordering::Relaxed),
        }
    }

    /// Removes corrupt records, records of other versions and leftover
    /// temporary files.
    pub fn gc(&self) -> Result<GcReport> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        let mut report = GcReport::default();
        for entry in std::fs::read_dir(&self.dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if !path.is_file() {
                continue;
            }
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let keep = if name.starts_with(".tmp-") {
                false
            } else if path.extension().and_then(|e| e.to_str()) == Some(EXT) {
                matches!(std::fs::read_to_string(&path).map(|t| decode(&t).map(|b| b.is_some())), Ok(Ok(true)))
            } else {
                // not ours
                continue;
            };
            if keep {
                report.kept += 1;
            } else {
                std::fs::remove_file(&path).map_err(io)?;
                report.removed += 1;
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let key = Cache::key("test", &(5u64, "x"));
        assert_eq!(key.len(), 64);
        assert_eq!(cache.get::<Vec<u64>>(&key), None);
        cache.put(&key, &vec![1u64, 2, 3]).unwrap();
        assert_eq!(cache.get::<Vec<u64>>(&key), Some(vec![1, 2, 3]));
        let text = std::fs::read_to_string(cache.path(&key)).unwrap();
        assert!(text.starts_with("starkgras-cache v1 sha256="));
        // flip one body byte
        std::fs::write(cache.path(&key), text.replace("[1,2,3]", "[1,2,4]")).unwrap();
        assert_eq!(cache.get::<Vec<u64>>(&key), None);
        let st = cache.stats();
        assert_eq!((st.hits, st.misses, st.corrupt, st.writes), (1, 2, 1, 1));
        // stale version and stray temp file are collected; the good record stays
        let good = Cache::key("test", &1u8);
        cache.put(&good, &7u8).unwrap();
        std::fs::write(cache.path("stale"), "starkgras-cache v0 sha256=00\n1").unwrap();
        std::fs::write(dir.path().join(".tmp-abc"), "x").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        assert_eq!(cache.gc().unwrap(), GcReport { kept: 1, removed: 3 });
        assert_eq!(cache.get::<u8>(&good), Some(7));
    }

    #[test]
    fn headers() {
        assert_eq!(decode(&encode("{}")).unwrap(), Some("{}"));
        assert_eq!(decode("starkgras-cache v9 sha256=ab\n{}").unwrap(), None);
        for bad in ["", "{}", "other v1 sha256=00\n{}", "starkgras-cache v1\n{}", "starkgras-cache v1 sha256=00\n{}"] {
            assert!(matches!(decode(bad), Err(Error::CorruptRecord(_))), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn encode_decode(body in "[ -~\n]{0,200}") {
            let text = encode(&body);
            prop_assert_eq!(decode(&text).unwrap(), Some(body.as_str()));
        }

        #[test]
        fn any_single_byte_change_is_detected(body in "[a-z]{1,50}", i in 0usize..50) {
            let text = encode(&body);
            let header_len = text.find('\n').unwrap() + 1;
            let k = header_len + i % body.len();
            let mut bytes = text.into_bytes();
            bytes[k] = if bytes[k] == b'z' { b'a' } else { bytes[k] + 1 };
            let changed = String::from_utf8(bytes).unwrap();
            prop_assert!(decode(&changed).is_err());
        }
    }
}
