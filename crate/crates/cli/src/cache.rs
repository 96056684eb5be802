//! On-disk cache of enumeration tables, keyed by a content hash of the
//! inputs and guarded by a checksum of the stored payload.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::content_hash;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "LTBOUND_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    checksum: String,
    payload: Value,
}

pub enum Lookup {
    Hit(Value),
    Miss,
    /// The file existed but failed its checksum or did not parse.
    Corrupt(String),
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// Explicit directory, else `$LTBOUND_CACHE_DIR`, else `.ltbound-cache`.
    pub fn resolve(explicit: Option<&Path>) -> Self {
        match explicit {
            Some(p) => Cache::new(p),
            None => Cache::new(
                std::env::var_os(CACHE_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(".ltbound-cache")),
            ),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn lookup(&self, key: &str) -> Result<Lookup> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Lookup::Miss),
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        };
        let entry: Entry = match serde_json::from_str(&text) {
            Ok(e) => e,
            Err(e) => return Ok(Lookup::Corrupt(format!("{}: {e}", path.display()))),
        };
        if entry.key != key || content_hash(&entry.payload.to_string()) != entry.checksum {
            return Ok(Lookup::Corrupt(format!("{}: checksum mismatch", path.display())));
        }
        Ok(Lookup::Hit(entry.payload))
    }

    pub fn store(&self, key: &str, payload: &Value) -> Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating cache directory {}", self.dir.display()))?;
        let entry = Entry {
            key: key.to_string(),
            checksum: content_hash(&payload.to_string()),
            payload: payload.clone(),
        };
        let path = self.path(key);
        fs::write(&path, serde_json::to_string_pretty(&entry)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}
