//! Report persistence. Files are written to a temporary sibling and renamed into
//! place, so a failed command never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct OutDir {
    dir: PathBuf,
    timestamp: bool,
}

impl OutDir {
    pub fn create(dir: &Path, timestamp: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), timestamp })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let target = self.path(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("creating a temporary file in {}", self.dir.display()))?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        tmp.persist(&target).with_context(|| format!("writing {}", target.display()))?;
        Ok(target)
    }

    /// Pretty JSON; objects get a `timestamp` field unless disabled.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        if self.timestamp {
            if let Some(obj) = v.as_object_mut() {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                obj.insert("timestamp".into(), secs.into());
            }
        }
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }
}
