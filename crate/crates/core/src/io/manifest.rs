use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

use super::{check_version, read_json_config, sha256_file, write_json, FORMAT_VERSION};

/// A file and the SHA-256 of its contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let sha256 = sha256_file(&path)?;
        Ok(FileDigest { path, sha256 })
    }

    fn resolve(&self, base: &Path) -> PathBuf {
        base.join(&self.path)
    }
}

/// Everything needed to reproduce and audit a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Method configuration exactly as used.
    pub config: Value,
    /// Input files, keyed by role (`stream`, `weights`, ...).
    pub inputs: BTreeMap<String, FileDigest>,
    /// Output files, keyed by role (`report`, `trace`, ...).
    pub outputs: BTreeMap<String, FileDigest>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl RunManifest {
    pub fn start(method: impl Into<String>, seed: Option<u64>, config: Value) -> Self {
        RunManifest {
            format_version: FORMAT_VERSION.into(),
            method: method.into(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn add_input(&mut self, role: &str, path: impl Into<PathBuf>) -> Result<()> {
        self.inputs.insert(role.into(), FileDigest::of(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, role: &str, path: impl Into<PathBuf>) -> Result<()> {
        self.outputs.insert(role.into(), FileDigest::of(path)?);
        Ok(())
    }

    pub fn finish(&mut self) {
        self.finished_unix_ms = now_ms();
    }

    /// Recomputes every digest, resolving relative paths against `base`.
    pub fn verify(&self, base: impl AsRef<Path>) -> Result<()> {
        check_version(&self.format_version)?;
        let base = base.as_ref();
        let mut bad = Vec::new();
        for (role, f) in self.inputs.iter().chain(&self.outputs) {
            let actual = sha256_file(f.resolve(base))?;
            if actual != f.sha256 {
                bad.push(format!("{role} ({})", f.path.display()));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Format(format!("digest mismatch: {}", bad.join(", "))))
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let m: RunManifest = read_json_config(path)?;
        check_version(&m.format_version)?;
        Ok(m)
    }
}
