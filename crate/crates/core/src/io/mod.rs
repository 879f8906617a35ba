//! File formats: stream records, classifier weights, step traces and run
//! manifests.
//!
//! Streams and traces are JSON Lines. Every file written here starts with a
//! header object carrying `format_version`; readers reject headers whose
//! major version they do not know. Stream files without a header are
//! accepted so hand-written fixtures stay short.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

mod manifest;
mod stream;
mod trace;
mod weights;

pub use manifest::{FileDigest, RunManifest};
pub use stream::{read_stream, write_stream, write_stream_csv, StreamReader};
pub use trace::{read_predictions, read_trace, write_trace, PredictionRow, TraceKind, TraceWriter};
pub use weights::{read_classifier_weights, write_classifier_weights, ClassifierWeights};

/// Version written into every file header.
pub const FORMAT_VERSION: &str = "1.0.0";
const SUPPORTED_MAJOR: u64 = 1;

/// First line of a JSON Lines file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: String,
    pub kind: String,
}

impl Header {
    pub fn new(kind: impl Into<String>) -> Self {
        Header {
            format_version: FORMAT_VERSION.into(),
            kind: kind.into(),
        }
    }
}

/// Accepts any `1.x.y`.
pub fn check_version(found: &str) -> Result<()> {
    let parts: Vec<&str> = found.split('.').collect();
    let major = match parts.as_slice() {
        [a, b, c] if b.parse::<u64>().is_ok() && c.parse::<u64>().is_ok() => a.parse::<u64>().ok(),
        _ => None,
    };
    match major {
        Some(SUPPORTED_MAJOR) => Ok(()),
        Some(_) => Err(Error::Version {
            found: found.into(),
            supported: SUPPORTED_MAJOR,
        }),
        None => Err(Error::Format(format!("`{found}` is not a semantic version"))),
    }
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Reads a JSON configuration file. Syntax and unknown-field errors are
/// reported against the file path; call the type's own validation afterwards
/// for range checks.
pub fn read_json_config<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}

/// Writes a value as pretty JSON with a trailing newline.
pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
