//! Tidy CSV: one row per observation, one column per variable.

use std::path::Path;

use serde::Serialize;

use crate::error::CliResult;

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
