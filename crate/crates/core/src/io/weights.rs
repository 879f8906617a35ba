use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::PlantedHead;

use super::{check_version, FORMAT_VERSION};

/// A linear head `W z + b`. The adapter only uses `W`; the bias is kept so
/// files round-trip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierWeights {
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
}

impl ClassifierWeights {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.weights.is_empty() || d == 0 {
            return Err(Error::Format("weight matrix is empty".into()));
        }
        for (k, row) in self.weights.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Format(format!(
                    "ragged weight matrix: row {k} has {} columns, row 0 has {d}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("row {k} has a non-finite weight")));
            }
        }
        if let Some(b) = &self.bias {
            if b.len() != self.weights.len() {
                return Err(Error::Format(format!(
                    "bias has {} entries for {} classes",
                    b.len(),
                    self.weights.len()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format("non-finite bias".into()));
            }
        }
        Ok(())
    }
}

impl From<PlantedHead> for ClassifierWeights {
    fn from(h: PlantedHead) -> Self {
        ClassifierWeights {
            weights: h.weights,
            bias: Some(h.bias),
        }
    }
}

#[derive(Deserialize)]
struct WeightsFile {
    #[serde(default)]
    format_version: Option<String>,
    weights: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    bias: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct WeightsFileOut<'a> {
    format_version: &'a str,
    #[serde(flatten)]
    inner: &'a ClassifierWeights,
}

/// Reads `{"weights": [[...]], "bias": [...]}` JSON, or CSV with header
/// `w0..w{d-1}` and an optional trailing `bias` column, one row per class.
pub fn read_classifier_weights(path: impl AsRef<Path>) -> Result<ClassifierWeights> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let w = if is_csv {
        read_csv(path)?
    } else {
        let text = std::fs::read_to_string(path)?;
        let file: WeightsFile = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if let Some(v) = &file.format_version {
            check_version(v)?;
        }
        ClassifierWeights {
            weights: file
                .weights
                .ok_or_else(|| Error::Format("missing `weights`".into()))?,
            bias: file.bias,
        }
    };
    w.validate()?;
    Ok(w)
}

fn read_csv(path: &Path) -> Result<ClassifierWeights> {
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(fmt)?;
    let header = reader.headers().map_err(fmt)?.clone();
    let has_bias = header.iter().last().is_some_and(|c| c.trim() == "bias");
    let d = header.len() - usize::from(has_bias);
    for (i, c) in header.iter().take(d).enumerate() {
        if c.trim() != format!("w{i}") {
            return Err(Error::Format(format!("expected column `w{i}`, found `{c}`")));
        }
    }
    let mut weights = Vec::new();
    let mut bias = Vec::new();
    for row in reader.records() {
        let row = row.map_err(fmt)?;
        let mut vals = row
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("weights row {}: {e}", weights.len())))?;
        if has_bias && row.len() == header.len() {
            bias.push(vals.pop().expect("non-empty row"));
        }
        weights.push(vals);
    }
    Ok(ClassifierWeights {
        weights,
        bias: has_bias.then_some(bias),
    })
}

/// Writes JSON (or CSV, by extension) that [`read_classifier_weights`]
/// reads back bit-exactly.
pub fn write_classifier_weights(path: impl AsRef<Path>, w: &ClassifierWeights) -> Result<()> {
    w.validate()?;
    let path = path.as_ref();
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        let mut out = csv::Writer::from_path(path).map_err(fmt)?;
        let mut header: Vec<String> = (0..w.dim()).map(|i| format!("w{i}")).collect();
        if w.bias.is_some() {
            header.push("bias".into());
        }
        out.write_record(&header).map_err(fmt)?;
        for (k, row) in w.weights.iter().enumerate() {
            let mut cells: Vec<String> = row.iter().map(f64::to_string).collect();
            if let Some(b) = &w.bias {
                cells.push(b[k].to_string());
            }
            out.write_record(&cells).map_err(fmt)?;
        }
        out.flush()?;
        Ok(())
    } else {
        super::write_json(
            path,
            &WeightsFileOut {
                format_version: FORMAT_VERSION,
                inner: w,
            },
        )
    }
}
