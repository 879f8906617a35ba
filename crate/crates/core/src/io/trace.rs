use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adapter::StepTrace;
use crate::error::{Error, Result};
use crate::geometry::ProbVector;

use super::{check_version, Header};

/// What the rows of a trace file hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    /// Full adapter [`StepTrace`]s.
    Steps,
    /// [`PredictionRow`]s, written for methods without an adapter trace.
    Predictions,
}

impl TraceKind {
    fn tag(self) -> &'static str {
        match self {
            TraceKind::Steps => "trace",
            TraceKind::Predictions => "predictions",
        }
    }
}

/// The part of a step every method produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub t: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    pub refined: ProbVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surprise: Option<f64>,
    #[serde(default)]
    pub annihilated: bool,
}

impl From<&StepTrace> for PredictionRow {
    fn from(s: &StepTrace) -> Self {
        PredictionRow {
            t: s.t,
            label: s.label,
            refined: s.refined.clone(),
            surprise: Some(s.surprise),
            annihilated: s.annihilated,
        }
    }
}

/// Incremental JSON Lines writer; the header goes out on creation.
pub struct TraceWriter {
    out: BufWriter<File>,
    kind: TraceKind,
}

impl TraceWriter {
    pub fn create(path: impl AsRef<Path>, kind: TraceKind) -> Result<Self> {
        let mut w = TraceWriter {
            out: BufWriter::new(File::create(path)?),
            kind,
        };
        w.write_line(&Header::new(kind.tag()))?;
        Ok(w)
    }

    fn write_line(&mut self, value: &impl Serialize) -> Result<()> {
        serde_json::to_writer(&mut self.out, value).map_err(|e| Error::Format(e.to_string()))?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_step(&mut self, step: &StepTrace) -> Result<()> {
        debug_assert_eq!(self.kind, TraceKind::Steps);
        self.write_line(step)
    }

    pub fn write_prediction(&mut self, row: &PredictionRow) -> Result<()> {
        debug_assert_eq!(self.kind, TraceKind::Predictions);
        self.write_line(row)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes adapter traces. Reals use the shortest decimal that round-trips.
pub fn write_trace(path: impl AsRef<Path>, traces: &[StepTrace]) -> Result<()> {
    let mut w = TraceWriter::create(path, TraceKind::Steps)?;
    for t in traces {
        w.write_step(t)?;
    }
    w.finish()
}

fn read_rows(
    path: &Path,
    accept: &[TraceKind],
    mut sink: impl FnMut(TraceKind, &str, usize) -> Result<()>,
) -> Result<()> {
    let reader = BufReader::new(File::open(path)?);
    let mut kind = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match kind {
            None => {
                let header: Header = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: line_no,
                    reason: format!("expected a header line: {e}"),
                })?;
                check_version(&header.format_version)?;
                kind = Some(
                    accept
                        .iter()
                        .copied()
                        .find(|k| k.tag() == header.kind)
                        .ok_or_else(|| Error::Format(format!("unexpected file kind `{}`", header.kind)))?,
                );
            }
            Some(k) => sink(k, &line, line_no)?,
        }
    }
    if kind.is_none() {
        return Err(Error::Format("trace file has no header line".into()));
    }
    Ok(())
}

fn parse<T: DeserializeOwned>(line: &str, line_no: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        reason: e.to_string(),
    })
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<StepTrace>> {
    let mut out = Vec::new();
    read_rows(path.as_ref(), &[TraceKind::Steps], |_, line, n| {
        out.push(parse(line, n)?);
        Ok(())
    })?;
    Ok(out)
}

/// Reads either kind of trace file as prediction rows.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRow>> {
    let mut out = Vec::new();
    read_rows(
        path.as_ref(),
        &[TraceKind::Steps, TraceKind::Predictions],
        |kind, line, n| {
            out.push(match kind {
                TraceKind::Steps => PredictionRow::from(&parse::<StepTrace>(line, n)?),
                TraceKind::Predictions => parse(line, n)?,
            });
            Ok(())
        },
    )?;
    Ok(out)
}
