use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::record::{ScoreKind, Scores, StreamRecord, PROBS_TOLERANCE};

use super::{check_version, Header};

const STREAM_KIND: &str = "stream";

/// Lazily reads a stream file, one record at a time.
///
/// Files ending in `.csv` are read as CSV with header
/// `t,label,f0..f{d-1},l0..l{K-1}` (or `p0..` for probabilities; the label
/// cell may be empty). Anything else is read as JSON Lines. Every record
/// must carry `declared_kind` scores and match the dimensions of the first
/// record.
pub fn read_stream(path: impl AsRef<Path>, declared_kind: ScoreKind) -> Result<StreamReader> {
    let path = path.as_ref();
    let file = BufReader::new(File::open(path)?);
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let source = if is_csv {
        Source::Csv(CsvSource::new(file, declared_kind)?)
    } else {
        Source::Jsonl {
            reader: file,
            buf: String::new(),
            line: 0,
        }
    };
    Ok(StreamReader {
        source,
        declared_kind,
        shape: None,
        index: 0,
        failed: false,
    })
}

/// Iterator returned by [`read_stream`]. Stops after the first error.
pub struct StreamReader {
    source: Source,
    declared_kind: ScoreKind,
    shape: Option<(usize, usize)>,
    index: u64,
    failed: bool,
}

enum Source {
    Jsonl {
        reader: BufReader<File>,
        buf: String,
        line: usize,
    },
    Csv(CsvSource),
}

impl StreamReader {
    fn next_raw(&mut self) -> Option<Result<(usize, StreamRecord)>> {
        match &mut self.source {
            Source::Jsonl { reader, buf, line } => loop {
                buf.clear();
                match reader.read_line(buf) {
                    Ok(0) => return None,
                    Ok(_) => {}
                    Err(e) => return Some(Err(e.into())),
                }
                *line += 1;
                let text = buf.trim();
                if text.is_empty() {
                    continue;
                }
                let parse_err = |e: serde_json::Error| Error::Parse {
                    line: *line,
                    reason: e.to_string(),
                };
                if *line == 1 && text.contains("\"format_version\"") {
                    let header: Header = match serde_json::from_str(text) {
                        Ok(h) => h,
                        Err(e) => return Some(Err(parse_err(e))),
                    };
                    if let Err(e) = check_version(&header.format_version) {
                        return Some(Err(e));
                    }
                    if header.kind != STREAM_KIND {
                        return Some(Err(Error::Format(format!(
                            "expected a `{STREAM_KIND}` file, found `{}`",
                            header.kind
                        ))));
                    }
                    continue;
                }
                return Some(
                    serde_json::from_str::<StreamRecord>(text)
                        .map(|r| (*line, r))
                        .map_err(parse_err),
                );
            },
            Source::Csv(csv) => csv.next(),
        }
    }

    fn check(&mut self, line: usize, record: &StreamRecord) -> Result<()> {
        if record.scores.kind() != self.declared_kind {
            return Err(Error::Validation {
                line,
                reason: format!(
                    "record carries {:?} but the stream was declared {:?}",
                    record.scores.kind(),
                    self.declared_kind
                ),
            });
        }
        let shape = (record.dim(), record.num_classes());
        match self.shape {
            None => {
                if shape.0 == 0 || shape.1 < 2 {
                    return Err(Error::StreamContract {
                        step: self.index,
                        reason: format!(
                            "line {line}: need a non-empty feature and at least 2 classes, got d={} K={}",
                            shape.0, shape.1
                        ),
                    });
                }
                self.shape = Some(shape);
            }
            Some(first) if first != shape => {
                return Err(Error::StreamContract {
                    step: self.index,
                    reason: format!(
                        "line {line}: expected d={} K={}, got d={} K={}",
                        first.0, first.1, shape.0, shape.1
                    ),
                });
            }
            Some(_) => {}
        }
        if let Some(i) = record.feature.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation {
                line,
                reason: format!("non-finite feature component {i}"),
            });
        }
        if let Some(l) = record.label {
            if l >= shape.1 {
                return Err(Error::Validation {
                    line,
                    reason: format!("label {l} out of range for {} classes", shape.1),
                });
            }
        }
        let values = record.scores.values();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation {
                line,
                reason: format!("non-finite score {i}"),
            });
        }
        if let Scores::Probs(p) = &record.scores {
            let total: f64 = p.iter().sum();
            if p.iter().any(|v| *v < 0.0) || (total - 1.0).abs() > PROBS_TOLERANCE {
                return Err(Error::Validation {
                    line,
                    reason: format!("probabilities off the simplex (sum {total})"),
                });
            }
        }
        Ok(())
    }
}

impl Iterator for StreamReader {
    type Item = Result<StreamRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let out = self
            .next_raw()?
            .and_then(|(line, r)| self.check(line, &r).map(|()| r));
        match &out {
            Ok(_) => self.index += 1,
            Err(_) => self.failed = true,
        }
        Some(out)
    }
}

struct CsvSource {
    records: csv::StringRecordsIntoIter<BufReader<File>>,
    dim: usize,
    classes: usize,
    kind: ScoreKind,
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        reason: e.to_string(),
    }
}

impl CsvSource {
    fn new(file: BufReader<File>, declared: ScoreKind) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let header = reader.headers().map_err(csv_err)?.clone();
        let bad = |reason: String| Error::Parse { line: 1, reason };
        let cols: Vec<&str> = header.iter().map(str::trim).collect();
        if cols.is_empty() {
            return Ok(CsvSource {
                records: reader.into_records(),
                dim: 0,
                classes: 0,
                kind: declared,
            });
        }
        if cols.len() < 2 || cols[0] != "t" || cols[1] != "label" {
            return Err(bad("header must start with `t,label`".into()));
        }
        let dim = cols[2..].iter().take_while(|c| c.starts_with('f')).count();
        let rest = &cols[2 + dim..];
        let prefix = match declared {
            ScoreKind::Logits => 'l',
            ScoreKind::Probs => 'p',
        };
        for (i, c) in cols[2..2 + dim].iter().enumerate() {
            if *c != format!("f{i}") {
                return Err(bad(format!("expected column `f{i}`, found `{c}`")));
            }
        }
        for (i, c) in rest.iter().enumerate() {
            if *c != format!("{prefix}{i}") {
                return Err(bad(format!("expected column `{prefix}{i}`, found `{c}`")));
            }
        }
        Ok(CsvSource {
            records: reader.into_records(),
            dim,
            classes: rest.len(),
            kind: declared,
        })
    }

    fn next(&mut self) -> Option<Result<(usize, StreamRecord)>> {
        let row = match self.records.next()? {
            Ok(r) => r,
            Err(e) => return Some(Err(csv_err(e))),
        };
        let line = row.position().map_or(0, |p| p.line() as usize);
        Some(self.parse_row(&row, line).map(|r| (line, r)))
    }

    fn parse_row(&self, row: &csv::StringRecord, line: usize) -> Result<StreamRecord> {
        let bad = |reason: String| Error::Parse { line, reason };
        let t = row[0]
            .trim()
            .parse::<u64>()
            .map_err(|e| bad(format!("column `t`: {e}")))?;
        let label = match row[1].trim() {
            "" => None,
            s => Some(s.parse::<usize>().map_err(|e| bad(format!("column `label`: {e}")))?),
        };
        let mut values = Vec::with_capacity(self.dim + self.classes);
        for (i, cell) in row.iter().enumerate().skip(2) {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("column {i}: {e}")))?,
            );
        }
        let scores_vec = values.split_off(self.dim);
        let scores = match self.kind {
            ScoreKind::Logits => Scores::Logits(scores_vec),
            ScoreKind::Probs => Scores::Probs(scores_vec),
        };
        Ok(StreamRecord {
            t,
            feature: values,
            scores,
            label,
            meta: Default::default(),
        })
    }
}

/// Writes records as JSON Lines behind a `stream` header.
pub fn write_stream<'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a StreamRecord>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let json = |e: serde_json::Error| Error::Format(e.to_string());
    serde_json::to_writer(&mut out, &Header::new(STREAM_KIND)).map_err(json)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(json)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes records as CSV. `meta` is dropped; all records must share one
/// score kind and shape.
pub fn write_stream_csv(path: impl AsRef<Path>, records: &[StreamRecord]) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    let Some(first) = records.first() else {
        out.flush()?;
        return Ok(());
    };
    let prefix = match first.scores.kind() {
        ScoreKind::Logits => "l",
        ScoreKind::Probs => "p",
    };
    let mut header = vec!["t".to_string(), "label".to_string()];
    header.extend((0..first.dim()).map(|i| format!("f{i}")));
    header.extend((0..first.num_classes()).map(|i| format!("{prefix}{i}")));
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    out.write_record(&header).map_err(fmt)?;
    for (i, r) in records.iter().enumerate() {
        if r.dim() != first.dim()
            || r.num_classes() != first.num_classes()
            || r.scores.kind() != first.scores.kind()
        {
            return Err(Error::StreamContract {
                step: i as u64,
                reason: "record shape differs from the first record".into(),
            });
        }
        let mut row = vec![r.t.to_string(), r.label.map_or(String::new(), |l| l.to_string())];
        row.extend(r.feature.iter().chain(r.scores.values()).map(|v| v.to_string()));
        out.write_record(&row).map_err(fmt)?;
    }
    out.flush()?;
    Ok(())
}
