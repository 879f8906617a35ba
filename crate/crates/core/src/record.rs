//! One time step of an activity stream as seen by an online method.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{project_in_place, softmax_in_place, ProbVector, EPSILON};

/// Tolerance on `Σ p = 1` for records that carry probabilities directly.
pub const PROBS_TOLERANCE: f64 = 1e-4;

/// Whether a stream carries raw logits or already-normalized probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Logits,
    Probs,
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logits" => Ok(ScoreKind::Logits),
            "probs" => Ok(ScoreKind::Probs),
            other => Err(Error::param(
                "kind",
                format!("expected `logits` or `probs`, got `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scores {
    Logits(Vec<f64>),
    Probs(Vec<f64>),
}

impl Scores {
    pub fn kind(&self) -> ScoreKind {
        match self {
            Scores::Logits(_) => ScoreKind::Logits,
            Scores::Probs(_) => ScoreKind::Probs,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Scores::Logits(v) | Scores::Probs(v) => v,
        }
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    /// Writes the raw class distribution `p_t` into `out`.
    ///
    /// Logits go through a unit-temperature softmax. Probabilities are
    /// checked against the simplex (to [`PROBS_TOLERANCE`]) and rescaled to
    /// sum to one exactly.
    pub fn raw_distribution_into(&self, out: &mut [f64]) -> std::result::Result<(), String> {
        let values = self.values();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(format!("non-finite score at class {i}"));
        }
        out.copy_from_slice(values);
        match self {
            Scores::Logits(_) => softmax_in_place(out, 1.0),
            Scores::Probs(_) => {
                if let Some(i) = values.iter().position(|v| *v < 0.0) {
                    return Err(format!("negative probability at class {i}"));
                }
                let total: f64 = values.iter().sum();
                if (total - 1.0).abs() > PROBS_TOLERANCE {
                    return Err(format!("probabilities sum to {total}"));
                }
                project_in_place(out, EPSILON);
            }
        }
        Ok(())
    }

    pub fn raw_distribution(&self) -> Result<ProbVector> {
        let mut out = vec![0.0; self.len()];
        self.raw_distribution_into(&mut out)
            .map_err(|reason| Error::param("scores", reason))?;
        Ok(ProbVector::from_simplex(out))
    }
}

/// A single observation: the encoder feature `z_t`, the head's scores, and
/// optionally the ground-truth activity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord", into = "RawRecord")]
pub struct StreamRecord {
    pub t: u64,
    pub feature: Vec<f64>,
    pub scores: Scores,
    pub label: Option<usize>,
    pub meta: Map<String, Value>,
}

impl StreamRecord {
    pub fn new(t: u64, feature: Vec<f64>, scores: Scores) -> Self {
        StreamRecord {
            t,
            feature,
            scores,
            label: None,
            meta: Map::new(),
        }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn num_classes(&self) -> usize {
        self.scores.len()
    }

    pub fn dim(&self) -> usize {
        self.feature.len()
    }
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    t: u64,
    feature: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logits: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    meta: Map<String, Value>,
}

impl TryFrom<RawRecord> for StreamRecord {
    type Error = String;

    fn try_from(raw: RawRecord) -> std::result::Result<Self, String> {
        let scores = match (raw.logits, raw.probs) {
            (Some(l), None) => Scores::Logits(l),
            (None, Some(p)) => Scores::Probs(p),
            (Some(_), Some(_)) => return Err("record has both `logits` and `probs`".into()),
            (None, None) => return Err("record has neither `logits` nor `probs`".into()),
        };
        Ok(StreamRecord {
            t: raw.t,
            feature: raw.feature,
            scores,
            label: raw.label,
            meta: raw.meta,
        })
    }
}

impl From<StreamRecord> for RawRecord {
    fn from(r: StreamRecord) -> Self {
        let (logits, probs) = match r.scores {
            Scores::Logits(l) => (Some(l), None),
            Scores::Probs(p) => (None, Some(p)),
        };
        RawRecord {
            t: r.t,
            feature: r.feature,
            logits,
            probs,
            label: r.label,
            meta: r.meta,
        }
    }
}
