//! Evaluation of refined prediction streams.
//!
//! Macro-F1 averages over the classes that occur in the ground truth of the
//! evaluated stream only. A class that never occurs there has no meaningful
//! recall, and per-subject streams routinely miss classes; including them
//! would make scores depend on which classes a subject happened to perform.

use serde::{Deserialize, Serialize};

use crate::baselines::OnlineMethod;
use crate::error::{Error, Result};
use crate::record::StreamRecord;
use crate::geometry::{argmax, dot, normalize_in_place};
use crate::simulator::segments;

/// Rows are true labels, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn from_pairs(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                got: predictions.len(),
            });
        }
        let mut m = Self::new(num_classes);
        for (&p, &l) in predictions.iter().zip(labels) {
            m.add(l, p)?;
        }
        Ok(m)
    }

    pub fn add(&mut self, label: usize, prediction: usize) -> Result<()> {
        let k = self.counts.len();
        if label >= k || prediction >= k {
            return Err(Error::param(
                "class",
                format!("label {label} / prediction {prediction} out of range for {k} classes"),
            ));
        }
        self.counts[label][prediction] += 1;
        Ok(())
    }

    /// Adds another matrix of the same shape (confusion counts are additive
    /// across stream shards).
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::Dimension {
                expected: self.counts.len(),
                got: other.counts.len(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn label_count(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| {
            let hits: u64 = (0..self.num_classes()).map(|k| self.counts[k][k]).sum();
            hits as f64 / total as f64
        })
    }

    /// F1 per class; `None` for classes absent from the labels.
    pub fn per_class_f1(&self) -> Vec<Option<f64>> {
        let k = self.num_classes();
        (0..k)
            .map(|c| {
                let support = self.label_count(c);
                if support == 0 {
                    return None;
                }
                let tp = self.counts[c][c] as f64;
                let predicted: u64 = (0..k).map(|r| self.counts[r][c]).sum();
                let fp = predicted as f64 - tp;
                let fn_ = support as f64 - tp;
                Some(2.0 * tp / (2.0 * tp + fp + fn_))
            })
            .collect()
    }

    pub fn macro_f1(&self) -> Option<f64> {
        let present: Vec<f64> = self.per_class_f1().into_iter().flatten().collect();
        (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
    }
}

/// Unweighted mean F1 over the classes present in `labels`.
pub fn macro_f1(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::InsufficientData("no labeled steps".into()));
    }
    let m = ConfusionMatrix::from_pairs(predictions, labels, num_classes)?;
    Ok(m.macro_f1().expect("non-empty labels"))
}

/// Mean surprise within segments and at true boundaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateDiagnostics {
    pub lambda_within: Option<f64>,
    pub lambda_boundary: Option<f64>,
}

/// Splits surprise values by whether the true label changed from the
/// previous step. The first step and unlabeled steps are skipped.
pub fn gate_diagnostics(lambdas: &[f64], labels: &[Option<usize>]) -> GateDiagnostics {
    let mut acc = GateAccumulator::default();
    for (l, lambda) in labels.iter().zip(lambdas) {
        acc.push(*l, Some(*lambda));
    }
    acc.finish()
}

#[derive(Clone, Debug, Default)]
struct GateAccumulator {
    prev: Option<usize>,
    within: (f64, u64),
    boundary: (f64, u64),
}

impl GateAccumulator {
    fn push(&mut self, label: Option<usize>, lambda: Option<f64>) {
        if let (Some(prev), Some(cur), Some(lambda)) = (self.prev, label, lambda) {
            let slot = if prev == cur {
                &mut self.within
            } else {
                &mut self.boundary
            };
            slot.0 += lambda;
            slot.1 += 1;
        }
        self.prev = label;
    }

    fn finish(&self) -> GateDiagnostics {
        let mean = |(s, n): (f64, u64)| (n > 0).then(|| s / n as f64);
        GateDiagnostics {
            lambda_within: mean(self.within),
            lambda_boundary: mean(self.boundary),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    /// Absent when the stream has no labels.
    pub macro_f1: Option<f64>,
    pub per_class_f1: Vec<Option<f64>>,
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub n_steps: u64,
    pub n_labeled: u64,
    pub annihilation_count: u64,
    pub mean_lambda: Option<f64>,
    pub lambda_at_boundaries: Option<f64>,
    pub lambda_within_segments: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Streaming builder for [`EvalReport`].
#[derive(Clone, Debug)]
pub struct Evaluator {
    method: String,
    confusion: ConfusionMatrix,
    n_steps: u64,
    annihilations: u64,
    lambda_total: (f64, u64),
    gate: GateAccumulator,
}

impl Evaluator {
    pub fn new(method: impl Into<String>, num_classes: usize) -> Self {
        Evaluator {
            method: method.into(),
            confusion: ConfusionMatrix::new(num_classes),
            n_steps: 0,
            annihilations: 0,
            lambda_total: (0.0, 0),
            gate: GateAccumulator::default(),
        }
    }

    pub fn push(
        &mut self,
        label: Option<usize>,
        refined: &[f64],
        surprise: Option<f64>,
        annihilated: bool,
    ) -> Result<()> {
        self.n_steps += 1;
        if let Some(l) = label {
            self.confusion.add(l, argmax(refined))?;
        }
        if annihilated {
            self.annihilations += 1;
        }
        if let Some(lambda) = surprise {
            self.lambda_total.0 += lambda;
            self.lambda_total.1 += 1;
        }
        self.gate.push(label, surprise);
        Ok(())
    }

    pub fn finish(self) -> EvalReport {
        let gate = self.gate.finish();
        let n_labeled = self.confusion.total();
        let mut warnings = Vec::new();
        if n_labeled == 0 && self.n_steps > 0 {
            warnings.push("stream has no labels; report carries diagnostics only".into());
        }
        let (s, n) = self.lambda_total;
        EvalReport {
            method: self.method,
            macro_f1: self.confusion.macro_f1(),
            per_class_f1: self.confusion.per_class_f1(),
            accuracy: self.confusion.accuracy(),
            confusion: self.confusion,
            n_steps: self.n_steps,
            n_labeled,
            annihilation_count: self.annihilations,
            mean_lambda: (n > 0).then(|| s / n as f64),
            lambda_at_boundaries: gate.lambda_boundary,
            lambda_within_segments: gate.lambda_within,
            warnings,
        }
    }
}

/// Runs `method` over `stream` in order and evaluates its refined
/// predictions.
pub fn evaluate(method: &mut dyn OnlineMethod, stream: &[StreamRecord]) -> Result<EvalReport> {
    let k = stream.first().map_or(0, StreamRecord::num_classes);
    let mut eval = Evaluator::new(method.name(), k);
    for r in stream {
        let out = method.step(r)?;
        eval.push(r.label, out.refined.as_slice(), out.surprise, out.annihilated)?;
    }
    Ok(eval.finish())
}

/// Mean prototype–centroid cosine over the first and last segment of a
/// class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAlignment {
    pub class: usize,
    pub n_segments: usize,
    pub first_segment_mean_cos: f64,
    pub last_segment_mean_cos: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Classes with at least two segments.
    pub classes: Vec<ClassAlignment>,
    /// Classes left out, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Streaming version of [`prototype_alignment`]: feed the label and the
/// prototype bank after each step.
#[derive(Clone, Debug)]
pub struct AlignmentTracker {
    centroids: Vec<Vec<f64>>,
    labels: Vec<Option<usize>>,
    cosines: Vec<f64>,
}

impl AlignmentTracker {
    pub fn new(class_means: &[Vec<f64>], eps: f64) -> Self {
        let centroids = class_means
            .iter()
            .map(|m| {
                let mut c = m.clone();
                normalize_in_place(&mut c, eps);
                c
            })
            .collect();
        AlignmentTracker {
            centroids,
            labels: Vec::new(),
            cosines: Vec::new(),
        }
    }

    /// Records the cosine between the labeled class's prototype and its
    /// ground-truth centroid.
    pub fn push<'a>(&mut self, label: Option<usize>, mut prototypes: impl Iterator<Item = &'a [f64]>) {
        let cos = label
            .and_then(|l| prototypes.nth(l).map(|p| dot(p, &self.centroids[l])))
            .unwrap_or(f64::NAN);
        self.labels.push(label);
        self.cosines.push(cos);
    }

    pub fn finish(&self) -> AlignmentReport {
        let k = self.centroids.len();
        let mut per_class: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
        for (label, start, end) in segments(&self.labels) {
            if label < k {
                per_class[label].push((start, end));
            }
        }
        let seg_mean = |(a, b): (usize, usize)| self.cosines[a..b].iter().sum::<f64>() / (b - a) as f64;
        let mut classes = Vec::new();
        let mut skipped = Vec::new();
        for (class, segs) in per_class.iter().enumerate() {
            match segs.len() {
                0 => skipped.push((class, "no segments".to_string())),
                1 => skipped.push((class, "single segment".to_string())),
                n => classes.push(ClassAlignment {
                    class,
                    n_segments: n,
                    first_segment_mean_cos: seg_mean(segs[0]),
                    last_segment_mean_cos: seg_mean(segs[n - 1]),
                }),
            }
        }
        AlignmentReport { classes, skipped }
    }
}

/// Per-class alignment of the adapted prototypes with the normalized
/// ground-truth centroids, compared between each class's first and last
/// segment. `snapshots[t]` is the prototype bank after step `t`.
pub fn prototype_alignment(
    snapshots: &[Vec<Vec<f64>>],
    labels: &[Option<usize>],
    class_means: &[Vec<f64>],
    eps: f64,
) -> Result<AlignmentReport> {
    if snapshots.len() != labels.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            got: snapshots.len(),
        });
    }
    let mut tracker = AlignmentTracker::new(class_means, eps);
    for (snap, label) in snapshots.iter().zip(labels) {
        tracker.push(*label, snap.iter().map(Vec::as_slice));
    }
    Ok(tracker.finish())
}
