//! Checks that a labeled stream has the geometry the adapter relies on:
//! features stay close to the previous activity's prototype inside a
//! segment, drop away at boundaries, and move toward the next activity's
//! prototype when they do.

use serde::{Deserialize, Serialize};

use crate::adapter::{ops::alignment_scores_into, PrototypeBank};
use crate::error::{Error, Result};
use crate::geometry::{dot, normalize_in_place};
use crate::record::StreamRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub n_within: usize,
    pub n_boundary: usize,
    pub within_mean: f64,
    pub boundary_mean: f64,
    pub within_sd: f64,
    pub boundary_sd: f64,
    pub pooled_sd: f64,
    /// `(within_mean − boundary_mean) / pooled_sd`; absent when the pooled
    /// standard deviation is zero.
    pub separability: Option<f64>,
    /// Per-step similarities, for plotting.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub within: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<f64>,
}

fn labels_of(stream: &[StreamRecord]) -> Result<Vec<usize>> {
    stream
        .iter()
        .map(|r| {
            r.label.ok_or_else(|| {
                Error::InsufficientData(format!("record {} has no label", r.t))
            })
        })
        .collect()
}

fn check_dims(stream: &[StreamRecord], bank: &PrototypeBank) -> Result<()> {
    for r in stream {
        if r.feature.len() != bank.dim() {
            return Err(Error::StreamContract {
                step: r.t,
                reason: format!(
                    "feature has dimension {}, prototypes have {}",
                    r.feature.len(),
                    bank.dim()
                ),
            });
        }
        if let Some(l) = r.label {
            if l >= bank.num_classes() {
                return Err(Error::StreamContract {
                    step: r.t,
                    reason: format!("label {l} out of range for {} classes", bank.num_classes()),
                });
            }
        }
    }
    Ok(())
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Cosine similarity of each normalized feature with the prototype of the
/// previous step's true activity, split by whether the activity changed.
pub fn validate_transition_geometry(
    stream: &[StreamRecord],
    bank: &PrototypeBank,
    eps: f64,
) -> Result<GeometryReport> {
    let labels = labels_of(stream)?;
    check_dims(stream, bank)?;
    let mut within = Vec::new();
    let mut boundary = Vec::new();
    let mut z = vec![0.0; bank.dim()];
    for t in 1..stream.len() {
        z.copy_from_slice(&stream[t].feature);
        normalize_in_place(&mut z, eps);
        let sim = dot(&z, bank.prototype(labels[t - 1]));
        if labels[t] == labels[t - 1] {
            within.push(sim);
        } else {
            boundary.push(sim);
        }
    }
    if boundary.is_empty() {
        return Err(Error::InsufficientData(
            "stream has a single segment; no boundaries to compare".into(),
        ));
    }
    if within.len() < 2 {
        return Err(Error::InsufficientData("too few within-segment steps".into()));
    }
    let (within_mean, within_sd) = mean_sd(&within);
    let (boundary_mean, boundary_sd) = mean_sd(&boundary);
    let (n1, n2) = (within.len() as f64, boundary.len() as f64);
    let pooled_sd = (((n1 - 1.0) * within_sd.powi(2) + (n2 - 1.0) * boundary_sd.powi(2))
        / (n1 + n2 - 2.0))
        .sqrt();
    let separability = (pooled_sd > 0.0).then(|| (within_mean - boundary_mean) / pooled_sd);
    Ok(GeometryReport {
        n_within: within.len(),
        n_boundary: boundary.len(),
        within_mean,
        boundary_mean,
        within_sd,
        boundary_sd,
        pooled_sd,
        separability,
        within,
        boundary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalRanking {
    pub n_boundaries: usize,
    pub top1_hits: usize,
    pub top1_accuracy: f64,
    /// `1 / (K − 1)`: chance of guessing the next activity among the others.
    pub random_baseline: f64,
}

/// At every true boundary, ranks the candidate next activities (all but the
/// previous one) by how well the direction from the previous prototype to
/// theirs aligns with the observed displacement, and counts how often the
/// true next activity ranks first.
pub fn directional_ranking(
    stream: &[StreamRecord],
    bank: &PrototypeBank,
    eps: f64,
) -> Result<DirectionalRanking> {
    let labels = labels_of(stream)?;
    check_dims(stream, bank)?;
    let (k, d) = (bank.num_classes(), bank.dim());
    let mut z = vec![0.0; d];
    let (mut disp, mut dir) = (vec![0.0; d], vec![0.0; d]);
    let mut scores = vec![0.0; k];
    let (mut n, mut hits) = (0usize, 0usize);
    for t in 1..stream.len() {
        let (prev, cur) = (labels[t - 1], labels[t]);
        if prev == cur {
            continue;
        }
        z.copy_from_slice(&stream[t].feature);
        normalize_in_place(&mut z, eps);
        alignment_scores_into(&z, bank.prototype(prev), bank, eps, &mut disp, &mut dir, &mut scores);
        let best = (0..k)
            .filter(|c| *c != prev)
            .fold(None::<usize>, |best, c| match best {
                Some(b) if scores[b] >= scores[c] => Some(b),
                _ => Some(c),
            })
            .expect("at least two classes");
        n += 1;
        hits += usize::from(best == cur);
    }
    if n == 0 {
        return Err(Error::InsufficientData(
            "stream has a single segment; no boundaries to rank".into(),
        ));
    }
    Ok(DirectionalRanking {
        n_boundaries: n,
        top1_hits: hits,
        top1_accuracy: hits as f64 / n as f64,
        random_baseline: 1.0 / (k - 1) as f64,
    })
}
