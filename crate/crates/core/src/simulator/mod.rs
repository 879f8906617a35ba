//! Synthetic activity streams with planted ground truth.
//!
//! A latent activity process emits contiguous segments; within a segment the
//! feature is the class centroid plus isotropic Gaussian noise, and the
//! logits come from a linear head fitted to a *source* domain whose
//! centroids differ from the target ones. That mismatch is what makes the
//! raw classifier wrong in a way temporal and geometric structure can fix.

mod geometry;
mod permute;
mod rng;

pub use geometry::{directional_ranking, validate_transition_geometry, DirectionalRanking, GeometryReport};
pub use permute::{permute_stream, Order};
pub use rng::SimRng;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::record::{Scores, StreamRecord};

/// How segment durations are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentLengths {
    /// Geometric with the configured mean (support ≥ 1).
    Geometric,
    /// Every segment has exactly the configured length (rounded).
    Fixed,
}

/// Source/target mismatch applied to the planted head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shift {
    /// Common displacement of every target centroid relative to the source
    /// domain (d values).
    pub offset: Vec<f64>,
    /// Per-class perturbation of the source centroids the head was fitted
    /// on (K × d).
    pub head_perturbation: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub segment_lengths: SegmentLengths,
    pub mean_segment_length: f64,
    /// Row-stochastic K × K matrix. The diagonal is ignored: the next
    /// activity is drawn from the off-diagonal part of the current row.
    pub transition_matrix: Vec<Vec<f64>>,
    /// Target-domain class centroids (K × d).
    pub class_means: Vec<Vec<f64>>,
    pub noise_sigma: f64,
    pub shift: Shift,
    /// Scale of the planted head's logits.
    pub logit_gain: f64,
    /// Multiplicative preference for entering each class (K values).
    pub class_prior_skew: Vec<f64>,
    /// Seed that drew the layout (centroids and shift). Streams are drawn
    /// with their own seed, passed to [`generate_stream`].
    pub seed: u64,
}

/// Linear head `ℓ = W z + b` planted by the simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedHead {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl PlantedHead {
    pub fn logits(&self, feature: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| crate::geometry::dot(w, feature) + b)
            .collect()
    }
}

/// Stream length of the default benchmark.
pub const BENCHMARK_LENGTH: usize = 4000;
/// Seeds of the default benchmark.
pub const BENCHMARK_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Knobs for the default benchmark layout.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkParams {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub mean_segment_length: f64,
    pub noise_sigma: f64,
    pub offset_norm: f64,
    pub perturbation_norm: f64,
    pub logit_gain: f64,
    pub class_prior_skew: Vec<f64>,
    /// Classes `(0, 1)`, `(2, 3)`, ... up to this many pairs get centroids
    /// with cosine `pair_cosine`, so the head confuses them under noise.
    pub confusable_pairs: usize,
    pub pair_cosine: f64,
    /// Angle (radians) of an isoclinic rotation applied to every source
    /// centroid: each one ends up exactly this far from its target centroid.
    pub rotation_angle: f64,
    /// Draw mutually orthogonal class centroids (needs `K ≤ d`) instead of
    /// independent random directions.
    pub orthogonal_means: bool,
    /// Probability that a segment of class `2i` is followed by `2i + 1` and
    /// vice versa; the remaining mass is spread uniformly. Unpaired classes
    /// jump uniformly.
    pub partner_transition: f64,
    pub layout_seed: u64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            num_classes: 5,
            feature_dim: 16,
            mean_segment_length: 12.0,
            noise_sigma: 0.01,
            offset_norm: 0.951,
            perturbation_norm: 0.5827,
            logit_gain: 2.0,
            class_prior_skew: vec![0.4, 0.6, 0.8, 1.0, 1.0],
            confusable_pairs: 0,
            pair_cosine: 0.0,
            rotation_angle: 0.474,
            orthogonal_means: true,
            partner_transition: 0.0,
            layout_seed: 707_387,
        }
    }
}

/// Rotation by `angle` in each of `d / 2` orthogonal planes of a random
/// basis, so every vector turns by the same angle.
fn isoclinic_rotation(d: usize, angle: f64, rng: &mut SimRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.gaussian());
    let q = g.qr().q();
    let mut block = DMatrix::identity(d, d);
    let (c, s) = (libm::cos(angle), libm::sin(angle));
    for p in 0..d / 2 {
        let (i, j) = (2 * p, 2 * p + 1);
        block[(i, i)] = c;
        block[(j, j)] = c;
        block[(i, j)] = -s;
        block[(j, i)] = s;
    }
    &q * block * q.transpose()
}

impl BenchmarkParams {
    pub fn build(&self) -> SimConfig {
        let (k, d) = (self.num_classes, self.feature_dim);
        let mut rng = SimRng::new(self.layout_seed);
        let direction = |norm: f64, rng: &mut SimRng| -> Vec<f64> {
            let v: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
            let n = crate::geometry::l2_norm(&v);
            v.into_iter().map(|x| x * norm / n).collect()
        };
        let mut class_means: Vec<Vec<f64>> = (0..k).map(|_| direction(1.0, &mut rng)).collect();
        if self.orthogonal_means && k <= d {
            let q = DMatrix::from_fn(d, k, |i, j| class_means[j][i]).qr().q();
            class_means = (0..k).map(|j| q.column(j).iter().copied().collect()).collect();
        }
        let c = self.pair_cosine;
        for pair in 0..self.confusable_pairs.min(k / 2) {
            let (a, b) = (2 * pair, 2 * pair + 1);
            let proj = crate::geometry::dot(&class_means[a], &class_means[b]);
            let mut orth: Vec<f64> = class_means[b]
                .iter()
                .zip(&class_means[a])
                .map(|(y, x)| y - proj * x)
                .collect();
            crate::geometry::normalize_in_place(&mut orth, 0.0);
            let s = (1.0 - c * c).max(0.0).sqrt();
            class_means[b] = class_means[a].iter().zip(&orth).map(|(x, o)| c * x + s * o).collect();
        }
        let offset = direction(self.offset_norm, &mut rng);
        let rotation = isoclinic_rotation(d, self.rotation_angle, &mut rng);
        let head_perturbation = class_means
            .iter()
            .map(|m| {
                let extra = direction(self.perturbation_norm, &mut rng);
                let rotated = &rotation * DVector::from_column_slice(m);
                (0..d).map(|i| rotated[i] - m[i] + extra[i]).collect()
            })
            .collect();
        let transition_matrix = (0..k)
            .map(|i| {
                let partner = i ^ 1;
                let (pp, rest) = if partner < k && self.partner_transition > 0.0 {
                    (self.partner_transition, (1.0 - self.partner_transition) / (k - 2).max(1) as f64)
                } else {
                    (1.0 / (k - 1) as f64, 1.0 / (k - 1) as f64)
                };
                (0..k)
                    .map(|j| match j {
                        j if j == i => 0.0,
                        j if j == partner => pp,
                        _ => rest,
                    })
                    .collect()
            })
            .collect();
        SimConfig {
            num_classes: k,
            feature_dim: d,
            segment_lengths: SegmentLengths::Geometric,
            mean_segment_length: self.mean_segment_length,
            transition_matrix,
            class_means,
            noise_sigma: self.noise_sigma,
            shift: Shift {
                offset,
                head_perturbation,
            },
            logit_gain: self.logit_gain,
            class_prior_skew: self.class_prior_skew.clone(),
            seed: self.layout_seed,
        }
    }
}

impl SimConfig {
    /// The pinned default benchmark: 5 classes, 16-dimensional features,
    /// cross-subject shift on.
    pub fn benchmark() -> Self {
        BenchmarkParams::default().build()
    }

    pub fn validate(&self) -> Result<()> {
        let (k, d) = (self.num_classes, self.feature_dim);
        if k < 2 {
            return Err(Error::config("num_classes", "must be at least 2"));
        }
        if d < 1 {
            return Err(Error::config("feature_dim", "must be at least 1"));
        }
        if !(self.mean_segment_length >= 1.0) {
            return Err(Error::config("mean_segment_length", "must be at least 1"));
        }
        if !(self.noise_sigma > 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::config("noise_sigma", "must be positive"));
        }
        if !self.logit_gain.is_finite() {
            return Err(Error::config("logit_gain", "must be finite"));
        }
        check_matrix("transition_matrix", &self.transition_matrix, k, k)?;
        check_matrix("class_means", &self.class_means, k, d)?;
        check_matrix("shift.head_perturbation", &self.shift.head_perturbation, k, d)?;
        check_vector("shift.offset", &self.shift.offset, d)?;
        check_vector("class_prior_skew", &self.class_prior_skew, k)?;
        if self.class_prior_skew.iter().any(|s| *s < 0.0) {
            return Err(Error::config("class_prior_skew", "entries must be non-negative"));
        }
        for (i, row) in self.transition_matrix.iter().enumerate() {
            if row.iter().any(|p| *p < 0.0) {
                return Err(Error::config(
                    format!("transition_matrix[{i}]"),
                    "entries must be non-negative",
                ));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    format!("transition_matrix[{i}]"),
                    format!("row sums to {total}, expected 1"),
                ));
            }
        }
        let jump = self.jump_matrix();
        if let Some(i) = jump.iter().position(|row| row.iter().sum::<f64>() == 0.0) {
            return Err(Error::config(
                format!("transition_matrix[{i}]"),
                "no off-diagonal mass to leave this class",
            ));
        }
        Ok(())
    }

    /// Off-diagonal transitions reweighted by `class_prior_skew`, rows
    /// renormalized; all-zero rows stay zero.
    pub fn jump_matrix(&self) -> Vec<Vec<f64>> {
        self.transition_matrix
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r: Vec<f64> = row
                    .iter()
                    .zip(&self.class_prior_skew)
                    .enumerate()
                    .map(|(j, (p, s))| if i == j { 0.0 } else { p * s })
                    .collect();
                let total: f64 = r.iter().sum();
                if total > 0.0 {
                    r.iter_mut().for_each(|x| *x /= total);
                }
                r
            })
            .collect()
    }

    /// Stationary distribution of the segment-to-segment jump chain. With
    /// class-independent segment durations this is also the long-run label
    /// marginal.
    pub fn stationary_distribution(&self) -> Vec<f64> {
        let k = self.num_classes;
        let jump = self.jump_matrix();
        // (Jᵀ − I) π = 0 with the last equation replaced by Σπ = 1.
        let mut a = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = jump[j][i] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..k {
            a[(k - 1, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(k);
        rhs[k - 1] = 1.0;
        match a.lu().solve(&rhs) {
            Some(pi) => pi.iter().map(|x| x.max(0.0)).collect(),
            None => vec![1.0 / k as f64; k],
        }
    }

    /// Head fitted on the source domain: a nearest-centroid linear
    /// discriminant, `w_k = g·s_k` and `b_k = −g‖s_k‖²/2`, where the source
    /// centroid `s_k` is the target centroid minus the offset plus the
    /// per-class perturbation.
    pub fn planted_head(&self) -> PlantedHead {
        let g = self.logit_gain;
        let mut weights = Vec::with_capacity(self.num_classes);
        let mut bias = Vec::with_capacity(self.num_classes);
        for (mean, pert) in self.class_means.iter().zip(&self.shift.head_perturbation) {
            let source: Vec<f64> = mean
                .iter()
                .zip(&self.shift.offset)
                .zip(pert)
                .map(|((m, o), p)| m - o + p)
                .collect();
            bias.push(-0.5 * g * crate::geometry::dot(&source, &source));
            weights.push(source.into_iter().map(|s| g * s).collect());
        }
        PlantedHead { weights, bias }
    }
}

fn check_vector(field: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::config(field, format!("expected {len} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(field, "entries must be finite"));
    }
    Ok(())
}

fn check_matrix(field: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows {
        return Err(Error::config(field, format!("expected {rows} rows, got {}", m.len())));
    }
    for (i, row) in m.iter().enumerate() {
        check_vector(&format!("{field}[{i}]"), row, cols)?;
    }
    Ok(())
}

/// Draws `length` records from the configured process. Identical
/// `(cfg, seed, length)` always produce identical records.
///
/// Each record's `meta` carries `segment` (running segment id) and
/// `boundary` (true on the first record of every segment after the first).
pub fn generate_stream(cfg: &SimConfig, length: usize, seed: u64) -> Result<Vec<StreamRecord>> {
    cfg.validate()?;
    if length == 0 {
        return Err(Error::config("length", "must be at least 1"));
    }
    let head = cfg.planted_head();
    let jump = cfg.jump_matrix();
    let mut rng = SimRng::new(seed);
    let cap = length as u64;
    let draw_length = |rng: &mut SimRng| match cfg.segment_lengths {
        SegmentLengths::Geometric => rng.geometric_length(cfg.mean_segment_length, cap),
        SegmentLengths::Fixed => (cfg.mean_segment_length.round() as u64).clamp(1, cap),
    };

    let mut state = rng.categorical(&cfg.stationary_distribution());
    let mut remaining = draw_length(&mut rng);
    let mut segment = 0u64;
    let mut records = Vec::with_capacity(length);
    for t in 0..length {
        let mut boundary = false;
        if remaining == 0 {
            state = rng.categorical(&jump[state]);
            remaining = draw_length(&mut rng);
            segment += 1;
            boundary = true;
        }
        remaining -= 1;
        let feature: Vec<f64> = cfg.class_means[state]
            .iter()
            .map(|m| m + cfg.noise_sigma * rng.gaussian())
            .collect();
        let logits = head.logits(&feature);
        let mut meta = Map::new();
        meta.insert("segment".into(), Value::from(segment));
        meta.insert("boundary".into(), Value::from(boundary));
        records.push(StreamRecord {
            t: t as u64,
            feature,
            scores: Scores::Logits(logits),
            label: Some(state),
            meta,
        });
    }
    Ok(records)
}

/// Contiguous runs of equal labels as `(label, start, end_exclusive)`.
/// Unlabeled records end the current run and are skipped.
pub fn segments(labels: &[Option<usize>]) -> Vec<(usize, usize, usize)> {
    let mut out: Vec<(usize, usize, usize)> = Vec::new();
    for (t, label) in labels.iter().enumerate() {
        match (label, out.last_mut()) {
            (Some(l), Some(last)) if last.0 == *l && last.2 == t => last.2 = t + 1,
            (Some(l), _) => out.push((*l, t, t + 1)),
            (None, _) => {}
        }
    }
    out
}
