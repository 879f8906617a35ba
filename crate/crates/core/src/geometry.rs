//! Unit-vector and probability-simplex primitives.
//!
//! Every normalization divides by `‖v‖ + ε` rather than `‖v‖`, so the zero
//! vector maps to the zero vector instead of NaN. Downstream code relies on
//! that: a zero displacement or a prototype sitting exactly on the expected
//! state produces a zero direction, whose dot product with anything is 0.
//!
//! The slice kernels (`*_in_place`, [`dot`], [`l2_norm`]) are what the
//! adapter's hot loop uses on its scratch buffers; the typed constructors on
//! [`UnitVector`] and [`ProbVector`] wrap the same kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical-stability constant used by every normalization.
pub const EPSILON: f64 = 1e-8;

/// Tolerance on `Σ p = 1` accepted by [`ProbVector::new`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Dot product, summed in ascending index order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Divides `v` by `‖v‖ + eps` in place and returns the original norm.
#[inline]
pub fn normalize_in_place(v: &mut [f64], eps: f64) -> f64 {
    let norm = l2_norm(v);
    let denom = norm + eps;
    for x in v.iter_mut() {
        *x /= denom;
    }
    norm
}

/// Rescales a non-negative vector onto the simplex in place.
///
/// Returns `true` when the mass was at most `eps` and the vector was replaced
/// by the uniform distribution instead.
#[inline]
pub fn project_in_place(a: &mut [f64], eps: f64) -> bool {
    let total: f64 = a.iter().sum();
    if total <= eps {
        let u = 1.0 / a.len() as f64;
        a.fill(u);
        return true;
    }
    for x in a.iter_mut() {
        *x /= total;
    }
    false
}

/// Temperature softmax in place, shifted by the maximum score.
#[inline]
pub fn softmax_in_place(scores: &mut [f64], tau: f64) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = ((*s - max) / tau).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

/// `1 - a·b` clamped to `[0, 2]`.
#[inline]
pub fn cosine_distance_slices(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - dot(a, b)).clamp(0.0, 2.0)
}

/// Index of the largest component; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// An ℓ2-normalized feature direction.
///
/// The only way to build one from raw data is [`UnitVector::normalize`]; the
/// all-zero input yields the all-zero vector, which [`is_degenerate`]
/// reports.
///
/// [`is_degenerate`]: UnitVector::is_degenerate
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn normalize(raw: &[f64], eps: f64) -> Result<Self> {
        check_finite(raw)?;
        let mut values = raw.to_vec();
        normalize_in_place(&mut values, eps);
        Ok(UnitVector(values))
    }

    /// Wraps values the caller has already normalized.
    pub(crate) fn from_normalized(values: Vec<f64>) -> Self {
        UnitVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    /// True when the source vector had (near-)zero norm, so this is not a
    /// direction at all.
    pub fn is_degenerate(&self) -> bool {
        self.norm() < 0.5
    }
}

/// A point on the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates that `values` already lies on the simplex.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::Negative { index, value });
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::param(
                "probabilities",
                format!("sum {total} is not within {SIMPLEX_TOLERANCE} of 1"),
            ));
        }
        Ok(ProbVector(values))
    }

    pub fn uniform(k: usize) -> Self {
        ProbVector(vec![1.0 / k as f64; k])
    }

    pub fn one_hot(k: usize, index: usize) -> Self {
        let mut values = vec![0.0; k];
        values[index] = 1.0;
        ProbVector(values)
    }

    /// `a / Σa`, or uniform when `Σa ≤ eps`.
    pub fn simplex_project(a: &[f64], eps: f64) -> Result<Self> {
        check_finite(a)?;
        if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::Negative { index, value });
        }
        let mut values = a.to_vec();
        project_in_place(&mut values, eps);
        Ok(ProbVector(values))
    }

    pub fn softmax(scores: &[f64], tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::param("tau", format!("must be positive, got {tau}")));
        }
        check_finite(scores)?;
        let mut values = scores.to_vec();
        softmax_in_place(&mut values, tau);
        Ok(ProbVector(values))
    }

    pub(crate) fn from_simplex(values: Vec<f64>) -> Self {
        ProbVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ProbVector::new(values)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// `v / (‖v‖₂ + eps)`.
pub fn normalize(v: &[f64], eps: f64) -> Result<UnitVector> {
    UnitVector::normalize(v, eps)
}

/// Projects a non-negative vector onto the simplex, falling back to uniform
/// when its mass is at most `eps`.
pub fn simplex_project(a: &[f64], eps: f64) -> Result<ProbVector> {
    ProbVector::simplex_project(a, eps)
}

/// `1 − a·b`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(cosine_distance_slices(a.as_slice(), b.as_slice()))
}

/// `exp(sᵢ/τ) / Σⱼ exp(sⱼ/τ)`.
pub fn softmax_temp(scores: &[f64], tau: f64) -> Result<ProbVector> {
    ProbVector::softmax(scores, tau)
}
