use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{l2_norm, normalize_in_place, UnitVector};

/// K unit prototypes plus the frozen source-side anchors they were
/// initialized from. Rows are stored contiguously, class-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrototypeBank {
    num_classes: usize,
    dim: usize,
    current: Vec<f64>,
    anchors: Vec<f64>,
}

impl PrototypeBank {
    /// Normalizes each classifier weight row into the initial prototype of
    /// its class. Biases play no part here.
    pub fn from_weights(weights: &[Vec<f64>], eps: f64) -> Result<Self> {
        let num_classes = weights.len();
        if num_classes < 2 {
            return Err(Error::param(
                "weights",
                format!("need at least 2 classes, got {num_classes}"),
            ));
        }
        let dim = weights[0].len();
        if dim == 0 {
            return Err(Error::Empty);
        }
        let mut current = Vec::with_capacity(num_classes * dim);
        for (class, row) in weights.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            if let Some(i) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    index: class * dim + i,
                });
            }
            if l2_norm(row) == 0.0 {
                return Err(Error::DegenerateClass { class });
            }
            let start = current.len();
            current.extend_from_slice(row);
            normalize_in_place(&mut current[start..], eps);
        }
        let anchors = current.clone();
        Ok(PrototypeBank {
            num_classes,
            dim,
            current,
            anchors,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prototype(&self, k: usize) -> &[f64] {
        &self.current[k * self.dim..(k + 1) * self.dim]
    }

    pub fn anchor(&self, k: usize) -> &[f64] {
        &self.anchors[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn prototype_mut(&mut self, k: usize) -> (&mut [f64], &[f64]) {
        let range = k * self.dim..(k + 1) * self.dim;
        (&mut self.current[range.clone()], &self.anchors[range])
    }

    pub fn prototypes(&self) -> impl Iterator<Item = &[f64]> {
        self.current.chunks_exact(self.dim)
    }

    pub fn anchors(&self) -> impl Iterator<Item = &[f64]> {
        self.anchors.chunks_exact(self.dim)
    }

    pub fn prototype_vector(&self, k: usize) -> UnitVector {
        UnitVector::from_normalized(self.prototype(k).to_vec())
    }

    /// Prototype rows as owned vectors, for diagnostics.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.prototypes().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn heap_bytes(&self) -> usize {
        (self.current.capacity() + self.anchors.capacity()) * std::mem::size_of::<f64>()
    }
}
