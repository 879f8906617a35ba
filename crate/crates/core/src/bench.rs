//! Adapter cost: per-step latency and state size.
//!
//! Latency covers [`Sight::advance`] only; reading and writing records is
//! left out. State size is
//! [`AdapterState::state_bytes`](crate::AdapterState::state_bytes) after one step, so
//! the previous-belief buffer is allocated.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::adapter::{Sight, SightConfig};
use crate::error::{Error, Result};
use crate::record::{Scores, StreamRecord};
use crate::simulator::SimRng;

/// Class counts swept by [`state_size_sweep`] by default.
pub const SWEEP_CLASSES: [usize; 6] = [2, 4, 8, 12, 16, 20];
/// Feature dimensions swept by default.
pub const SWEEP_DIMS: [usize; 6] = [8, 16, 32, 64, 128, 256];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub num_classes: usize,
    pub dim: usize,
    pub n_steps: usize,
    pub warmup: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub max_us: f64,
}

/// Nearest-rank percentile of sorted values, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Times each step of `stream` after feeding the first `warmup` records
/// untimed.
pub fn measure_latency(
    weights: &[Vec<f64>],
    config: SightConfig,
    stream: &[StreamRecord],
    warmup: usize,
) -> Result<LatencyReport> {
    if stream.len() <= warmup {
        return Err(Error::InsufficientData(format!(
            "{} records leave nothing to time after {warmup} warm-up steps",
            stream.len()
        )));
    }
    let mut adapter = Sight::from_weights(weights, config)?;
    for r in &stream[..warmup] {
        adapter.advance(&r.feature, &r.scores)?;
    }
    let mut us = Vec::with_capacity(stream.len() - warmup);
    for r in &stream[warmup..] {
        let start = Instant::now();
        let q = adapter.advance(&r.feature, &r.scores)?;
        std::hint::black_box(q);
        us.push(start.elapsed().as_secs_f64() * 1e6);
    }
    us.sort_by(f64::total_cmp);
    Ok(LatencyReport {
        num_classes: adapter.state().num_classes(),
        dim: adapter.state().dim(),
        n_steps: us.len(),
        warmup,
        mean_us: us.iter().sum::<f64>() / us.len() as f64,
        p50_us: percentile(&us, 0.5),
        p95_us: percentile(&us, 0.95),
        max_us: us[us.len() - 1],
    })
}

/// Random unit-scale weights and a matching stream, for timing without a
/// simulator config.
pub fn random_workload(k: usize, d: usize, length: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<StreamRecord>) {
    let mut rng = SimRng::new(seed);
    let weights: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.gaussian()).collect()).collect();
    let stream = (0..length as u64)
        .map(|t| {
            let z: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
            let logits = weights.iter().map(|w| crate::geometry::dot(w, &z)).collect();
            StreamRecord::new(t, z, Scores::Logits(logits))
        })
        .collect();
    (weights, stream)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSizePoint {
    pub num_classes: usize,
    pub dim: usize,
    pub bytes: usize,
}

/// Least-squares fit `bytes ≈ c_kd·K·d + c_k·K + c_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSizeFit {
    pub c_kd: f64,
    pub c_k: f64,
    pub c_0: f64,
    /// Largest `|fitted − measured| / measured` over the sweep.
    pub max_relative_residual: f64,
    pub points: Vec<StateSizePoint>,
}

impl StateSizeFit {
    pub fn predict(&self, k: usize, d: usize) -> f64 {
        self.c_kd * (k * d) as f64 + self.c_k * k as f64 + self.c_0
    }
}

/// Bytes held by a `K × d` adapter after its first step.
pub fn state_bytes_after_one_step(k: usize, d: usize, config: SightConfig) -> Result<usize> {
    let (weights, stream) = random_workload(k, d, 1, (k * 1000 + d) as u64);
    let mut adapter = Sight::from_weights(&weights, config)?;
    adapter.advance(&stream[0].feature, &stream[0].scores)?;
    Ok(adapter.state().state_bytes())
}

pub fn state_size_sweep(ks: &[usize], ds: &[usize], config: SightConfig) -> Result<Vec<StateSizePoint>> {
    let mut out = Vec::with_capacity(ks.len() * ds.len());
    for &k in ks {
        for &d in ds {
            out.push(StateSizePoint {
                num_classes: k,
                dim: d,
                bytes: state_bytes_after_one_step(k, d, config)?,
            });
        }
    }
    Ok(out)
}

pub fn fit_state_size(points: Vec<StateSizePoint>) -> Result<StateSizeFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData("a three-term fit needs at least 3 points".into()));
    }
    let x = DMatrix::from_fn(points.len(), 3, |i, j| {
        let p = &points[i];
        match j {
            0 => (p.num_classes * p.dim) as f64,
            1 => p.num_classes as f64,
            _ => 1.0,
        }
    });
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.bytes as f64));
    let c = x
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::InsufficientData(format!("least squares failed: {e}")))?;
    let mut fit = StateSizeFit {
        c_kd: c[0],
        c_k: c[1],
        c_0: c[2],
        max_relative_residual: 0.0,
        points,
    };
    fit.max_relative_residual = fit
        .points
        .iter()
        .map(|p| (fit.predict(p.num_classes, p.dim) - p.bytes as f64).abs() / p.bytes as f64)
        .fold(0.0, f64::max);
    Ok(fit)
}
