use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_in_place, ProbVector, UnitVector};
use crate::record::{Scores, StreamRecord};

use super::bank::PrototypeBank;
use super::config::SightConfig;
use super::ops;

/// Everything one stream's adapter carries from step to step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterState {
    pub bank: PrototypeBank,
    pub habit: ProbVector,
    /// `q_{t-1}`; absent until the first record has been processed.
    pub prev_belief: Option<ProbVector>,
    pub step: u64,
    pub config: SightConfig,
}

impl AdapterState {
    pub fn new(bank: PrototypeBank, config: SightConfig) -> Result<Self> {
        config.validate()?;
        let k = bank.num_classes();
        Ok(AdapterState {
            bank,
            habit: ProbVector::uniform(k),
            prev_belief: None,
            step: 0,
            config,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.bank.num_classes()
    }

    pub fn dim(&self) -> usize {
        self.bank.dim()
    }

    /// Bytes owned by this state: the inline struct plus every heap buffer
    /// at its allocated capacity.
    pub fn state_bytes(&self) -> usize {
        let f = std::mem::size_of::<f64>();
        std::mem::size_of::<Self>()
            + self.bank.heap_bytes()
            + self.habit.as_slice().len() * f
            + self.prev_belief.as_ref().map_or(0, |q| q.len() * f)
    }

    /// Consumes the state and one record; returns the refined belief, the
    /// trace of the step, and the successor state.
    pub fn step(self, record: &StreamRecord) -> Result<(ProbVector, StepTrace, AdapterState)> {
        let mut sight = Sight::from_state(self);
        let trace = sight.step(record)?;
        Ok((trace.refined.clone(), trace, sight.into_state()))
    }
}

/// Every intermediate quantity of one step.
///
/// On the first step there is no previous belief, so the expectation is the
/// observation itself, surprise is 0, and routing, calibrated prior and
/// temporal prior are uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    /// Index of the record in its stream.
    pub t: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    /// Raw class distribution `p_t`.
    pub raw: ProbVector,
    pub expected_state: UnitVector,
    /// The belief-weighted prototype sum had (near-)zero norm.
    #[serde(default)]
    pub expected_state_degenerate: bool,
    pub discrepancy: f64,
    pub surprise: f64,
    pub routing: ProbVector,
    pub calibrated_prior: ProbVector,
    pub temporal_prior: ProbVector,
    pub refined: ProbVector,
    /// The consensus product had no mass and the belief fell back to
    /// uniform.
    #[serde(default)]
    pub annihilated: bool,
    /// Prototype bank after this step's update, when snapshots are enabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prototypes: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug)]
struct Scratch {
    observed: Vec<f64>,
    expected: Vec<f64>,
    displacement: Vec<f64>,
    direction: Vec<f64>,
    raw: Vec<f64>,
    routing: Vec<f64>,
    flattened: Vec<f64>,
    rho: Vec<f64>,
    prior: Vec<f64>,
    refined: Vec<f64>,
    assignment: Vec<f64>,
    discrepancy: f64,
    surprise: f64,
    degenerate: bool,
    annihilated: bool,
}

impl Scratch {
    fn new(k: usize, d: usize) -> Self {
        Scratch {
            observed: vec![0.0; d],
            expected: vec![0.0; d],
            displacement: vec![0.0; d],
            direction: vec![0.0; d],
            raw: vec![0.0; k],
            routing: vec![0.0; k],
            flattened: vec![0.0; k],
            rho: vec![0.0; k],
            prior: vec![0.0; k],
            refined: vec![0.0; k],
            assignment: vec![0.0; k],
            discrepancy: 0.0,
            surprise: 0.0,
            degenerate: false,
            annihilated: false,
        }
    }
}

/// A running adapter: the persistent [`AdapterState`] plus preallocated
/// working buffers, so that [`Sight::advance`] does not allocate once the
/// first record has been seen.
#[derive(Clone, Debug)]
pub struct Sight {
    state: AdapterState,
    scratch: Scratch,
    snapshots: bool,
}

impl Sight {
    pub fn new(bank: PrototypeBank, config: SightConfig) -> Result<Self> {
        Ok(Self::from_state(AdapterState::new(bank, config)?))
    }

    /// Builds prototypes from classifier weight rows and starts a fresh
    /// stream.
    pub fn from_weights(weights: &[Vec<f64>], config: SightConfig) -> Result<Self> {
        config.validate()?;
        let bank = PrototypeBank::from_weights(weights, config.epsilon)?;
        Self::new(bank, config)
    }

    pub fn from_state(state: AdapterState) -> Self {
        let scratch = Scratch::new(state.num_classes(), state.dim());
        Sight {
            state,
            scratch,
            snapshots: false,
        }
    }

    /// Include the prototype bank in every [`StepTrace`].
    pub fn with_prototype_snapshots(mut self, on: bool) -> Self {
        self.snapshots = on;
        self
    }

    pub fn state(&self) -> &AdapterState {
        &self.state
    }

    pub fn into_state(self) -> AdapterState {
        self.state
    }

    pub fn config(&self) -> &SightConfig {
        &self.state.config
    }

    /// Processes one observation and returns the refined belief `q_t`.
    pub fn advance(&mut self, feature: &[f64], scores: &Scores) -> Result<&[f64]> {
        let step = self.state.step;
        let (k, d) = (self.state.num_classes(), self.state.dim());
        if feature.len() != d {
            return Err(Error::StreamContract {
                step,
                reason: format!("feature has dimension {}, stream has {d}", feature.len()),
            });
        }
        if scores.len() != k {
            return Err(Error::StreamContract {
                step,
                reason: format!("scores have {} classes, stream has {k}", scores.len()),
            });
        }
        if let Some(i) = feature.iter().position(|v| !v.is_finite()) {
            return Err(Error::StreamContract {
                step,
                reason: format!("non-finite feature component {i}"),
            });
        }

        let cfg = self.state.config;
        let eps = cfg.epsilon;
        let s = &mut self.scratch;
        scores
            .raw_distribution_into(&mut s.raw)
            .map_err(|reason| Error::StreamContract { step, reason })?;
        s.observed.copy_from_slice(feature);
        normalize_in_place(&mut s.observed, eps);

        s.annihilated = false;
        match &self.state.prev_belief {
            None => {
                let u = 1.0 / k as f64;
                s.expected.copy_from_slice(&s.observed);
                s.degenerate = false;
                s.discrepancy = 0.0;
                s.surprise = 0.0;
                s.routing.fill(u);
                s.rho.fill(u);
                s.prior.fill(u);
                s.refined.copy_from_slice(&s.raw);
            }
            Some(prev) => {
                let norm = ops::expected_state_into(&self.state.bank, prev.as_slice(), eps, &mut s.expected);
                s.degenerate = norm <= eps;
                let (dist, lambda) = ops::surprise_slices(&s.observed, &s.expected, &cfg);
                s.discrepancy = dist;
                s.surprise = lambda;
                ops::routing_into(
                    &s.observed,
                    &s.expected,
                    &self.state.bank,
                    &cfg,
                    &mut s.displacement,
                    &mut s.direction,
                    &mut s.routing,
                );
                ops::calibrate_into(
                    &s.routing,
                    self.state.habit.as_slice(),
                    &cfg,
                    &mut s.flattened,
                    &mut s.rho,
                );
                s.annihilated = ops::refine_into(
                    &s.raw,
                    prev.as_slice(),
                    lambda,
                    &s.rho,
                    eps,
                    &mut s.prior,
                    &mut s.refined,
                );
            }
        }

        ops::update_habit_in_place(self.state.habit.as_mut_slice(), &s.refined, cfg.eta_h);
        ops::update_prototypes_in_place(
            &mut self.state.bank,
            &s.observed,
            &s.refined,
            &cfg,
            &mut s.assignment,
        );
        match &mut self.state.prev_belief {
            Some(prev) => prev.as_mut_slice().copy_from_slice(&s.refined),
            slot @ None => *slot = Some(ProbVector::from_simplex(s.refined.clone())),
        }
        self.state.step += 1;
        Ok(&self.scratch.refined)
    }

    /// Like [`advance`](Self::advance), but returns the full trace.
    pub fn step(&mut self, record: &StreamRecord) -> Result<StepTrace> {
        self.advance(&record.feature, &record.scores)?;
        let s = &self.scratch;
        Ok(StepTrace {
            t: record.t,
            label: record.label,
            raw: ProbVector::from_simplex(s.raw.clone()),
            expected_state: UnitVector::from_normalized(s.expected.clone()),
            expected_state_degenerate: s.degenerate,
            discrepancy: s.discrepancy,
            surprise: s.surprise,
            routing: ProbVector::from_simplex(s.routing.clone()),
            calibrated_prior: ProbVector::from_simplex(s.rho.clone()),
            temporal_prior: ProbVector::from_simplex(s.prior.clone()),
            refined: ProbVector::from_simplex(s.refined.clone()),
            annihilated: s.annihilated,
            prototypes: self.snapshots.then(|| self.state.bank.snapshot()),
        })
    }

    /// Surprise λ of the most recent step.
    pub fn last_surprise(&self) -> f64 {
        self.scratch.surprise
    }

    pub fn last_annihilated(&self) -> bool {
        self.scratch.annihilated
    }
}
