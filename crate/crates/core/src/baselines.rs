//! Backpropagation-free reference methods sharing the adapter's step
//! interface.

use serde::{Deserialize, Serialize};

use crate::adapter::{Sight, StepTrace};
use crate::error::{Error, Result};
use crate::geometry::{argmax, project_in_place, ProbVector, EPSILON};
use crate::record::StreamRecord;

/// Default inertia of [`Persistence`].
pub const DEFAULT_PERSISTENCE_ALPHA: f64 = 0.9;

/// What a method reports after one record.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub refined: ProbVector,
    /// Surprise gate value, for methods that have one.
    pub surprise: Option<f64>,
    pub annihilated: bool,
    /// Full adapter trace, when the method is the adapter.
    pub trace: Option<StepTrace>,
}

impl StepOutput {
    fn plain(refined: ProbVector) -> Self {
        StepOutput {
            refined,
            surprise: None,
            annihilated: false,
            trace: None,
        }
    }
}

/// An online method consuming one record at a time.
pub trait OnlineMethod: Send {
    fn name(&self) -> &'static str;
    fn step(&mut self, record: &StreamRecord) -> Result<StepOutput>;
}

impl OnlineMethod for Sight {
    fn name(&self) -> &'static str {
        "sight"
    }

    fn step(&mut self, record: &StreamRecord) -> Result<StepOutput> {
        let trace = Sight::step(self, record)?;
        Ok(StepOutput {
            refined: trace.refined.clone(),
            surprise: Some(trace.surprise),
            annihilated: trace.annihilated,
            trace: Some(trace),
        })
    }
}

fn check_classes(expected: &mut Option<usize>, record: &StreamRecord, step: u64) -> Result<()> {
    let k = record.num_classes();
    match *expected {
        Some(e) if e != k => Err(Error::StreamContract {
            step,
            reason: format!("record has {k} classes, stream has {e}"),
        }),
        _ if k < 2 => Err(Error::StreamContract {
            step,
            reason: format!("record has {k} classes; need at least 2"),
        }),
        _ => {
            *expected = Some(k);
            Ok(())
        }
    }
}

fn raw(record: &StreamRecord, step: u64) -> Result<ProbVector> {
    record
        .scores
        .raw_distribution()
        .map_err(|e| Error::StreamContract {
            step,
            reason: e.to_string(),
        })
}

/// The unadapted classifier: `softmax(logits)`.
#[derive(Clone, Debug, Default)]
pub struct SourceOnly {
    num_classes: Option<usize>,
    step: u64,
}

impl SourceOnly {
    pub fn new() -> Self {
        Self::default()
    }
}

impl OnlineMethod for SourceOnly {
    fn name(&self) -> &'static str {
        "source-only"
    }

    fn step(&mut self, record: &StreamRecord) -> Result<StepOutput> {
        check_classes(&mut self.num_classes, record, self.step)?;
        let p = raw(record, self.step)?;
        self.step += 1;
        Ok(StepOutput::plain(p))
    }
}

/// Fixed-inertia smoothing: `q_t ∝ p_t ⊙ (α q_{t−1} + (1−α) uniform)`.
#[derive(Clone, Debug)]
pub struct Persistence {
    alpha: f64,
    prev: Option<Vec<f64>>,
    num_classes: Option<usize>,
    step: u64,
}

impl Persistence {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        Ok(Persistence {
            alpha,
            prev: None,
            num_classes: None,
            step: 0,
        })
    }
}

impl OnlineMethod for Persistence {
    fn name(&self) -> &'static str {
        "persistence"
    }

    fn step(&mut self, record: &StreamRecord) -> Result<StepOutput> {
        check_classes(&mut self.num_classes, record, self.step)?;
        let p = raw(record, self.step)?;
        self.step += 1;
        let q = match &self.prev {
            None => p,
            Some(prev) => {
                let u = (1.0 - self.alpha) / prev.len() as f64;
                let mut q: Vec<f64> = p
                    .as_slice()
                    .iter()
                    .zip(prev)
                    .map(|(p, q)| p * (self.alpha * q + u))
                    .collect();
                project_in_place(&mut q, EPSILON);
                ProbVector::from_simplex(q)
            }
        };
        self.prev = Some(q.as_slice().to_vec());
        Ok(StepOutput::plain(q))
    }
}

/// First-order label-transition prior estimated from the method's own hard
/// predictions, with Dirichlet pseudo-counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovPrior {
    pub transition_counts: Vec<Vec<f64>>,
    pub prev_hard_label: Option<usize>,
    pub smoothing_alpha: f64,
    #[serde(skip)]
    step: u64,
}

impl MarkovPrior {
    pub fn new(num_classes: usize, smoothing_alpha: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::param("num_classes", "need at least 2"));
        }
        if !(smoothing_alpha > 0.0) {
            return Err(Error::param("smoothing_alpha", "must be positive"));
        }
        Ok(MarkovPrior {
            transition_counts: vec![vec![smoothing_alpha; num_classes]; num_classes],
            prev_hard_label: None,
            smoothing_alpha,
            step: 0,
        })
    }

    /// Row-normalized transition matrix.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        self.transition_counts
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.iter().map(|c| c / total).collect()
            })
            .collect()
    }

    fn row(&self, from: usize) -> Vec<f64> {
        let row = &self.transition_counts[from];
        let total: f64 = row.iter().sum();
        row.iter().map(|c| c / total).collect()
    }
}

impl OnlineMethod for MarkovPrior {
    fn name(&self) -> &'static str {
        "markov"
    }

    fn step(&mut self, record: &StreamRecord) -> Result<StepOutput> {
        let k = self.transition_counts.len();
        check_classes(&mut Some(k), record, self.step)?;
        let p = raw(record, self.step)?;
        self.step += 1;
        let prior = match self.prev_hard_label {
            Some(prev) => self.row(prev),
            None => vec![1.0 / k as f64; k],
        };
        let mut q: Vec<f64> = p.as_slice().iter().zip(&prior).map(|(a, b)| a * b).collect();
        project_in_place(&mut q, EPSILON);
        let hard = argmax(&q);
        if let Some(prev) = self.prev_hard_label {
            self.transition_counts[prev][hard] += 1.0;
        }
        self.prev_hard_label = Some(hard);
        Ok(StepOutput::plain(ProbVector::from_simplex(q)))
    }
}

/// Default Dirichlet pseudo-count of [`MarkovPrior`].
pub const DEFAULT_MARKOV_SMOOTHING: f64 = 1.0;

/// A method and its parameters, buildable from classifier weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodSpec {
    Sight(crate::adapter::SightConfig),
    SourceOnly,
    Persistence {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Markov {
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
}

fn default_alpha() -> f64 {
    DEFAULT_PERSISTENCE_ALPHA
}

fn default_smoothing() -> f64 {
    DEFAULT_MARKOV_SMOOTHING
}

impl MethodSpec {
    /// Parses `sight`, `source-only`, `persistence` or `markov` with default
    /// parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "sight" => MethodSpec::Sight(Default::default()),
            "source-only" => MethodSpec::SourceOnly,
            "persistence" => MethodSpec::Persistence {
                alpha: DEFAULT_PERSISTENCE_ALPHA,
            },
            "markov" => MethodSpec::Markov {
                smoothing: DEFAULT_MARKOV_SMOOTHING,
            },
            other => return Err(Error::param("method", format!("unknown method `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Sight(_) => "sight",
            MethodSpec::SourceOnly => "source-only",
            MethodSpec::Persistence { .. } => "persistence",
            MethodSpec::Markov { .. } => "markov",
        }
    }

    pub fn build(&self, weights: &[Vec<f64>]) -> Result<Box<dyn OnlineMethod>> {
        Ok(match self {
            MethodSpec::Sight(cfg) => Box::new(Sight::from_weights(weights, *cfg)?),
            MethodSpec::SourceOnly => Box::new(SourceOnly::new()),
            MethodSpec::Persistence { alpha } => Box::new(Persistence::new(*alpha)?),
            MethodSpec::Markov { smoothing } => Box::new(MarkovPrior::new(weights.len(), *smoothing)?),
        })
    }
}
