use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::EPSILON;

/// Switches that disable or replace one mechanism of the adapter.
///
/// Serialized as a list of snake_case names, e.g.
/// `["no_surprise", "habit_raw"]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Ablations {
    /// Surprise from Euclidean distance between unit features instead of
    /// cosine distance.
    pub surprise_feature_distance: bool,
    /// Use the habit vector directly, without square-root flattening.
    pub habit_raw: bool,
    /// Update prototypes with the one-hot argmax of the refined belief.
    pub assignment_hard: bool,
    /// Drop the elastic pull toward the source prototypes.
    pub no_source_anchor: bool,
    /// Replace the surprise gate by a constant (see
    /// [`SightConfig::no_surprise_lambda`]).
    pub no_surprise: bool,
    /// Uniform routing regardless of the feature displacement.
    pub no_geometric_routing: bool,
    /// Use the routing distribution without habit calibration.
    pub no_habit_prior: bool,
    /// Freeze the prototype bank.
    pub no_prototype_update: bool,
}

impl Ablations {
    pub const NAMES: [&'static str; 8] = [
        "surprise_feature_distance",
        "habit_raw",
        "assignment_hard",
        "no_source_anchor",
        "no_surprise",
        "no_geometric_routing",
        "no_habit_prior",
        "no_prototype_update",
    ];

    pub fn none() -> Self {
        Self::default()
    }

    /// The three flags that, together, reduce the adapter to the raw model.
    pub fn nulling() -> Self {
        Ablations {
            no_surprise: true,
            no_geometric_routing: true,
            no_habit_prior: true,
            ..Self::default()
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut bool> {
        Some(match name {
            "surprise_feature_distance" => &mut self.surprise_feature_distance,
            "habit_raw" => &mut self.habit_raw,
            "assignment_hard" => &mut self.assignment_hard,
            "no_source_anchor" => &mut self.no_source_anchor,
            "no_surprise" => &mut self.no_surprise,
            "no_geometric_routing" => &mut self.no_geometric_routing,
            "no_habit_prior" => &mut self.no_habit_prior,
            "no_prototype_update" => &mut self.no_prototype_update,
            _ => return None,
        })
    }

    pub fn with(mut self, name: &str) -> Result<Self> {
        match self.slot(name) {
            Some(flag) => *flag = true,
            None => {
                return Err(Error::config(
                    "ablations",
                    format!("unknown ablation `{name}`"),
                ))
            }
        }
        Ok(self)
    }

    pub fn enabled(&self) -> Vec<&'static str> {
        let flags = [
            self.surprise_feature_distance,
            self.habit_raw,
            self.assignment_hard,
            self.no_source_anchor,
            self.no_surprise,
            self.no_geometric_routing,
            self.no_habit_prior,
            self.no_prototype_update,
        ];
        Self::NAMES
            .iter()
            .zip(flags)
            .filter_map(|(name, on)| on.then_some(*name))
            .collect()
    }
}

impl TryFrom<Vec<String>> for Ablations {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        names.iter().try_fold(Ablations::none(), |a, n| a.with(n))
    }
}

impl From<Ablations> for Vec<String> {
    fn from(a: Ablations) -> Self {
        a.enabled().into_iter().map(String::from).collect()
    }
}

/// Hyperparameters of one adapter instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SightConfig {
    /// Surprise sensitivity β.
    pub beta: f64,
    /// Routing temperature τ.
    pub tau: f64,
    /// Prototype adaptation rate η_μ.
    pub eta_mu: f64,
    /// Habit tracking rate η_h.
    pub eta_h: f64,
    /// Source anchoring strength ω_μ.
    pub omega_mu: f64,
    pub epsilon: f64,
    /// Gate value used when `no_surprise` is set. `1.0` always releases
    /// inertia, which isolates the gate from routing and habit.
    pub no_surprise_lambda: f64,
    pub ablations: Ablations,
}

impl Default for SightConfig {
    fn default() -> Self {
        SightConfig {
            beta: 1.0,
            tau: 0.05,
            eta_mu: 0.005,
            eta_h: 0.05,
            omega_mu: 0.01,
            epsilon: EPSILON,
            no_surprise_lambda: 1.0,
            ablations: Ablations::none(),
        }
    }
}

impl SightConfig {
    pub fn with_ablations(mut self, ablations: Ablations) -> Self {
        self.ablations = ablations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta", self.beta),
            ("tau", self.tau),
            ("epsilon", self.epsilon),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        let unit = [
            ("eta_mu", self.eta_mu),
            ("eta_h", self.eta_h),
            ("omega_mu", self.omega_mu),
            ("no_surprise_lambda", self.no_surprise_lambda),
        ];
        for (field, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}
