//! Backpropagation-free test-time adaptation for activity-recognition
//! streams.
//!
//! A source classifier's normalized weight rows seed a bank of class
//! prototypes. For each incoming window the adapter predicts the feature it
//! expects if the previous activity persists, measures how surprised it is by
//! the actual feature, routes belief toward the prototypes the feature is
//! moving toward, and multiplies the resulting temporal prior into the
//! classifier's raw distribution. Habit and prototypes are then updated in
//! place. Every step costs `O(Kd)` time and the state is `O(Kd)` memory.
//!
//! ```
//! use sight::{Scores, Sight, SightConfig, StreamRecord};
//!
//! let weights = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
//! let mut adapter = Sight::from_weights(&weights, SightConfig::default())?;
//! let record = StreamRecord::new(0, vec![0.9, 0.1], Scores::Logits(vec![1.0, 0.5]));
//! let trace = adapter.step(&record)?;
//! assert_eq!(trace.refined.argmax(), 0);
//! # Ok::<(), sight::Error>(())
//! ```

pub mod adapter;
pub mod bench;
pub mod baselines;
mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
mod record;
pub mod simulator;

pub use adapter::{Ablations, AdapterState, PrototypeBank, Sight, SightConfig, StepTrace};
pub use error::{Error, Result};
pub use geometry::{ProbVector, UnitVector, EPSILON};
pub use record::{ScoreKind, Scores, StreamRecord, PROBS_TOLERANCE};
