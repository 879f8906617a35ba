//! The per-stream adapter: surprise gating, geometric routing with habit
//! calibration, consensus refinement, and online habit and prototype
//! updates.

mod bank;
mod config;
pub mod ops;
mod state;

pub use bank::PrototypeBank;
pub use config::{Ablations, SightConfig};
pub use ops::{
    calibrate_prior, expected_state, geometric_routing, refine, surprise, update_habit,
    update_prototypes, Refinement, Surprise,
};
pub use state::{AdapterState, Sight, StepTrace};
