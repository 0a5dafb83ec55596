//! Mean-field interacting jump processes on graphs whose edges change color.
//!
//! The crate simulates the coupled n-particle system from shared Poisson
//! random measures, solves the limiting forward equations and samples the
//! limit processes from the same randomness, and provides the distances and
//! statistics used to measure convergence.

pub mod clt;
pub mod error;
pub mod json;
pub mod limits;
pub mod metrics;
pub mod model;
pub mod nsystem;
pub mod path;
pub mod presets;
pub mod prm;
pub mod rng;

pub use error::{Error, Result};
pub use model::{BetaSchedule, CltExampleSpec, ModelBuilder, ModelSpec, StateSpace, StateSpaces, ValidationReport};
pub use nsystem::{NSystem, SimConfig, TrajectoryLog};
pub use path::{sup_path_distance, Path};
pub use prm::{PrmEvent, PrmStream, StreamId, StreamShape};

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
