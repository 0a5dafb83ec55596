//! Large-n surrogate for the fixed-β limit, whose conditional neighbor law
//! has no closed form.

use crate::error::Result;
use crate::model::ModelSpec;
use crate::nsystem::{simulate, NSystem, SimConfig};

/// Runs the n_ref-system on the same seed, so its particles 0..n share every
/// node and edge stream with particles 0..n of a test system of size n.
pub fn reference_limit_beta(spec: &ModelSpec, n_ref: usize, seed: u64, beta: f64, beta_max: f64, budget: f64) -> Result<NSystem> {
    simulate(spec, SimConfig::new(n_ref, seed, beta).beta_max(beta_max).budget(budget))
}
