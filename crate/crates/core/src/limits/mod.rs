//! Limiting objects: edge-chain invariant measures, forward equations for the
//! limit marginals, limit samplers driven by the node streams, and the
//! large-system surrogate used where no closed form exists.

pub mod forward;
pub mod invariant;
pub mod reference;
pub mod sampler;

pub use forward::{
    autonomous_generator, autonomous_second_moment, forward_equation_accel, forward_equation_iid, linear_forward,
    markov_edge_law, refine, richardson_discrepancy, uniform_grid, MarginalLaw, DEFAULT_STEPS,
};
pub use invariant::{invariant_measure, InvariantMeasureMap};
pub use reference::reference_limit_beta;
pub use sampler::{sample_accel_limit, sample_autonomous, sample_iid_limit, sample_thinned};
