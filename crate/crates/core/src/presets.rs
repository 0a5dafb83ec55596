//! Ready-made models used by the experiments, tests and benchmarks.

use crate::model::{BetaSchedule, CltExampleSpec, ModelBuilder, ModelSpec, StateSpace, StateSpaces};

fn pm1() -> StateSpace {
    StateSpace::new(vec![-1, 1])
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Two-state voter-like model: a node copies a disagreeing neighbor mostly
/// through color-1 edges, and edges between disagreeing nodes prefer color 1.
/// β(n) = n.
pub fn accel_model() -> ModelSpec {
    ModelBuilder::new(StateSpaces::new(StateSpace::range(0, 1), StateSpace::range(0, 1), pm1()), vec![1.0, 1.0])
        .node_rates(|_, x, xt, xi| 0.3 + ind(xi == 1 && xt != x))
        .edge_rates(|y, _, x, xt| if y == 1 { 0.05 + 0.2 * ind(x != xt) } else { 0.25 - 0.2 * ind(x != xt) })
        .beta(BetaSchedule::Power { coef: 1.0, exponent: 1.0 })
        .mu0(vec![0.7, 0.3])
        .theta0(vec![0.5, 0.5])
        .horizon(1.0)
        .build()
        .expect("preset shapes")
}

/// The same node and edge kernels at fixed β = 1.
pub fn fixed_beta_model() -> ModelSpec {
    accel_model().with_beta(BetaSchedule::Constant(1.0))
}

/// Node kernel of [`accel_model`] with edges that ignore their endpoints, so
/// edge colors are i.i.d. Markov chains.
pub fn iid_model() -> ModelSpec {
    ModelBuilder::new(StateSpaces::new(StateSpace::range(0, 1), StateSpace::range(0, 1), pm1()), vec![1.0, 1.0])
        .node_rates(|_, x, xt, xi| 0.3 + 2.0 * ind(xi == 1 && xt != x))
        .edge_rates(|y, _, _, _| if y == 1 { 0.3 } else { 0.5 })
        .beta(BetaSchedule::Constant(1.0))
        .mu0(vec![0.7, 0.3])
        .theta0(vec![0.5, 0.5])
        .horizon(3.0)
        .build()
        .expect("preset shapes")
}

/// Node rates depend on (y, x, ξ̃) only and edges ignore their endpoints, so
/// the averaged forward equation is linear.
pub fn linear_average_model() -> ModelSpec {
    ModelBuilder::new(StateSpaces::new(StateSpace::range(0, 2), StateSpace::range(0, 2), pm1()), vec![1.0, 0.6])
        .node_rates(|y, x, _, xi| 0.2 + 0.3 * xi as f64 + 0.1 * (x * y).abs() as f64)
        .edge_rates(|y, xi, _, _| 0.3 + 0.2 * ind(y == 1) + 0.1 * xi as f64)
        .beta(BetaSchedule::Power { coef: 1.0, exponent: 1.0 })
        .mu0(vec![0.5, 0.3, 0.2])
        .theta0(vec![1.0, 0.0, 0.0])
        .horizon(2.0)
        .build()
        .expect("preset shapes")
}

/// Autonomous three-state chain on {0, 1, 2} (node rates ignore neighbors).
pub fn autonomous_three_state() -> ModelSpec {
    ModelBuilder::new(StateSpaces::new(StateSpace::range(0, 2), StateSpace::range(0, 0), pm1()), vec![1.0, 0.5])
        .node_rates(|y, x, _, _| match (y, x) {
            (1, 0) => 1.2,
            (1, 1) => 0.8,
            (-1, 1) => 1.6,
            (-1, 2) => 2.0,
            _ => 0.0,
        })
        .mu0(vec![1.0, 0.0, 0.0])
        .horizon(1.5)
        .build()
        .expect("preset shapes")
}

fn clt_coefficients(b0: Vec<f64>) -> CltExampleSpec {
    let xs = -6..=6i64;
    CltExampleSpec {
        c0: vec![0.3, 0.3],
        c1: vec![-0.25, 0.25],
        c2: vec![0.2, 0.2],
        c3: vec![0.65, 0.65],
        b0,
        b1: xs.map(|x| x.clamp(-2, 2) as f64 / 2.0).collect(),
        b2: vec![-1.0, 0.0, 1.0],
        epsilon: 0.3,
    }
}

fn clt_builder(clt: CltExampleSpec) -> ModelSpec {
    let mut mu0 = vec![0.0; 13];
    mu0[6] = 1.0;
    ModelBuilder::new(StateSpaces::new(StateSpace::range(-6, 6), StateSpace::range(-1, 1), pm1()), vec![1.0, 1.0])
        .clt_example(clt)
        .edge_rates(|y, xi, _, _| 0.2 + 0.15 * ind(y * xi < 0))
        .beta(BetaSchedule::Constant(1.0))
        .mu0(mu0)
        .theta0(vec![0.0, 1.0, 0.0])
        .horizon(1.0)
        .build()
        .expect("preset shapes")
}

/// Explicit-variance fluctuation example on S_x = {−6..6}, S_ξ = {−1, 0, 1}.
pub fn clt_model() -> ModelSpec {
    clt_builder(clt_coefficients((-6..=6i64).map(|x| if x == 0 { 1.0 } else { 0.5 }).collect()))
}

/// [`clt_model`] with constant b0, where the trace has a closed form.
pub fn clt_trace_model() -> ModelSpec {
    clt_builder(clt_coefficients(vec![0.5; 13]))
}

fn kurtosis_spaces() -> StateSpaces {
    StateSpaces::new(StateSpace::range(-1, 1), StateSpace::range(-1, 1), pm1())
}

/// Node rates ignore edges and edges ignore nodes: no common noise.
pub fn kurtosis_free_model() -> ModelSpec {
    ModelBuilder::new(kurtosis_spaces(), vec![1.0, 1.0])
        .node_rates(|_, _, _, _| 0.3)
        .edge_rates(|_, _, _, _| 0.5)
        .beta(BetaSchedule::Constant(1.0))
        .mu0(vec![0.0, 1.0, 0.0])
        .theta0(vec![0.0, 1.0, 0.0])
        .horizon(1.0)
        .build()
        .expect("preset shapes")
}

/// Edges out of node i only move while X_i ≠ 0, so the spread of node 1's
/// edge colors depends on node 1's path.
pub fn kurtosis_coupled_model() -> ModelSpec {
    ModelBuilder::new(kurtosis_spaces(), vec![1.0, 1.0])
        .node_rates(|_, _, _, _| 0.3)
        .edge_rates(|_, _, x, _| 0.01 + 2.0 * ind(x != 0))
        .beta(BetaSchedule::Constant(1.0))
        .mu0(vec![0.0, 1.0, 0.0])
        .theta0(vec![0.0, 1.0, 0.0])
        .horizon(1.0)
        .build()
        .expect("preset shapes")
}

/// Looks a preset up by name.
pub fn by_name(name: &str) -> Option<ModelSpec> {
    Some(match name {
        "accel" => accel_model(),
        "fixed_beta" => fixed_beta_model(),
        "iid" => iid_model(),
        "linear_average" => linear_average_model(),
        "autonomous_three_state" => autonomous_three_state(),
        "clt" => clt_model(),
        "clt_trace" => clt_trace_model(),
        "kurtosis_free" => kurtosis_free_model(),
        "kurtosis_coupled" => kurtosis_coupled_model(),
        _ => return None,
    })
}

pub const NAMES: [&str; 9] = [
    "accel",
    "fixed_beta",
    "iid",
    "linear_average",
    "autonomous_three_state",
    "clt",
    "clt_trace",
    "kurtosis_free",
    "kurtosis_coupled",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn every_preset_validates() {
        for name in NAMES {
            let spec = by_name(name).unwrap();
            let rep = validate(&spec);
            assert!(rep.is_ok(), "{name}: {:?}", rep.violations);
        }
    }

    #[test]
    fn clt_parity_violation_detected() {
        let spec = clt_model();
        let mut clt = spec.clt_example().unwrap().clone();
        clt.b1 = clt.b1.iter().map(|b| b.abs()).collect();
        // rebuild gamma from the broken coefficients so only parity is off
        let broken = ModelBuilder::new(spec.spaces().clone(), spec.rho().to_vec())
            .clt_example(clt)
            .edge_rates(|y, xi, _, _| 0.2 + 0.15 * ind(y * xi < 0))
            .mu0(spec.mu0().to_vec())
            .theta0(spec.theta0().to_vec())
            .build()
            .unwrap();
        let rep = validate(&broken);
        assert!(rep.has(crate::model::Rule::CltParity), "{:?}", rep.violations);
    }

    #[test]
    fn symmetric_aggregate_reduces_to_autonomous_rate() {
        let spec = clt_model();
        let clt = spec.clt_example().unwrap();
        let (m, nx, ne) = spec.dims();
        // ν symmetric under (x~, xi~) -> (-x~, -xi~)
        let mut nu = vec![0.0; nx * ne];
        let w = [0.05, 0.1, 0.2, 0.3, 0.2, 0.1, 0.05];
        for (k, &p) in w.iter().enumerate() {
            let xt = 3 + k;
            nu[xt * ne] += p * 0.25;
            nu[xt * ne + 1] += p * 0.5;
            nu[xt * ne + 2] += p * 0.25;
        }
        for y in 0..m {
            for x in 1..nx - 1 {
                let a = spec.aggregate_rate(y, x, &nu).unwrap();
                assert!((a - clt.autonomous_rate(y, x)).abs() < 1e-12);
            }
        }
    }
}
