use mfgraph::clt::{
    clt_replica, edge_functional_replica, eta_from_values, eta_x, replica_seed, reference_variance_ode, trace_closed_form,
    trace_lambda_estimate, Functional,
};
use mfgraph::metrics::{excess_kurtosis, mean_se};
use mfgraph::nsystem::{simulate, TrajectoryLog};
use mfgraph::{presets, BetaSchedule, CltExampleSpec, ModelBuilder, ModelSpec, SimConfig, StateSpace, StateSpaces};
use proptest::prelude::*;

fn with_coefficients(clt: CltExampleSpec, mu0: Vec<f64>, horizon: f64) -> ModelSpec {
    let states = (clt.b1.len() / 2) as i64;
    ModelBuilder::new(StateSpaces::new(StateSpace::range(-states, states), StateSpace::range(-1, 1), StateSpace::new(vec![-1, 1])), vec![1.0, 1.0])
        .clt_example(clt)
        .edge_rates(|_, _, _, _| 0.3)
        .beta(BetaSchedule::Constant(1.0))
        .mu0(mu0)
        .theta0(vec![0.0, 1.0, 0.0])
        .horizon(horizon)
        .build()
        .unwrap()
}

fn log_of(paths: &[(i64, Vec<(f64, i64)>)]) -> TrajectoryLog {
    TrajectoryLog {
        node_x0: paths.iter().map(|p| p.0).collect(),
        node_jumps: paths.iter().map(|p| p.1.clone()).collect(),
        edge_x0: None,
        edge_jumps: Vec::new(),
    }
}

#[test]
fn eta_of_identical_values_is_root_n_times_value() {
    for n in [1usize, 4, 25, 400] {
        let got = eta_from_values(&vec![0.37; n]);
        assert!((got - (n as f64).sqrt() * 0.37).abs() < 1e-12);
    }
    assert_eq!(eta_from_values(&[1.0, -1.0, 2.5, -2.5]), 0.0);
}

#[test]
fn eta_on_constructed_logs() {
    let spec = presets::clt_model();
    let clt = spec.clt_example().unwrap();
    let phi = Functional::single(1.0);
    // b1(0) = 0, so frozen-at-zero nodes give exactly zero
    assert_eq!(eta_x(&spec, &log_of(&vec![(0, vec![]); 9]), &phi).unwrap(), 0.0);

    // every node jumps 0 → 1 → 2 at t = 0.25, 0.5; b1(1) = 1/2, b1(2) = 1
    let kappa = clt.drift_coefficient(&spec.spaces().marks, spec.rho());
    let one = 2.0 - kappa * (0.25 * 0.5 + 0.5 * 1.0);
    let log = log_of(&vec![(0, vec![(0.25, 1), (0.5, 2)]); 16]);
    assert!((eta_x(&spec, &log, &phi).unwrap() - 4.0 * one).abs() < 1e-12);

    // mirrored pairs cancel
    let mut paths = vec![(0, vec![(0.25, 1), (0.5, 2)]); 3];
    paths.extend(vec![(0, vec![(0.25, -1), (0.5, -2)]); 3]);
    assert!(eta_x(&spec, &log_of(&paths), &phi).unwrap().abs() < 1e-12);
}

#[test]
fn eta_rejects_models_without_coefficients() {
    let spec = presets::accel_model();
    assert!(eta_x(&spec, &log_of(&[(0, vec![])]), &Functional::single(1.0)).is_err());
}

#[test]
fn functional_arguments_are_checked() {
    assert!(Functional::multi(vec![], 1.0).is_err());
    assert!(Functional::multi(vec![(1.0, 0.5), (1.0, 0.2)], 1.0).is_err());
    assert!(Functional::multi(vec![(1.0, 1.5)], 1.0).is_err());
    assert!(Functional::multi(vec![(f64::NAN, 0.5)], 1.0).is_err());
    assert!(Functional::multi(vec![(0.5, 0.0), (-1.0, 1.0)], 1.0).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eta_is_linear_in_the_functional(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, t1 in 0.05f64..0.5, t2 in 0.5f64..1.0) {
        let spec = presets::clt_model();
        let sys = simulate(&spec, SimConfig::new(12, seed, 1.0)).unwrap();
        let log = sys.log();
        let f1 = Functional::single(t1);
        let f2 = Functional::single(t2);
        let both = Functional::multi(vec![(a, t1), (b, t2)], 1.0).unwrap();
        let lhs = eta_x(&spec, log, &both).unwrap();
        let rhs = a * eta_x(&spec, log, &f1).unwrap() + b * eta_x(&spec, log, &f2).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }
}

#[test]
fn fluctuation_is_centered_at_small_n() {
    let spec = presets::clt_model();
    let phi = Functional::single(1.0);
    let etas: Vec<f64> = (0..400).map(|r| clt_replica(&spec, 30, replica_seed(61, r), &phi, 5e8).unwrap()).collect();
    let m = mean_se(&etas);
    assert!(m.value.abs() < 4.0 * m.se, "{m:?}");
}

/// The law of a node's path is symmetric under x ↦ −x: odd moments vanish.
#[test]
fn node_marginal_has_zero_odd_moments() {
    let spec = presets::clt_model();
    let n = 20;
    let third: Vec<f64> = (0..400)
        .map(|r| {
            let sys = simulate(&spec, SimConfig::new(n, replica_seed(62, r), 1.0)).unwrap();
            (0..n).map(|i| (sys.node_value(i) as f64).powi(3)).sum::<f64>() / n as f64
        })
        .collect();
    let m = mean_se(&third);
    assert!(m.value.abs() < 4.0 * m.se, "{m:?}");
}

#[test]
fn ode_variance_of_absorbing_chain() {
    // from 0 jump to ±1 at rate r each, then stop: E[X(t)²] = 1 − e^{−2rt}
    let r = 0.45;
    let clt = CltExampleSpec {
        c0: vec![r, r],
        c1: vec![0.0; 2],
        c2: vec![0.0; 2],
        c3: vec![0.0; 2],
        b0: vec![0.0, 1.0, 0.0],
        b1: vec![0.0; 3],
        b2: vec![0.0; 3],
        epsilon: 0.0,
    };
    let spec = with_coefficients(clt.clone(), vec![0.0, 1.0, 0.0], 2.0);
    for t in [0.5, 1.0, 2.0] {
        let got = reference_variance_ode(&spec, &clt, t, 1000).unwrap();
        assert!((got - (1.0 - (-2.0 * r * t).exp())).abs() < 1e-10, "t={t}: {got}");
    }
}

#[test]
fn trace_vanishes_without_edge_feedback() {
    let spec = presets::clt_trace_model();
    let mut clt = spec.clt_example().unwrap().clone();
    clt.c1 = vec![0.0, 0.0];
    let mut mu0 = vec![0.0; 13];
    mu0[6] = 1.0;
    let spec = with_coefficients(clt.clone(), mu0, 1.0);
    assert_eq!(trace_closed_form(&spec, &clt, 200).unwrap(), 0.0);
    let est = trace_lambda_estimate(&spec, &clt, 200, &[0.0, 0.5, 1.0], 3).unwrap();
    assert_eq!(est.trace, 0.0);
    assert!(est.lambda.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn trace_estimate_agrees_with_closed_form() {
    let spec = presets::clt_trace_model();
    let clt = spec.clt_example().unwrap();
    let exact = trace_closed_form(&spec, clt, 2000).unwrap();
    let est = trace_lambda_estimate(&spec, clt, 20_000, &[0.5], 8).unwrap();
    assert!(exact > 0.0);
    assert!((est.trace - exact).abs() < 3.5 * est.trace_se, "{} ± {} vs {exact}", est.trace, est.trace_se);
    assert!(trace_closed_form(&presets::clt_model(), presets::clt_model().clt_example().unwrap(), 100).is_err());
}

/// Independent edges: the edge functional is a sum of i.i.d. terms, so its
/// excess kurtosis is O(1/n).
#[test]
fn free_edge_functional_is_mesokurtic() {
    let spec = presets::kurtosis_free_model();
    let f = [-1.0, 0.0, 1.0];
    let xs: Vec<f64> = (0..600).map(|r| edge_functional_replica(&spec, 60, replica_seed(63, r), 1.0, &f, 5e8).unwrap()).collect();
    let k = excess_kurtosis(&xs).unwrap();
    assert!(k.value.abs() < 3.0 * k.se, "{k:?}");
}
