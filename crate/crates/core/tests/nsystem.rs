use mfgraph::nsystem::simulate;
use mfgraph::rng::key;
use mfgraph::{presets, ModelBuilder, ModelSpec, NSystem, SimConfig, StateSpace, StateSpaces};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn pm1() -> StateSpace {
    StateSpace::new(vec![-1, 1])
}

fn frozen_nodes(mu0: Vec<f64>) -> ModelSpec {
    ModelBuilder::new(StateSpaces::new(StateSpace::range(0, 1), StateSpace::range(0, 2), pm1()), vec![1.0, 0.5])
        .edge_rates(|y, xi, x, xt| if y == 1 { 0.4 + 0.3 * x as f64 + 0.1 * xi as f64 } else { 0.2 + 0.5 * xt as f64 })
        .mu0(mu0)
        .theta0(vec![1.0, 0.0, 0.0])
        .horizon(1.3)
        .build()
        .unwrap()
}

#[test]
fn uniform_init_is_binomial() {
    let spec = frozen_nodes(vec![0.5, 0.5]);
    let mut ones = 0usize;
    for s in 0..5 {
        let sys = NSystem::init(&spec, SimConfig::new(2000, key(31, &[s]), 1.0)).unwrap();
        ones += sys.node_states().iter().filter(|&&x| x == 1).count();
    }
    let frac = ones as f64 / 10_000.0;
    assert!((frac - 0.5).abs() < 0.015, "fraction of ones {frac}");
}

#[test]
fn point_mass_init() {
    let spec = frozen_nodes(vec![0.0, 1.0]);
    let sys = NSystem::init(&spec, SimConfig::new(30, 5, 1.0)).unwrap();
    assert!(sys.node_states().iter().all(|&x| x == 1));
    assert!((0..30).all(|i| (0..30).all(|j| sys.edge_state(i, j) == 0)));
}

#[test]
fn single_particle_aggregate() {
    let spec = presets::linear_average_model();
    let sys = NSystem::init(&spec, SimConfig::new(1, 12, 1.0)).unwrap();
    let (m, nx, _) = spec.dims();
    let x1 = sys.node_states()[0] as usize;
    let e11 = sys.edge_state(0, 0) as usize;
    for y in 0..m {
        for x in 0..nx {
            assert_eq!(sys.aggregate(0, y, x), spec.gamma(y, x, x1, e11));
        }
    }
    assert_eq!(sys.local_empirical(0).iter().filter(|&&p| p == 1.0).count(), 1);
}

#[test]
fn empirical_laws_count_atoms() {
    let spec = presets::linear_average_model();
    let sys = NSystem::init(&spec, SimConfig::new(4, 3, 1.0)).unwrap();
    for i in 0..4 {
        let nu = sys.local_empirical(i);
        assert!(nu.iter().all(|&p| (p * 4.0).fract() == 0.0));
        assert_eq!(nu.iter().sum::<f64>(), 1.0);
    }
}

/// Edges of a frozen-node system are independent CTMCs with generator β·R(x, x̃).
#[test]
fn single_edge_marginal_matches_matrix_exponential() {
    let spec = frozen_nodes(vec![0.0, 1.0]);
    let beta = 2.0;
    let runs = 50;
    let n = 20;
    let mut counts = [0usize; 3];
    for s in 0..runs {
        let sys = simulate(&spec, SimConfig::new(n, key(77, &[s]), beta)).unwrap();
        for i in 0..n {
            for j in 0..n {
                counts[sys.edge_state(i, j) as usize] += 1;
            }
        }
    }
    // hand-built generator at x = x̃ = 1: up (ρ 0.5) 0.5·(0.7 + 0.1ξ), down (ρ 1) 0.7
    let mut r = DMatrix::<f64>::zeros(3, 3);
    for xi in 0..3usize {
        if xi < 2 {
            r[(xi, xi + 1)] = beta * 0.5 * (0.7 + 0.1 * xi as f64);
        }
        if xi > 0 {
            r[(xi, xi - 1)] = beta * 0.7;
        }
        r[(xi, xi)] = -(r.row(xi).sum());
    }
    let e = (r * spec.horizon()).exp();
    let total = (runs as usize * n * n) as f64;
    for k in 0..3 {
        let p = e[(0, k)];
        let sd = (p * (1.0 - p) / total).sqrt();
        let got = counts[k] as f64 / total;
        assert!((got - p).abs() < 3.5 * sd, "state {k}: {got} vs {p}");
    }
}

#[test]
fn zero_rates_leave_everything_fixed() {
    let spec = ModelBuilder::new(StateSpaces::new(StateSpace::range(0, 1), StateSpace::range(0, 1), pm1()), vec![1.0, 1.0])
        .mu0(vec![0.5, 0.5])
        .theta0(vec![0.5, 0.5])
        .build()
        .unwrap();
    let mut sys = NSystem::init(&spec, SimConfig::new(15, 9, 3.0).log_edges(true)).unwrap();
    let before: Vec<u8> = sys.node_states().to_vec();
    sys.run().unwrap();
    assert_eq!(sys.node_states(), &before[..]);
    assert_eq!(sys.accepted(), (0, 0));
    assert!(sys.log().edge_jumps.is_empty());
}

#[test]
fn identical_seeds_replay_bit_for_bit() {
    let spec = presets::accel_model();
    let a = simulate(&spec, SimConfig::new(40, 5, 7.0).log_edges(true)).unwrap();
    let b = simulate(&spec, SimConfig::new(40, 5, 7.0).log_edges(true)).unwrap();
    assert_eq!(a.log(), b.log());
    assert_eq!(a.log().to_csv(), b.log().to_csv());
}

/// Node 0 and node n−1 play the same role, so X_0(T) and X_{n−1}(T) have the
/// same law across seeds.
#[test]
fn exchangeable_labels() {
    let spec = presets::accel_model();
    let n = 12;
    let runs = 3000;
    let (mut first, mut last) = (0usize, 0usize);
    for s in 0..runs {
        let sys = simulate(&spec, SimConfig::new(n, key(404, &[s]), 2.0)).unwrap();
        first += sys.node_states()[0] as usize;
        last += sys.node_states()[n - 1] as usize;
    }
    let (p, q) = (first as f64 / runs as f64, last as f64 / runs as f64);
    let sd = (p * (1.0 - p) / runs as f64 * 2.0).sqrt();
    assert!((p - q).abs() < 4.0 * sd, "{p} vs {q}");
}

#[test]
fn accepted_node_intensity_respects_envelope() {
    let spec = presets::accel_model();
    let n = 50;
    let sys = simulate(&spec, SimConfig::new(n, 8, 5.0)).unwrap();
    let (nodes, _) = sys.accepted();
    let bound: f64 = spec.rho().iter().zip(spec.envelope()).map(|(r, g)| r * g).sum::<f64>() * n as f64 * spec.horizon();
    assert!((nodes as f64) < bound + 4.0 * bound.sqrt(), "{nodes} vs {bound}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn aggregates_stay_consistent(seed in any::<u64>(), n in 1usize..25, stops in prop::collection::vec(0.0f64..1.0, 1..4)) {
        let spec = presets::accel_model();
        let mut sys = NSystem::init(&spec, SimConfig::new(n, seed, 3.0)).unwrap();
        let mut stops = stops;
        stops.sort_by(f64::total_cmp);
        let (m, nx, _) = spec.dims();
        for t in stops {
            sys.run_until(t).unwrap();
            let mut avg = vec![0.0; nx];
            for i in 0..n {
                let nu = sys.local_empirical(i);
                for y in 0..m {
                    for x in 0..nx {
                        let want = n as f64 * spec.aggregate_rate(y, x, &nu).unwrap();
                        prop_assert!((sys.aggregate(i, y, x) - want).abs() < 1e-9);
                    }
                }
                let ne = nu.len() / nx;
                for xt in 0..nx {
                    avg[xt] += nu[xt * ne..(xt + 1) * ne].iter().sum::<f64>() / n as f64;
                }
            }
            let global = sys.global_empirical();
            prop_assert!(avg.iter().zip(&global).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }
}
