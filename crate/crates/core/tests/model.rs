use mfgraph::model::{validate, Rule};
use mfgraph::{presets, ModelBuilder, ModelSpec, StateSpace, StateSpaces};
use proptest::prelude::*;

fn two_by_two(table: [f64; 4]) -> ModelSpec {
    // γ(y, x, x̃, ξ̃) = table[2x̃ + ξ̃] for the +1 mark out of x = 0
    ModelBuilder::new(StateSpaces::new(StateSpace::range(0, 1), StateSpace::range(0, 1), StateSpace::new(vec![1])), vec![1.0])
        .node_rates(|_, _, xt, xi| table[(2 * xt + xi) as usize])
        .build()
        .unwrap()
}

#[test]
fn aggregate_examples() {
    let spec = two_by_two([1.0, 2.0, 3.0, 4.0]);
    assert!((spec.aggregate_rate(0, 0, &[0.25; 4]).unwrap() - 2.5).abs() < 1e-15);
    assert_eq!(spec.aggregate_rate(0, 0, &[0.0, 0.0, 1.0, 0.0]).unwrap(), 3.0);
    let flat = two_by_two([0.7; 4]);
    assert!((flat.aggregate_rate(0, 0, &[0.1, 0.2, 0.3, 0.4]).unwrap() - 0.7).abs() < 1e-15);
    assert!(spec.aggregate_rate(0, 0, &[-0.1, 0.5, 0.3, 0.3]).is_err());
    assert!(spec.aggregate_rate(0, 0, &[0.2, 0.2, 0.2, 0.2]).is_err());
}

#[test]
fn envelope_attained_validates_and_excess_is_named() {
    let spec = two_by_two([1.0, 2.0, 3.0, 4.0]);
    assert!(validate(&spec).is_ok());
    let doc = spec.to_doc();
    let mut text = serde_json::to_value(&doc).unwrap();
    text["gamma"][0][0][1][1] = serde_json::json!(5.0);
    let bad = ModelSpec::from_json(&text.to_string()).unwrap();
    let rep = validate(&bad);
    assert!(rep.has(Rule::NodeEnvelope), "{rep:?}");
    assert!(rep.violations.iter().any(|v| v.detail.contains("(y=1, x=0, x~=1, xi~=1)")), "{rep:?}");
}

#[test]
fn presets_round_trip_through_json() {
    for name in presets::NAMES {
        let spec = presets::by_name(name).unwrap();
        let back = ModelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back.to_json(), spec.to_json(), "{name}");
    }
}

fn law(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, k).prop_filter_map("positive mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-6).then(|| w.into_iter().map(|x| x / s).collect())
    })
}

proptest! {
    #[test]
    fn aggregate_is_linear_and_dominated(nu1 in law(9), nu2 in law(9), a in 0.0f64..=1.0, y in 0usize..2, x in 0usize..3) {
        let spec = presets::linear_average_model();
        let mix: Vec<f64> = nu1.iter().zip(&nu2).map(|(p, q)| a * p + (1.0 - a) * q).collect();
        let lhs = spec.aggregate_rate(y, x, &mix).unwrap();
        let rhs = a * spec.aggregate_rate(y, x, &nu1).unwrap() + (1.0 - a) * spec.aggregate_rate(y, x, &nu2).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(lhs <= spec.envelope()[y] + 1e-12);
        prop_assert!(lhs >= 0.0);
    }

    #[test]
    fn symmetric_law_gives_autonomous_rate(w in prop::collection::vec(0.0f64..1.0, 13 * 3), y in 0usize..2, x in 0usize..13) {
        let spec = presets::clt_model();
        let clt = spec.clt_example().unwrap().clone();
        // symmetrize under (x̃, ξ̃) ↦ (−x̃, −ξ̃): index k ↦ 13·3 − 1 − k
        let len = w.len();
        let sym: Vec<f64> = (0..len).map(|k| w[k] + w[len - 1 - k]).collect();
        let s: f64 = sym.iter().sum();
        prop_assume!(s > 1e-6);
        let nu: Vec<f64> = sym.into_iter().map(|v| v / s).collect();
        let got = spec.aggregate_rate(y, x, &nu).unwrap();
        let target = spec.node_target(y, x).is_some();
        let want = if target { clt.autonomous_rate(y, x) } else { 0.0 };
        prop_assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}
