//! Fluctuations of the empirical measure in the explicit-variance example.
//!
//! With γ = c0(y)b0(x) + c1(y)b1(x̃) + c2(y)b2(ξ̃) + c3(y) and the parity
//! conditions checked by [`crate::model::validate`], the functional
//! φ(x) = Σ_k a_k (x_{t_k} − κ ∫₀^{t_k} b1(x_s) ds), κ = Σ_y y c1(y) ρ(y),
//! has η = √n ⟨φ, μ^n − μ⟩ asymptotically N(0, E[(Σ_k a_k X(t_k))²]) where X
//! is the autonomous chain jumping by y at rate c0(y)b0(x) + c3(y).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::forward::{autonomous_generator, linear_forward, uniform_grid};
use crate::limits::sampler::sample_autonomous;
use crate::metrics::stats::{excess_kurtosis, ks_normal_test, mean_se, sample_variance, Estimate};
use crate::model::{validate, CltExampleSpec, ModelSpec, Rule};
use crate::nsystem::{simulate, SimConfig, TrajectoryLog};
use crate::path::Path;
use crate::prm::{PrmStream, StreamId, StreamShape};
use crate::rng;

/// φ(x) = Σ_k a_k (x_{t_k} − κ ∫₀^{t_k} b1(x_s) ds), stored as (a_k, t_k).
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Functional {
    pub terms: Vec<(f64, f64)>,
}

impl Functional {
    /// The base functional at time t.
    pub fn single(t: f64) -> Self {
        Functional { terms: vec![(1.0, t)] }
    }

    pub fn multi(terms: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        let ok = !terms.is_empty()
            && terms.iter().all(|&(a, t)| a.is_finite() && (0.0..=horizon).contains(&t))
            && terms.windows(2).all(|w| w[0].1 < w[1].1);
        if !ok {
            return Err(Error::InvalidArgument("need 0 <= t_1 < ... < t_m <= T and finite a_k".into()));
        }
        Ok(Functional { terms })
    }

    pub fn is_single_time(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == 1.0
    }

    /// φ(path); the time integral is exact on piecewise-constant paths.
    pub fn eval(&self, spec: &ModelSpec, clt: &CltExampleSpec, path: &Path) -> f64 {
        let kappa = clt.drift_coefficient(&spec.spaces().marks, spec.rho());
        let nodes = &spec.spaces().node;
        let b1 = |x: i64| clt.b1[nodes.index_of(x).expect("state in space")];
        self.terms.iter().map(|&(a, t)| a * (path.at(t) as f64 - kappa * path.integral(t, b1))).sum()
    }

    /// Ψ = Σ_k a_k x_{t_k}.
    pub fn psi(&self, path: &Path) -> f64 {
        self.terms.iter().map(|&(a, t)| a * path.at(t) as f64).sum()
    }
}

/// Checks that the model is a valid explicit-variance example; the centering
/// ⟨φ, μ⟩ is then 0 because φ is odd and the limit law is symmetric.
pub fn check_clt_spec(spec: &ModelSpec) -> Result<&CltExampleSpec> {
    let clt = spec.clt_example().ok_or_else(|| Error::InvalidModel("model has no clt_example".into()))?;
    let report = validate(spec);
    if !report.is_ok() {
        let list: Vec<String> = report.violations.iter().map(|v| v.detail.clone()).collect();
        return Err(Error::InvalidModel(format!("not a valid fluctuation example: {}", list.join("; "))));
    }
    debug_assert!(!report.has(Rule::CltParity));
    Ok(clt)
}

/// √n · mean of φ-values, with zero centering.
pub fn eta_from_values(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    values.iter().sum::<f64>() / n.sqrt()
}

/// η = √n ((1/n) Σ_j φ(X_j) − ⟨φ, μ⟩) for a logged n-system.
pub fn eta_x(spec: &ModelSpec, log: &TrajectoryLog, phi: &Functional) -> Result<f64> {
    let clt = check_clt_spec(spec)?;
    let values: Vec<f64> = (0..log.n()).map(|i| phi.eval(spec, clt, &log.node_path(i))).collect();
    Ok(eta_from_values(&values))
}

/// Seed of replica r in a family rooted at `seed`.
pub fn replica_seed(seed: u64, r: usize) -> u64 {
    rng::key(seed, &[0x5EED, r as u64])
}

/// One replica of η: an n-system with β = 1 on the replica's streams.
pub fn clt_replica(spec: &ModelSpec, n: usize, seed: u64, phi: &Functional, budget: f64) -> Result<f64> {
    Ok(clt_replica_many(spec, n, seed, std::slice::from_ref(phi), budget)?[0])
}

/// One n-system run, evaluated under several functionals.
pub fn clt_replica_many(spec: &ModelSpec, n: usize, seed: u64, phis: &[Functional], budget: f64) -> Result<Vec<f64>> {
    let sys = simulate(spec, SimConfig::new(n, seed, 1.0).budget(budget))?;
    phis.iter().map(|phi| eta_x(spec, sys.log(), phi)).collect()
}

fn autonomous_streams(spec: &ModelSpec, seed: u64) -> impl Fn(usize) -> PrmStream + '_ {
    let shape = StreamShape::node(spec);
    move |k| PrmStream::new(StreamId::Node(k), seed, spec.horizon(), shape.clone())
}

fn autonomous_path(spec: &ModelSpec, clt: &CltExampleSpec, stream: &PrmStream) -> Result<Path> {
    sample_autonomous(spec, clt, stream, stream.initial(spec.mu0()))
}

/// E[X(t)²] of the autonomous chain from its forward equation.
pub fn reference_variance_ode(spec: &ModelSpec, clt: &CltExampleSpec, t: f64, steps: usize) -> Result<f64> {
    let law = linear_forward(&autonomous_generator(spec, clt), spec.mu0(), &uniform_grid(t, steps))?;
    Ok(spec.spaces().node.values().iter().zip(law.terminal()).map(|(&k, p)| (k * k) as f64 * p).sum())
}

/// E[(Σ_k a_k X(t_k))²] by Monte Carlo over `n_mc` autonomous chains.
pub fn reference_variance_mc(
    spec: &ModelSpec,
    clt: &CltExampleSpec,
    phi: &Functional,
    n_mc: usize,
    seed: u64,
) -> Result<Estimate> {
    let stream = autonomous_streams(spec, seed);
    let mut vals = Vec::with_capacity(n_mc);
    for k in 0..n_mc {
        let v = phi.psi(&autonomous_path(spec, clt, &stream(k))?);
        vals.push(v * v);
    }
    Ok(mean_se(&vals))
}

/// Pass/fail bands for the fluctuation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct CltTolerance {
    pub rel_var: f64,
    pub se_multiple: f64,
    pub ks_p_min: f64,
}

impl Default for CltTolerance {
    fn default() -> Self {
        CltTolerance { rel_var: 0.10, se_multiple: 3.0, ks_p_min: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct CltReport {
    pub n: usize,
    pub R: usize,
    pub reference: String,
    pub sigma2_ref: f64,
    pub sigma2_ref_se: f64,
    pub sample_mean: f64,
    pub sample_mean_se: f64,
    pub sample_var: f64,
    pub sample_var_se: f64,
    pub ks_stat: f64,
    pub ks_p: f64,
    pub kurtosis: f64,
    pub kurtosis_se: f64,
    pub pass_flags: BTreeMap<String, bool>,
}

impl CltReport {
    pub fn passed(&self) -> bool {
        self.pass_flags.values().all(|&b| b)
    }
}

/// Compares η samples with N(0, σ²_ref).
pub fn clt_report(n: usize, etas: &[f64], sigma2_ref: Estimate, reference: &str, tol: CltTolerance) -> Result<CltReport> {
    let var = sample_variance(etas);
    let mean = mean_se(etas);
    let kurt = excess_kurtosis(etas)?;
    let mut flags = BTreeMap::new();
    let (ks_stat, ks_p) = if sigma2_ref.value > 0.0 {
        ks_normal_test(etas, 0.0, sigma2_ref.value.sqrt())?
    } else {
        // degenerate limit: every sample must vanish
        let d = if etas.iter().all(|&e| e == 0.0) { 0.0 } else { 1.0 };
        (d, 1.0 - d)
    };
    let diff = (var.value - sigma2_ref.value).abs();
    let combined = (var.se.powi(2) + sigma2_ref.se.powi(2)).sqrt();
    flags.insert("variance_relative".into(), diff <= tol.rel_var * sigma2_ref.value);
    flags.insert("variance_se".into(), diff <= tol.se_multiple * combined);
    flags.insert("ks".into(), ks_p >= tol.ks_p_min);
    Ok(CltReport {
        n,
        R: etas.len(),
        reference: reference.into(),
        sigma2_ref: sigma2_ref.value,
        sigma2_ref_se: sigma2_ref.se,
        sample_mean: mean.value,
        sample_mean_se: mean.se,
        sample_var: var.value,
        sample_var_se: var.se,
        ks_stat,
        ks_p,
        kurtosis: kurt.value,
        kurtosis_se: kurt.se,
        pass_flags: flags,
    })
}

/// √n · (1/n) Σ_j f(ξ_0j(T)) for one replica, f given over edge-state indices.
pub fn edge_functional_replica(spec: &ModelSpec, n: usize, seed: u64, beta: f64, f: &[f64], budget: f64) -> Result<f64> {
    let sys = simulate(spec, SimConfig::new(n, seed, beta).budget(budget))?;
    let sum: f64 = (0..n).map(|j| f[sys.edge_state(0, j) as usize]).sum();
    Ok(sum / (n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct KurtosisReport {
    pub n: usize,
    pub R: usize,
    pub mean: f64,
    pub variance: f64,
    pub kurtosis: f64,
    pub kurtosis_se: f64,
    /// kurtosis > 2·SE
    pub positive: bool,
}

/// Excess kurtosis of the (unconditionally centered) edge-functional fluctuation.
pub fn kurtosis_report(n: usize, samples: &[f64]) -> Result<KurtosisReport> {
    let k = excess_kurtosis(samples)?;
    Ok(KurtosisReport {
        n,
        R: samples.len(),
        mean: mean_se(samples).value,
        variance: sample_variance(samples).value,
        kurtosis: k.value,
        kurtosis_se: k.se,
        positive: k.value > 2.0 * k.se,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub grid: Vec<f64>,
    /// λ̂(t, y) per mark (outer) and grid time (inner).
    pub lambda: Vec<Vec<f64>>,
    pub trace: f64,
    pub trace_se: f64,
    pub n_mc: usize,
}

/// Monte Carlo over independent pairs (X₁, X₂) of autonomous chains:
/// λ̂(t, y) = mean c1(y)² b1(X₂(t))² / (c0(y)b0(X₁(t)) + c3(y)) and
/// trace = Σ_y ρ(y) ∫₀^T λ̂(t, y) dt, with each pair's integral computed exactly.
pub fn trace_lambda_estimate(
    spec: &ModelSpec,
    clt: &CltExampleSpec,
    n_mc: usize,
    grid: &[f64],
    seed: u64,
) -> Result<TraceReport> {
    let (m, _, _) = spec.dims();
    let nodes = &spec.spaces().node;
    let stream = autonomous_streams(spec, seed);
    let t_end = spec.horizon();
    let mut lambda = vec![vec![0.0; grid.len()]; m];
    let mut per_pair = Vec::with_capacity(n_mc);
    for k in 0..n_mc {
        let x1 = autonomous_path(spec, clt, &stream(2 * k))?;
        let x2 = autonomous_path(spec, clt, &stream(2 * k + 1))?;
        let integrand = |y: usize, a: i64, b: i64| {
            let ia = nodes.index_of(a).expect("state in space");
            let ib = nodes.index_of(b).expect("state in space");
            let den = clt.autonomous_rate(y, ia);
            assert!(den >= clt.epsilon * (1.0 - 1e-12), "denominator {den} below epsilon");
            clt.c1[y].powi(2) * clt.b1[ib].powi(2) / den
        };
        for (g, &t) in grid.iter().enumerate() {
            for (y, row) in lambda.iter_mut().enumerate() {
                row[g] += integrand(y, x1.at(t), x2.at(t));
            }
        }
        // exact time integral over the merged jump partition
        let mut cuts: Vec<f64> = x1.jumps.iter().chain(&x2.jumps).map(|j| j.0).filter(|&t| t < t_end).collect();
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut last = 0.0;
        for &c in cuts.iter().chain(std::iter::once(&t_end)) {
            if c > last {
                let (a, b) = (x1.at(last), x2.at(last));
                total += (c - last) * (0..m).map(|y| spec.rho()[y] * integrand(y, a, b)).sum::<f64>();
                last = c;
            }
        }
        per_pair.push(total);
    }
    lambda.iter_mut().flatten().for_each(|v| *v /= n_mc as f64);
    let est = mean_se(&per_pair);
    Ok(TraceReport { grid: grid.to_vec(), lambda, trace: est.value, trace_se: est.se, n_mc })
}

/// Closed form when b0 is constant: Σ_y ρ(y)c1(y)²/d(y) · ∫₀^T E[b1(X(t))²] dt,
/// with the time integral from the autonomous forward equation (Simpson rule).
pub fn trace_closed_form(spec: &ModelSpec, clt: &CltExampleSpec, steps: usize) -> Result<f64> {
    if clt.b0.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidArgument("closed-form trace needs a constant b0".into()));
    }
    let steps = steps + steps % 2;
    let law = linear_forward(&autonomous_generator(spec, clt), spec.mu0(), &uniform_grid(spec.horizon(), steps))?;
    let f: Vec<f64> = law.p.iter().map(|p| p.iter().zip(&clt.b1).map(|(q, b)| q * b * b).sum()).collect();
    let h = spec.horizon() / steps as f64;
    let simpson = h / 3.0
        * f.iter().enumerate().map(|(k, v)| v * if k == 0 || k == steps { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 }).sum::<f64>();
    let coef: f64 = (0..spec.dims().0).map(|y| spec.rho()[y] * clt.c1[y].powi(2) / clt.autonomous_rate(y, 0)).sum();
    Ok(coef * simpson)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn functional_on_frozen_path() {
        let spec = presets::clt_model();
        let clt = spec.clt_example().unwrap();
        let phi = Functional::single(spec.horizon());
        assert_eq!(phi.eval(&spec, clt, &Path::constant(0)), 0.0);
        // duplicated trajectory with value v gives sqrt(n) v
        let p = Path { x0: 0, jumps: vec![(0.5, 1)] };
        let v = phi.eval(&spec, clt, &p);
        let kappa = clt.drift_coefficient(&spec.spaces().marks, spec.rho());
        assert!((v - (1.0 - kappa * 0.5 * 0.5)).abs() < 1e-12);
        let vals = vec![v; 16];
        assert!((eta_from_values(&vals) - 4.0 * v).abs() < 1e-12);
    }

    #[test]
    fn functional_is_linear() {
        let spec = presets::clt_model();
        let clt = spec.clt_example().unwrap();
        let p = Path { x0: 0, jumps: vec![(0.2, 1), (0.3, 2), (0.7, 1)] };
        let a = Functional::multi(vec![(1.0, 0.25), (2.0, 0.75)], 1.0).unwrap();
        let b = Functional::multi(vec![(-0.5, 0.25), (3.0, 0.75)], 1.0).unwrap();
        let ab = Functional::multi(vec![(0.5, 0.25), (5.0, 0.75)], 1.0).unwrap();
        assert!((a.eval(&spec, clt, &p) + b.eval(&spec, clt, &p) - ab.eval(&spec, clt, &p)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_example() {
        let spec = presets::accel_model();
        assert!(check_clt_spec(&spec).is_err());
        assert!(Functional::multi(vec![(1.0, 0.5), (1.0, 0.2)], 1.0).is_err());
    }
}
