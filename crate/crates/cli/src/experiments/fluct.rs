//! Fluctuation experiments on the explicit-variance example.

use std::fmt::Write as _;

use serde::Serialize;

use mfgraph::clt::{
    check_clt_spec, clt_replica, clt_report, edge_functional_replica, kurtosis_report, reference_variance_mc,
    reference_variance_ode, replica_seed, trace_closed_form, trace_lambda_estimate, Functional, KurtosisReport,
};
use mfgraph::metrics::Estimate;
use mfgraph::nsystem::check_budget;
use mfgraph::rng::key;
use mfgraph::ModelSpec;

use super::{par_map, report_grid, seeds, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

const DEFAULT_MC_CHAINS: usize = 1_000_000;
const DEFAULT_TRACE_PAIRS: usize = 100_000;

fn samples_csv(name: &str, xs: &[f64]) -> String {
    let mut s = format!("replica,{name}\n");
    for (r, v) in xs.iter().enumerate() {
        let _ = writeln!(s, "{r},{v}");
    }
    s
}

pub fn run_clt(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let clt = check_clt_spec(spec)?;
    let n = cfg.sweep.n[0];
    check_budget(spec, n, 1.0, cfg.event_budget)?;
    let phi = match &cfg.functional {
        Some(terms) => Functional::multi(terms.clone(), spec.horizon())?,
        None => Functional::single(spec.horizon()),
    };
    let (sigma2, label) = if phi.is_single_time() {
        let v = reference_variance_ode(spec, clt, phi.terms[0].1, cfg.grid_steps)?;
        (Estimate { value: v, se: 0.0 }, "ode")
    } else {
        let n_mc = cfg.n_mc.unwrap_or(DEFAULT_MC_CHAINS);
        (reference_variance_mc(spec, clt, &phi, n_mc, key(cfg.seed, &[0x3C]))?, "mc")
    };
    let seeds = seeds(cfg);
    let etas = par_map(&seeds, |_, s| clt_replica(spec, n, s, &phi, cfg.event_budget))?;
    let report = clt_report(n, &etas, sigma2, label, cfg.tolerance.unwrap_or_default())?;
    let mut out = Outcome::new(&report).file("eta.csv", samples_csv("eta", &etas)).json_file("clt_report.json", &report);
    out.seeds = seeds;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureSummary {
    pub beta: f64,
    pub report: KurtosisReport,
    pub meta_replicas: usize,
    pub meta_kurtosis: Vec<f64>,
    pub meta_kurtosis_se: Vec<f64>,
    /// Fraction of meta-replications with kurtosis > 2·SE.
    pub positivity_frequency: Option<f64>,
}

pub fn run_mixture(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let n = cfg.sweep.n[0];
    let beta = cfg.sweep.beta.first().copied().unwrap_or_else(|| spec.beta().at(n));
    check_budget(spec, n, beta, cfg.event_budget)?;
    let edge = &spec.spaces().edge;
    let f: Vec<f64> = match spec.clt_example() {
        Some(c) => c.b2.clone(),
        None => edge.values().iter().map(|&v| v as f64).collect(),
    };
    let batch = |seeds: &[u64]| par_map(seeds, |_, s| edge_functional_replica(spec, n, s, beta, &f, cfg.event_budget));
    let seeds = seeds(cfg);
    let samples = batch(&seeds)?;
    let report = kurtosis_report(n, &samples)?;
    let mut meta_k = Vec::with_capacity(cfg.meta_replicas);
    let mut meta_se = Vec::with_capacity(cfg.meta_replicas);
    let mut positive = 0usize;
    for m in 0..cfg.meta_replicas {
        let root = key(cfg.seed, &[0x3E7A, m as u64]);
        let ms: Vec<u64> = (0..cfg.replicas).map(|r| replica_seed(root, r)).collect();
        let rep = kurtosis_report(n, &batch(&ms)?)?;
        positive += rep.positive as usize;
        meta_k.push(rep.kurtosis);
        meta_se.push(rep.kurtosis_se);
    }
    let summary = MixtureSummary {
        beta,
        report: report.clone(),
        meta_replicas: cfg.meta_replicas,
        meta_kurtosis: meta_k,
        meta_kurtosis_se: meta_se,
        positivity_frequency: (cfg.meta_replicas > 0).then(|| positive as f64 / cfg.meta_replicas as f64),
    };
    let mut out = Outcome::new(&summary)
        .file("edge_functional.csv", samples_csv("value", &samples))
        .json_file("kurtosis_report.json", &summary);
    out.seeds = seeds;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub trace: f64,
    pub trace_se: f64,
    pub n_mc: usize,
    /// Present when b0 is constant.
    pub closed_form: Option<f64>,
    pub z_score: Option<f64>,
    pub within_3_sigma: Option<bool>,
}

pub fn run_trace(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let clt = check_clt_spec(spec)?;
    let n_mc = cfg.n_mc.unwrap_or(DEFAULT_TRACE_PAIRS);
    let grid = report_grid(spec, cfg.grid_points);
    let rep = trace_lambda_estimate(spec, clt, n_mc, &grid, key(cfg.seed, &[0x7ACE]))?;
    let closed = if clt.b0.windows(2).all(|w| w[0] == w[1]) { Some(trace_closed_form(spec, clt, cfg.grid_steps)?) } else { None };
    let z = closed.map(|c| (rep.trace - c) / rep.trace_se);
    let summary = TraceSummary {
        trace: rep.trace,
        trace_se: rep.trace_se,
        n_mc,
        closed_form: closed,
        z_score: z,
        within_3_sigma: z.map(|z| z.abs() <= 3.0),
    };
    let marks = spec.spaces().marks.values();
    let mut csv = String::from("time,y,lambda\n");
    for (g, t) in grid.iter().enumerate() {
        for (y, row) in rep.lambda.iter().enumerate() {
            let _ = writeln!(csv, "{t},{},{}", marks[y], row[g]);
        }
    }
    let mut out = Outcome::new(&summary).file("lambda.csv", csv).json_file("trace_report.json", &summary);
    out.seeds = vec![cfg.seed];
    Ok(out)
}
