//! Coupled convergence-rate sweeps: the n-system (or a surrogate) and a limit
//! process are driven by the same node streams and compared path by path.

use std::fmt::Write as _;

use serde::Serialize;

use mfgraph::limits::{
    forward_equation_accel, forward_equation_iid, markov_edge_law, reference_limit_beta, sample_accel_limit,
    sample_iid_limit, uniform_grid, InvariantMeasureMap, MarginalLaw,
};
use mfgraph::metrics::{dbl_distance, euclid_metric, fit_rate, RateFit};
use mfgraph::nsystem::{check_budget, simulate, SimConfig, TrajectoryLog};
use mfgraph::rng::CounterRng;
use mfgraph::{sup_path_distance, ModelSpec, Path};

use super::{mean_se, node_stream, par_map, seeds, Outcome};
use crate::config::{DryRun, ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnSummary {
    pub experiment: String,
    /// "n" or "beta".
    pub x_name: String,
    pub xs: Vec<f64>,
    /// β used at each sweep point.
    pub betas: Vec<f64>,
    pub errors: Vec<f64>,
    pub ses: Vec<f64>,
    pub fit: RateFit,
    pub nodes: usize,
    pub replicas: usize,
    pub n_ref: Option<usize>,
    pub dry_run: bool,
    /// Present for the β comparison.
    pub nu: Option<NuSummary>,
}

/// d_BL(ν_1 at T, μ_T ⊗ Q(X_1(T), ·)) per β.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuSummary {
    pub betas: Vec<f64>,
    pub dbl: Vec<f64>,
    pub ses: Vec<f64>,
    /// Each step is no larger than the previous one plus the combined SE.
    pub decreasing_within_se: bool,
}

/// Mean over nodes 0..k of the sup distance between a system path and a limit path.
fn coupled_error(log: &TrajectoryLog, limits: &[Path], k: usize) -> f64 {
    (0..k).map(|i| sup_path_distance(&log.node_path(i), &limits[i])).sum::<f64>() / k as f64
}

fn dry_errors(d: DryRun, seed: u64, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let z = CounterRng::new(seed, &[0xD7, k as u64]).normal();
            (d.c / x.sqrt() * (1.0 + d.noise * z)).max(1e-12)
        })
        .collect()
}

fn accel_limit(spec: &ModelSpec, steps: usize) -> mfgraph::Result<(InvariantMeasureMap, MarginalLaw)> {
    let q = InvariantMeasureMap::compute(spec)?;
    let mu = forward_equation_accel(spec, &q, &uniform_grid(spec.horizon(), steps))?;
    Ok((q, mu))
}

fn iid_limit(spec: &ModelSpec, beta: f64, steps: usize) -> mfgraph::Result<(MarginalLaw, MarginalLaw)> {
    let grid = uniform_grid(spec.horizon(), steps);
    let theta = markov_edge_law(spec, beta)?;
    let mu = forward_equation_iid(spec, &theta, &grid)?;
    let th = MarginalLaw { p: grid.iter().map(|&t| theta(t)).collect(), grid };
    Ok((mu, th))
}

/// Limit paths of nodes 0..k on a replica's node streams.
fn limit_paths(
    k: usize,
    spec: &ModelSpec,
    seed: u64,
    sample: impl Fn(&mfgraph::PrmStream, usize) -> mfgraph::Result<Path>,
) -> mfgraph::Result<Vec<Path>> {
    (0..k)
        .map(|i| {
            let st = node_stream(spec, seed, i);
            sample(&st, st.initial(spec.mu0()))
        })
        .collect()
}

fn errors_csv(x_name: &str, xs: &[f64], betas: &[f64], errors: &[f64], ses: &[f64]) -> String {
    let mut s = format!("{x_name},beta,error,se\n");
    for k in 0..xs.len() {
        let _ = writeln!(s, "{},{},{},{}", xs[k], betas[k], errors[k], ses[k]);
    }
    s
}

fn per_replica_csv(x_name: &str, xs: &[f64], rows: &[Vec<f64>]) -> String {
    let mut s = format!("replica,{x_name},error\n");
    for (r, row) in rows.iter().enumerate() {
        for (x, e) in xs.iter().zip(row) {
            let _ = writeln!(s, "{r},{x},{e}");
        }
    }
    s
}

fn reduce(rows: &[Vec<f64>], len: usize) -> (Vec<f64>, Vec<f64>) {
    (0..len)
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            mean_se(&col)
        })
        .unzip()
}

/// Fixed-β (against a large-n surrogate), accelerated, and i.i.d.-edge sweeps over n.
pub fn run_lln(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let ns = &cfg.sweep.n;
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let kind = cfg.experiment;
    let betas: Vec<f64> = match kind {
        ExperimentKind::LlnRateFixedBeta => {
            let b = cfg.sweep.beta.first().copied().unwrap_or_else(|| spec.beta().at(cfg.n_ref.unwrap_or(1)));
            vec![b; ns.len()]
        }
        _ => ns.iter().map(|&n| spec.beta().at(n)).collect(),
    };
    let seeds = seeds(cfg);
    let k_max = ns.iter().map(|&n| n.min(cfg.nodes)).max().unwrap_or(1);

    let rows: Vec<Vec<f64>> = if let Some(d) = cfg.dry_run {
        seeds.iter().map(|&s| dry_errors(d, s, &xs)).collect()
    } else {
        for (&n, &b) in ns.iter().zip(&betas) {
            check_budget(spec, n, b, cfg.event_budget)?;
        }
        match kind {
            ExperimentKind::LlnRateAccel => {
                let (q, mu) = accel_limit(spec, cfg.grid_steps)?;
                par_map(&seeds, |_, s| {
                    let lim = limit_paths(k_max, spec, s, |st, x0| sample_accel_limit(spec, &q, &mu, st, x0))?;
                    ns.iter()
                        .zip(&betas)
                        .map(|(&n, &b)| {
                            let sys = simulate(spec, SimConfig::new(n, s, b).budget(cfg.event_budget))?;
                            Ok(coupled_error(sys.log(), &lim, n.min(cfg.nodes)))
                        })
                        .collect()
                })?
            }
            ExperimentKind::LlnRateIid => {
                let limits: Vec<(MarginalLaw, MarginalLaw)> =
                    betas.iter().map(|&b| iid_limit(spec, b, cfg.grid_steps)).collect::<mfgraph::Result<_>>()?;
                par_map(&seeds, |_, s| {
                    ns.iter()
                        .zip(&betas)
                        .zip(&limits)
                        .map(|((&n, &b), (mu, th))| {
                            let k = n.min(cfg.nodes);
                            let lim = limit_paths(k, spec, s, |st, x0| sample_iid_limit(spec, mu, th, st, x0))?;
                            let sys = simulate(spec, SimConfig::new(n, s, b).budget(cfg.event_budget))?;
                            Ok(coupled_error(sys.log(), &lim, k))
                        })
                        .collect()
                })?
            }
            ExperimentKind::LlnRateFixedBeta => {
                let n_ref = cfg.n_ref.expect("checked");
                let b = betas[0];
                check_budget(spec, n_ref, b, cfg.event_budget)?;
                par_map(&seeds, |_, s| {
                    let surrogate = reference_limit_beta(spec, n_ref, s, b, b, cfg.event_budget)?.into_log();
                    let lim: Vec<Path> = (0..k_max).map(|i| surrogate.node_path(i)).collect();
                    drop(surrogate);
                    ns.iter()
                        .map(|&n| {
                            let sys = simulate(spec, SimConfig::new(n, s, b).budget(cfg.event_budget))?;
                            Ok(coupled_error(sys.log(), &lim, n.min(cfg.nodes)))
                        })
                        .collect()
                })?
            }
            other => return Err(CliError::Config(format!("{} is not a sweep over n", other.name()))),
        }
    };

    let (errors, ses) = reduce(&rows, xs.len());
    let fit = fit_rate(&xs, &errors)?.with_ses(ses.clone());
    let summary = LlnSummary {
        experiment: kind.name().into(),
        x_name: "n".into(),
        xs: xs.clone(),
        betas: betas.clone(),
        errors: errors.clone(),
        ses: ses.clone(),
        fit: fit.clone(),
        nodes: cfg.nodes,
        replicas: cfg.replicas,
        n_ref: cfg.n_ref,
        dry_run: cfg.dry_run.is_some(),
        nu: None,
    };
    let mut out = Outcome::new(&summary)
        .file("errors.csv", errors_csv("n", &xs, &betas, &errors, &ses))
        .file("per_replica.csv", per_replica_csv("n", &xs, &rows))
        .json_file("rate_fit.json", &fit);
    out.seeds = seeds;
    Ok(out)
}

/// β-system surrogates at n_ref against the averaged limit, over the β sweep.
pub fn run_beta_comparison(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let n_ref = cfg.n_ref.expect("checked");
    let betas = cfg.sweep.beta.clone();
    let seeds = seeds(cfg);
    let k = n_ref.min(cfg.nodes);
    let (_, nx, ne) = spec.dims();
    let s = spec.spaces();
    let points: Vec<(i64, i64)> =
        (0..nx * ne).map(|c| (s.node.value(c / ne), s.edge.value(c % ne))).collect();
    let metric = euclid_metric(&points);

    // per replica: (errors per β, ν-distances per β)
    let rows: Vec<(Vec<f64>, Vec<f64>)> = if let Some(d) = cfg.dry_run {
        seeds.iter().map(|&sd| (dry_errors(d, sd, &betas), vec![0.0; betas.len()])).collect()
    } else {
        for &b in &betas {
            check_budget(spec, n_ref, b, cfg.event_budget)?;
        }
        let (q, mu) = accel_limit(spec, cfg.grid_steps)?;
        let mu_t = mu.terminal().to_vec();
        par_map(&seeds, |_, sd| {
            let lim = limit_paths(k, spec, sd, |st, x0| sample_accel_limit(spec, &q, &mu, st, x0))?;
            let mut errs = Vec::with_capacity(betas.len());
            let mut nus = Vec::with_capacity(betas.len());
            for &b in &betas {
                let sys = simulate(spec, SimConfig::new(n_ref, sd, b).budget(cfg.event_budget))?;
                errs.push(coupled_error(sys.log(), &lim, k));
                let x1 = sys.node_states()[0] as usize;
                let target: Vec<f64> = (0..nx * ne).map(|c| mu_t[c / ne] * q.get(x1, c / ne)[c % ne]).collect();
                nus.push(dbl_distance(&sys.local_empirical(0), &target, &metric)?);
            }
            Ok((errs, nus))
        })?
    };
    let err_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let nu_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    let (errors, ses) = reduce(&err_rows, betas.len());
    let (nu_dbl, nu_ses) = reduce(&nu_rows, betas.len());
    let fit = fit_rate(&betas, &errors)?.with_ses(ses.clone());
    let decreasing = nu_dbl
        .windows(2)
        .zip(nu_ses.windows(2))
        .all(|(d, e)| d[1] <= d[0] + (e[0] * e[0] + e[1] * e[1]).sqrt());
    let nu = NuSummary { betas: betas.clone(), dbl: nu_dbl.clone(), ses: nu_ses.clone(), decreasing_within_se: decreasing };
    let summary = LlnSummary {
        experiment: cfg.experiment.name().into(),
        x_name: "beta".into(),
        xs: betas.clone(),
        betas: betas.clone(),
        errors: errors.clone(),
        ses: ses.clone(),
        fit: fit.clone(),
        nodes: cfg.nodes,
        replicas: cfg.replicas,
        n_ref: Some(n_ref),
        dry_run: cfg.dry_run.is_some(),
        nu: Some(nu),
    };
    let mut nu_csv = String::from("beta,dbl,se\n");
    for i in 0..betas.len() {
        let _ = writeln!(nu_csv, "{},{},{}", betas[i], nu_dbl[i], nu_ses[i]);
    }
    let mut out = Outcome::new(&summary)
        .file("errors.csv", errors_csv("beta", &betas, &betas, &errors, &ses))
        .file("per_replica.csv", per_replica_csv("beta", &betas, &err_rows))
        .file("nu_dbl.csv", nu_csv)
        .json_file("rate_fit.json", &fit);
    out.seeds = seeds;
    Ok(out)
}
