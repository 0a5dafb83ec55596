//! Asymptotic independence of two tagged particles.

use std::fmt::Write as _;

use serde::Serialize;

use mfgraph::metrics::{dbl_distance, euclid_metric};
use mfgraph::nsystem::{check_budget, simulate, SimConfig};
use mfgraph::rng::{key, CounterRng};
use mfgraph::ModelSpec;

use super::{par_map, seeds, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PocSummary {
    pub ns: Vec<usize>,
    pub betas: Vec<f64>,
    pub dbl: Vec<f64>,
    /// Bootstrap standard errors over replicas.
    pub ses: Vec<f64>,
    pub replicas: usize,
    pub bootstrap: usize,
    /// Each step is no larger than the previous one plus the combined SE.
    pub decreasing_within_se: bool,
}

/// d_BL between the joint law of the pairs and the product of its marginals.
fn chaos_distance(pairs: &[(usize, usize)], nx: usize, metric: &[f64]) -> mfgraph::Result<f64> {
    let r = pairs.len() as f64;
    let mut joint = vec![0.0; nx * nx];
    let mut m1 = vec![0.0; nx];
    let mut m2 = vec![0.0; nx];
    for &(a, b) in pairs {
        joint[a * nx + b] += 1.0 / r;
        m1[a] += 1.0 / r;
        m2[b] += 1.0 / r;
    }
    let product: Vec<f64> = (0..nx * nx).map(|c| m1[c / nx] * m2[c % nx]).collect();
    dbl_distance(&joint, &product, metric)
}

pub fn run(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let ns = cfg.sweep.n.clone();
    let betas: Vec<f64> = ns
        .iter()
        .map(|&n| cfg.sweep.beta.first().copied().unwrap_or_else(|| spec.beta().at(n)))
        .collect();
    for (&n, &b) in ns.iter().zip(&betas) {
        check_budget(spec, n.max(2), b, cfg.event_budget)?;
    }
    let nodes = &spec.spaces().node;
    let nx = nodes.len();
    let points: Vec<(i64, i64)> = (0..nx * nx).map(|c| (nodes.value(c / nx), nodes.value(c % nx))).collect();
    let metric = euclid_metric(&points);
    let seeds = seeds(cfg);

    let rows: Vec<Vec<(usize, usize)>> = par_map(&seeds, |_, s| {
        ns.iter()
            .zip(&betas)
            .map(|(&n, &b)| {
                let sys = simulate(spec, SimConfig::new(n.max(2), s, b).budget(cfg.event_budget))?;
                let x = sys.node_states();
                Ok((x[0] as usize, x[1] as usize))
            })
            .collect()
    })?;

    let mut dbl = Vec::with_capacity(ns.len());
    let mut ses = Vec::with_capacity(ns.len());
    let mut csv = String::from("n,beta,dbl,se\n");
    let mut samples = String::from("replica,n,x1,x2\n");
    for (k, &n) in ns.iter().enumerate() {
        let pairs: Vec<(usize, usize)> = rows.iter().map(|r| r[k]).collect();
        let d = chaos_distance(&pairs, nx, &metric)?;
        let mut rng = CounterRng::new(key(cfg.seed, &[0xB007, n as u64]), &[]);
        let boot: Vec<f64> = (0..cfg.bootstrap)
            .map(|_| {
                let resampled: Vec<(usize, usize)> = (0..pairs.len()).map(|_| pairs[rng.below(pairs.len())]).collect();
                chaos_distance(&resampled, nx, &metric)
            })
            .collect::<mfgraph::Result<_>>()?;
        let se = if boot.len() > 1 {
            let m = boot.iter().sum::<f64>() / boot.len() as f64;
            (boot.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        let _ = writeln!(csv, "{n},{},{d},{se}", betas[k]);
        for (r, &(a, b)) in pairs.iter().enumerate() {
            let _ = writeln!(samples, "{r},{n},{},{}", nodes.value(a), nodes.value(b));
        }
        dbl.push(d);
        ses.push(se);
    }
    let decreasing = dbl.windows(2).zip(ses.windows(2)).all(|(d, e)| d[1] <= d[0] + (e[0] * e[0] + e[1] * e[1]).sqrt());
    let summary = PocSummary {
        ns,
        betas,
        dbl,
        ses,
        replicas: cfg.replicas,
        bootstrap: cfg.bootstrap,
        decreasing_within_se: decreasing,
    };
    let mut out = Outcome::new(&summary).file("poc.csv", csv).file("pairs.csv", samples);
    out.seeds = seeds;
    Ok(out)
}
