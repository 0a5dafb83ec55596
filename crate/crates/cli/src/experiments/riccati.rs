//! Averaged forward equation, overlaid with empirical measures of β(n) = n systems.

use std::fmt::Write as _;

use serde::Serialize;

use mfgraph::limits::{forward_equation_accel, uniform_grid, InvariantMeasureMap};
use mfgraph::metrics::{abs_metric, dbl_distance};
use mfgraph::nsystem::{check_budget, NSystem, SimConfig};
use mfgraph::ModelSpec;

use super::{par_map, report_grid, seeds, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiSummary {
    pub terminal_law: Vec<f64>,
    pub ns: Vec<usize>,
    /// max over grid times and replicas of d_BL(μ^n(t), p_t), per n.
    pub max_dbl: Vec<f64>,
    pub grid_points: usize,
    pub replicas: usize,
}

pub fn run(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let q = InvariantMeasureMap::compute(spec)?;
    let law = forward_equation_accel(spec, &q, &uniform_grid(spec.horizon(), cfg.grid_steps))?;
    let states = spec.spaces().node.values().to_vec();
    let metric = abs_metric(&states);
    let grid = report_grid(spec, cfg.grid_points);
    let ns = cfg.sweep.n.clone();
    for &n in &ns {
        check_budget(spec, n, spec.beta().at(n), cfg.event_budget)?;
    }
    let seeds = if ns.is_empty() { Vec::new() } else { seeds(cfg) };

    // per replica, per n, per grid time
    let rows: Vec<Vec<Vec<(Vec<f64>, f64)>>> = par_map(&seeds, |_, s| {
        ns.iter()
            .map(|&n| {
                let mut sys = NSystem::init(spec, SimConfig::new(n, s, spec.beta().at(n)).budget(cfg.event_budget))?;
                let snaps = sys.run_snapshots(&grid)?;
                grid.iter()
                    .zip(snaps)
                    .map(|(&t, emp)| {
                        let d = dbl_distance(&emp, &law.at(t), &metric)?;
                        Ok((emp, d))
                    })
                    .collect()
            })
            .collect()
    })?;

    let mut overlay = String::from("replica,n,time,dbl");
    for x in &states {
        let _ = write!(overlay, ",emp_{x},p_{x}");
    }
    overlay.push('\n');
    let mut max_dbl = vec![0.0f64; ns.len()];
    for (r, per_n) in rows.iter().enumerate() {
        for (k, per_t) in per_n.iter().enumerate() {
            for (&t, (emp, d)) in grid.iter().zip(per_t) {
                max_dbl[k] = max_dbl[k].max(*d);
                let p = law.at(t);
                let _ = write!(overlay, "{r},{},{t},{d}", ns[k]);
                for (e, pv) in emp.iter().zip(&p) {
                    let _ = write!(overlay, ",{e},{pv}");
                }
                overlay.push('\n');
            }
        }
    }
    let summary = RiccatiSummary {
        terminal_law: law.terminal().to_vec(),
        ns,
        max_dbl,
        grid_points: cfg.grid_points,
        replicas: seeds.len(),
    };
    let mut out = Outcome::new(&summary)
        .file("riccati_law.csv", law.to_csv(&states))
        .file("invariant_q.csv", q.to_csv(spec))
        .file("overlay.csv", overlay);
    out.seeds = seeds;
    Ok(out)
}
