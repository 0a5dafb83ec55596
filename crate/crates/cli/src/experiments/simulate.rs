//! A single n-system run with its trajectory log.

use serde::Serialize;

use mfgraph::nsystem::{laws_to_csv, NSystem, SimConfig};
use mfgraph::ModelSpec;

use super::{report_grid, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SimulateSummary {
    n: usize,
    beta: f64,
    seed: u64,
    node_jumps: u64,
    edge_jumps: u64,
    terminal_empirical: Vec<f64>,
}

pub fn run(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    let n = cfg.sweep.n[0];
    let beta = cfg.sweep.beta.first().copied().unwrap_or_else(|| spec.beta().at(n));
    let sim = SimConfig::new(n, cfg.seed, beta).log_edges(cfg.log_edges).budget(cfg.event_budget);
    let mut sys = NSystem::init(spec, sim)?;
    let grid = report_grid(spec, cfg.grid_points);
    let laws = sys.run_snapshots(&grid)?;
    let (node_jumps, edge_jumps) = sys.accepted();
    let summary = SimulateSummary {
        n,
        beta,
        seed: cfg.seed,
        node_jumps,
        edge_jumps,
        terminal_empirical: laws.last().cloned().unwrap_or_default(),
    };
    let mut out = Outcome::new(&summary)
        .file("trajectory.csv", sys.log().to_csv())
        .file("empirical.csv", laws_to_csv(spec.spaces().node.values(), &grid, &laws));
    out.seeds = vec![cfg.seed];
    Ok(out)
}
