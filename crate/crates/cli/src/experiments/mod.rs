//! Experiment runners. Each returns an [`Outcome`]; writing it to disk is
//! the job of [`crate::report`].

mod fluct;
mod lln;
mod poc;
mod riccati;
mod simulate;

use rayon::prelude::*;
use serde_json::Value;

use mfgraph::clt::replica_seed;
use mfgraph::model::validate;
use mfgraph::prm::{PrmStream, StreamId, StreamShape};
use mfgraph::ModelSpec;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};

pub use fluct::{MixtureSummary, TraceSummary};
pub use lln::{LlnSummary, NuSummary};
pub use poc::PocSummary;
pub use riccati::RiccatiSummary;

/// Data files plus a JSON summary; all of it is a function of the config.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<(String, String)>,
    pub seeds: Vec<u64>,
}

impl Outcome {
    fn new(summary: impl serde::Serialize) -> Self {
        Outcome { summary: serde_json::to_value(summary).expect("serializable summary"), files: Vec::new(), seeds: Vec::new() }
    }

    fn file(mut self, name: &str, contents: String) -> Self {
        self.files.push((name.into(), contents));
        self
    }

    fn json_file(self, name: &str, value: &impl serde::Serialize) -> Self {
        self.file(name, mfgraph::json::to_sorted_string(value))
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

/// Validates config and model, then runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    cfg.check()?;
    let spec = cfg.load_model()?;
    let report = validate(&spec);
    if !report.is_ok() {
        let lines: Vec<String> = report.violations.iter().map(|v| format!("{:?}: {}", v.rule, v.detail)).collect();
        return Err(CliError::Validation(lines.join("\n")));
    }
    run_with_model(cfg, &spec)
}

/// Runs on an already validated model.
pub fn run_with_model(cfg: &ExperimentConfig, spec: &ModelSpec) -> CliResult<Outcome> {
    use ExperimentKind as K;
    match cfg.experiment {
        K::Simulate => simulate::run(cfg, spec),
        K::LlnRateAccel | K::LlnRateIid | K::LlnRateFixedBeta => lln::run_lln(cfg, spec),
        K::BetaComparison => lln::run_beta_comparison(cfg, spec),
        K::Poc => poc::run(cfg, spec),
        K::Riccati => riccati::run(cfg, spec),
        K::Clt => fluct::run_clt(cfg, spec),
        K::CltMixture => fluct::run_mixture(cfg, spec),
        K::Trace => fluct::run_trace(cfg, spec),
    }
}

/// Per-replica seeds of the experiment family.
pub(crate) fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.replicas).map(|r| replica_seed(cfg.seed, r)).collect()
}

/// Parallel map over replicas, reduced in replica order.
pub(crate) fn par_map<T: Send>(seeds: &[u64], f: impl Fn(usize, u64) -> mfgraph::Result<T> + Sync) -> CliResult<Vec<T>> {
    Ok(seeds.par_iter().enumerate().map(|(r, &s)| f(r, s)).collect::<mfgraph::Result<Vec<T>>>()?)
}

/// Node stream i of a replica, shaped like the n-system's node streams.
pub(crate) fn node_stream(spec: &ModelSpec, seed: u64, i: usize) -> PrmStream {
    PrmStream::new(StreamId::Node(i), seed, spec.horizon(), StreamShape::node(spec))
}

/// Uniform reporting grid with `points` intervals on [0, T].
pub(crate) fn report_grid(spec: &ModelSpec, points: usize) -> Vec<f64> {
    mfgraph::limits::uniform_grid(spec.horizon(), points)
}

pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let e = mfgraph::metrics::mean_se(xs);
    (e.value, e.se)
}
