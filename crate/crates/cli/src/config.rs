//! Experiment configuration files.

use std::path::{Path, PathBuf};

use mfgraph::clt::CltTolerance;
use mfgraph::model::ModelDoc;
use mfgraph::nsystem::DEFAULT_EVENT_BUDGET;
use mfgraph::{presets, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Where the model comes from. Relative paths resolve against the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRef {
    Preset(String),
    Path(PathBuf),
    Inline(Box<ModelDoc>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    LlnRateFixedBeta,
    LlnRateAccel,
    LlnRateIid,
    Poc,
    BetaComparison,
    Riccati,
    Clt,
    CltMixture,
    Trace,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::LlnRateFixedBeta => "lln_rate_fixed_beta",
            ExperimentKind::LlnRateAccel => "lln_rate_accel",
            ExperimentKind::LlnRateIid => "lln_rate_iid",
            ExperimentKind::Poc => "poc",
            ExperimentKind::BetaComparison => "beta_comparison",
            ExperimentKind::Riccati => "riccati",
            ExperimentKind::Clt => "clt",
            ExperimentKind::CltMixture => "clt_mixture",
            ExperimentKind::Trace => "trace",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub beta: Vec<f64>,
}

/// Harness self-test: replace simulated errors by c·x^(−1/2)·(1 + noise·N(0,1)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DryRun {
    pub c: f64,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelRef,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// RK4 steps over [0, T].
    #[serde(default = "default_steps")]
    pub grid_steps: usize,
    /// Intervals of the reporting grid (snapshots, λ table).
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub event_budget: f64,
    /// Surrogate size for the fixed-β and β-comparison experiments.
    #[serde(default)]
    pub n_ref: Option<usize>,
    /// Coupled errors average over nodes 0..min(n, nodes).
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// (a_k, t_k) for the fluctuation functional; default a single term at T.
    #[serde(default)]
    pub functional: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub n_mc: Option<usize>,
    #[serde(default)]
    pub meta_replicas: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub log_edges: bool,
    #[serde(default)]
    pub tolerance: Option<CltTolerance>,
    #[serde(default)]
    pub dry_run: Option<DryRun>,
}

fn one() -> usize {
    1
}
fn default_steps() -> usize {
    mfgraph::limits::DEFAULT_STEPS
}
fn default_points() -> usize {
    20
}
fn default_budget() -> f64 {
    DEFAULT_EVENT_BUDGET
}
fn default_nodes() -> usize {
    10
}
fn default_bootstrap() -> usize {
    200
}

impl ExperimentConfig {
    pub fn new(model: ModelRef, experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({
            "model": model,
            "experiment": experiment,
        }))
        .expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config; a relative model path is resolved against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let ModelRef::Path(p) = &mut cfg.model {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load_model(&self) -> CliResult<ModelSpec> {
        match &self.model {
            ModelRef::Preset(name) => presets::by_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))),
            ModelRef::Path(p) => Ok(ModelSpec::from_path(p)?),
            ModelRef::Inline(doc) => Ok(ModelSpec::from_doc((**doc).clone())?),
        }
    }

    /// Structural checks that do not need the model.
    pub fn check(&self) -> CliResult<()> {
        use ExperimentKind as K;
        let fail = |m: String| Err(CliError::Config(m));
        if self.replicas == 0 {
            return fail("replicas must be at least 1".into());
        }
        if !(self.event_budget > 0.0) {
            return fail("event_budget must be positive".into());
        }
        if self.grid_steps == 0 || self.grid_points == 0 {
            return fail("grid resolutions must be positive".into());
        }
        if self.sweep.n.contains(&0) {
            return fail("sweep.n entries must be positive".into());
        }
        if self.sweep.beta.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return fail("sweep.beta entries must be finite and non-negative".into());
        }
        let needs_n = matches!(
            self.experiment,
            K::Simulate | K::LlnRateFixedBeta | K::LlnRateAccel | K::LlnRateIid | K::Poc | K::Clt | K::CltMixture
        );
        if needs_n && self.sweep.n.is_empty() {
            return fail(format!("{} needs a nonempty sweep.n", self.experiment.name()));
        }
        if self.experiment == K::BetaComparison && self.sweep.beta.is_empty() {
            return fail("beta_comparison needs a nonempty sweep.beta".into());
        }
        if matches!(self.experiment, K::LlnRateFixedBeta | K::BetaComparison) && self.n_ref.is_none() {
            return fail(format!("{} needs n_ref", self.experiment.name()));
        }
        if self.experiment == K::LlnRateFixedBeta && self.sweep.n.iter().any(|&n| Some(n) > self.n_ref) {
            return fail("sweep.n must not exceed n_ref".into());
        }
        Ok(())
    }

    /// Canonical JSON used for hashing and the manifest.
    pub fn canonical_json(&self) -> String {
        mfgraph::json::to_sorted_string(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(r#"{"model": {"preset": "accel"}, "experiment": "poc", "sweep": {"n": [50]}}"#).unwrap();
        assert_eq!(cfg.replicas, 1);
        assert_eq!(cfg.nodes, 10);
        assert_eq!(cfg.event_budget, 5e8);
        cfg.check().unwrap();
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"model": {"preset": "accel"}, "experiment": "poc", "bogus": 1}"#).is_err());
    }

    #[test]
    fn empty_sweep_rejected() {
        let cfg = ExperimentConfig::new(ModelRef::Preset("accel".into()), ExperimentKind::LlnRateAccel);
        assert!(matches!(cfg.check(), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_preset() {
        let cfg = ExperimentConfig::new(ModelRef::Preset("nope".into()), ExperimentKind::Riccati);
        assert!(cfg.load_model().is_err());
    }
}
