//! Experiment driver for `mfgraph`: config parsing, sweeps over n and β,
//! and deterministic report files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, ModelRef, Sweep};
pub use error::{CliError, CliResult};
pub use experiments::{run_experiment, run_with_model, Outcome};

use std::path::{Path, PathBuf};

/// Runs a config and writes its outputs to `out` (or the config's `out`, or `./out/<experiment>`).
pub fn run_and_write(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<(Outcome, PathBuf)> {
    let outcome = run_experiment(cfg)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
    report::write_outcome(cfg, &outcome, &dir)?;
    Ok((outcome, dir))
}
