//! Writes outcomes to disk: data files, `summary.json`, and `manifest.json`.
//! Only the manifest carries a timestamp.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiments::Outcome;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub versions: BTreeMap<String, String>,
    pub root_seed: u64,
    pub replica_seeds: Vec<u64>,
    /// sha256 of every data file, by name.
    pub files: BTreeMap<String, String>,
    pub timestamp_unix: u64,
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes every file of `outcome` plus summary and manifest into `dir`.
pub fn write_outcome(cfg: &ExperimentConfig, outcome: &Outcome, dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = BTreeMap::new();
    let summary = mfgraph::json::to_sorted_string(&outcome.summary);
    for (name, contents) in outcome.files.iter().map(|(n, c)| (n.as_str(), c.as_str())).chain([("summary.json", summary.as_str())]) {
        write(&dir.join(name), contents)?;
        files.insert(name.to_string(), sha256_hex(contents.as_bytes()));
    }
    let canonical = cfg.canonical_json();
    let manifest = Manifest {
        experiment: cfg.experiment.name().into(),
        config_sha256: sha256_hex(canonical.as_bytes()),
        config: serde_json::from_str(&canonical).expect("canonical config is JSON"),
        versions: BTreeMap::from([
            ("mfgraph".to_string(), mfgraph::VERSION.to_string()),
            ("mfgraph-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ]),
        root_seed: cfg.seed,
        replica_seeds: outcome.seeds.clone(),
        files,
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let path = dir.join("manifest.json");
    write(&path, &mfgraph::json::to_sorted_string(&manifest))?;
    Ok(path)
}
