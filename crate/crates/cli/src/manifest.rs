//! Run manifests: enough bookkeeping to reproduce any artifact byte-for-byte
//! (config hash, seeds, file list). The wall clock is informational and the
//! only field expected to differ between identical runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub seeds: BTreeMap<String, Vec<String>>,
    pub files: Vec<String>,
    pub wall_clock_secs: f64,
}

pub struct ManifestBuilder {
    command: String,
    config_hash: String,
    master_seed: u64,
    seeds: BTreeMap<String, Vec<String>>,
    files: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let hash = wmaudit_core::seed::fnv1a64(cfg.canonical_json().as_bytes());
        Self {
            command: command.to_string(),
            config_hash: format!("{hash:016x}"),
            master_seed: cfg.master_seed,
            seeds: BTreeMap::new(),
            files: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn seeds(&mut self, purpose: &str, seeds: &[u64]) {
        self.seeds
            .insert(purpose.to_string(), seeds.iter().map(|s| format!("{s:016x}")).collect());
    }

    pub fn file(&mut self, path: &Path) {
        self.files.push(path.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }

    /// Writes `manifest_<command>.json` into `out_dir` and returns its path.
    pub fn write(self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            schema: "manifest.v1".to_string(),
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config_hash,
            master_seed: self.master_seed,
            seeds: self.seeds,
            files: self.files,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = out_dir.join(format!("manifest_{}.json", self.command));
        wmaudit_core::data::write_json_pretty(&path, &manifest)?;
        Ok(path)
    }
}
