//! Experiment configuration: JSON file, flag overrides, environment override
//! for the output directory.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wmaudit_core::mia::SmallerRefVariant;
use wmaudit_core::watermark::{Mode, Scheme};

use crate::CliError;

/// Output-directory override, checked between the config file and the flag.
pub const OUT_DIR_ENV: &str = "WMAUDIT_OUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DuplicationSpec {
    pub doc_index: usize,
    pub factors: Vec<u64>,
}

impl Default for DuplicationSpec {
    fn default() -> Self {
        Self { doc_index: 0, factors: vec![1, 10, 20, 50] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub order: usize,
    pub alpha: f64,
    pub schemes: Vec<Scheme>,
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub mode: Mode,
    pub key_count: usize,
    pub prompt_lengths: Vec<usize>,
    pub duplication: Option<DuplicationSpec>,
    pub attacks: Vec<String>,
    pub smaller_ref_variants: Vec<SmallerRefVariant>,
    pub min_k_grid: Vec<f64>,
    /// Number of corpus documents scored by the memorization recipes.
    pub memo_samples: usize,
    /// Free generations per key for the quality baseline.
    pub gen_samples: usize,
    /// Length of each free generation, in tokens.
    pub gen_len: usize,
    pub out_dir: PathBuf,
    pub master_seed: u64,
    /// Worker threads for grid cells; 0 = available parallelism.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            dataset: None,
            order: 2,
            alpha: 0.1,
            schemes: vec![Scheme::Umd, Scheme::Unigram],
            gammas: vec![0.3, 0.4, 0.5, 0.6, 0.7],
            deltas: vec![0.0, 2.0, 5.0, 10.0],
            mode: Mode::Soft,
            key_count: 5,
            prompt_lengths: vec![0, 10, 20],
            duplication: None,
            attacks: vec![
                "ppl".to_string(),
                "lowercase".to_string(),
                "zlib".to_string(),
                "min_k".to_string(),
                "adaptive_min_k".to_string(),
                "smaller_ref".to_string(),
            ],
            smaller_ref_variants: vec![
                SmallerRefVariant::Unwatermarked,
                SmallerRefVariant::DifferentKey,
                SmallerRefVariant::DifferentStrength,
            ],
            min_k_grid: wmaudit_core::mia::MIN_K_GRID.to_vec(),
            memo_samples: 20,
            gen_samples: 100,
            gen_len: 42,
            out_dir: PathBuf::from("out"),
            master_seed: 1,
            threads: 0,
        }
    }
}

/// Flag-level overrides shared by the recipe subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// Experiment config JSON; defaults applied for absent fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus file (one document per line, or JSONL with a "text" field).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Labeled dataset JSONL ({"text", "label"}; label 1 = member).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub key_count: Option<usize>,
}

impl ConfigArgs {
    /// Resolution order per field: flag > `WMAUDIT_OUT_DIR` (out_dir only)
    /// > config file > default.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg: ExperimentConfig = match &self.config {
            Some(path) => {
                let raw = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {path:?}: {e}")))?;
                serde_json::from_str(&raw)
                    .map_err(|e| CliError::Usage(format!("bad config {path:?}: {e}")))?
            }
            None => ExperimentConfig::default(),
        };
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.out_dir = PathBuf::from(dir);
            }
        }
        if let Some(v) = &self.corpus {
            cfg.corpus = Some(v.clone());
        }
        if let Some(v) = &self.dataset {
            cfg.dataset = Some(v.clone());
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        if let Some(v) = self.order {
            cfg.order = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.key_count {
            cfg.key_count = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.key_count == 0 {
            return Err(CliError::Precondition("key_count must be >= 1".to_string()));
        }
        if self.gammas.is_empty() || self.deltas.is_empty() || self.schemes.is_empty() {
            return Err(CliError::Precondition(
                "schemes, gammas, and deltas must be non-empty".to_string(),
            ));
        }
        if self.prompt_lengths.is_empty() {
            return Err(CliError::Precondition("prompt_lengths must be non-empty".to_string()));
        }
        Ok(())
    }

    /// The derived watermark keys: `derive_seed(master_seed, "watermark-key", i)`.
    pub fn watermark_keys(&self) -> Vec<u64> {
        (0..self.key_count)
            .map(|i| wmaudit_core::seed::derive_seed(self.master_seed, "watermark-key", i as u64))
            .collect()
    }

    /// Canonical JSON used for the manifest hash. Execution-environment
    /// fields (thread count, output directory) are normalized away: they
    /// never change any artifact byte.
    pub fn canonical_json(&self) -> String {
        let mut normalized = self.clone();
        normalized.threads = 0;
        normalized.out_dir = PathBuf::from("out");
        serde_json::to_string(&normalized).expect("config serializes")
    }
}
