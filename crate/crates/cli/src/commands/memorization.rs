//! `wmaudit memorization`: relative perplexity increase of memorized
//! samples, one CSV row per (scheme, prompt length), with per-delta column
//! groups and per-key columns; averaged over the derived watermark keys.
//!
//! The scored set is the first `memo_samples` corpus documents plus the
//! duplication target (when configured); gamma is the first grid value.

use std::path::PathBuf;

use serde::Serialize;
use wmaudit_core::memorization::relative_ppl_increase_over_keys;
use wmaudit_core::vocab::{tokenize, TokenSeq};
use wmaudit_core::watermark::{Scheme, WatermarkConfig};

use crate::config::{ConfigArgs, ExperimentConfig};
use crate::csvout::{num, Csv};
use crate::manifest::ManifestBuilder;
use crate::parallel::parallel_map;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct MemorizationArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Serialize)]
struct KeyCell {
    key: String,
    min_rel_increase: f64,
    avg_rel_increase: f64,
}

#[derive(Serialize)]
struct DeltaCell {
    delta: f64,
    min_rel_increase_mean: f64,
    avg_rel_increase_mean: f64,
    n_flagged_infinite: usize,
    per_key: Vec<KeyCell>,
}

#[derive(Serialize)]
struct GridCell {
    scheme: Scheme,
    prompt_len: usize,
    per_delta: Vec<DeltaCell>,
}

#[derive(Serialize)]
struct Aggregate {
    schema: String,
    gamma: f64,
    deltas: Vec<f64>,
    prompt_lengths: Vec<usize>,
    keys: Vec<String>,
    n_samples: usize,
    cells: Vec<GridCell>,
}

pub(crate) fn memo_sample_set(
    cfg: &ExperimentConfig,
    corpus: &[String],
    vocab: &wmaudit_core::vocab::Vocabulary,
) -> Vec<TokenSeq> {
    let mut indices: Vec<usize> = (0..cfg.memo_samples.min(corpus.len())).collect();
    if let Some(dup) = &cfg.duplication {
        if dup.doc_index < corpus.len() && !indices.contains(&dup.doc_index) {
            indices.push(dup.doc_index);
        }
    }
    indices.iter().map(|&i| tokenize(vocab, &corpus[i])).collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    super::ensure_out_dir(cfg)?;
    let corpus = super::load_required_corpus(cfg)?;
    let (vocab, model) = super::memorization_model(cfg, &corpus)?;
    let samples = memo_sample_set(cfg, &corpus, &vocab);
    let min_len = samples.iter().map(TokenSeq::len).min().unwrap_or(0);
    if let Some(&bad) = cfg.prompt_lengths.iter().find(|&&p| p >= min_len) {
        return Err(CliError::Precondition(format!(
            "prompt length {bad} >= shortest sample length {min_len}"
        )));
    }
    let gamma = cfg.gammas[0];
    let keys = cfg.watermark_keys();

    // one task per (scheme, prompt, delta); results regrouped in grid order
    let tasks: Vec<(Scheme, usize, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| {
            cfg.prompt_lengths
                .iter()
                .flat_map(move |&p| cfg.deltas.iter().map(move |&d| (s, p, d)))
        })
        .collect();
    let results = parallel_map(&tasks, cfg.threads, |_, &(scheme, prompt_len, delta)| {
        let config = WatermarkConfig { scheme, gamma, delta, key: 0, mode: cfg.mode };
        relative_ppl_increase_over_keys(&model, &config, &keys, &samples, prompt_len)
    });

    let mut columns: Vec<String> =
        ["scheme", "prompt_len", "gamma", "n_samples", "n_keys"].map(String::from).to_vec();
    for &d in &cfg.deltas {
        columns.push(format!("d{}_min_mean", num(d)));
        columns.push(format!("d{}_avg_mean", num(d)));
        columns.push(format!("d{}_flagged", num(d)));
        for i in 0..keys.len() {
            columns.push(format!("d{}_min_k{i}", num(d)));
            columns.push(format!("d{}_avg_k{i}", num(d)));
        }
    }
    let mut csv = Csv::with_header(columns);
    let mut cells = Vec::new();
    let mut task_iter = results.into_iter();
    for &scheme in &cfg.schemes {
        for &prompt_len in &cfg.prompt_lengths {
            let mut row = vec![
                scheme.name().to_string(),
                prompt_len.to_string(),
                num(gamma),
                samples.len().to_string(),
                keys.len().to_string(),
            ];
            let mut per_delta = Vec::new();
            for &delta in &cfg.deltas {
                let keyed = task_iter.next().expect("task per grid point")?;
                row.push(num(keyed.min_rel_increase_mean));
                row.push(num(keyed.avg_rel_increase_mean));
                let flagged: usize = keyed.per_key.iter().map(|r| r.n_flagged_infinite).sum();
                row.push(flagged.to_string());
                let mut per_key = Vec::new();
                for (i, report) in keyed.per_key.iter().enumerate() {
                    row.push(num(report.min_rel_increase));
                    row.push(num(report.avg_rel_increase));
                    per_key.push(KeyCell {
                        key: format!("{:016x}", keys[i]),
                        min_rel_increase: report.min_rel_increase,
                        avg_rel_increase: report.avg_rel_increase,
                    });
                }
                per_delta.push(DeltaCell {
                    delta,
                    min_rel_increase_mean: keyed.min_rel_increase_mean,
                    avg_rel_increase_mean: keyed.avg_rel_increase_mean,
                    n_flagged_infinite: flagged,
                    per_key,
                });
            }
            csv.row(row);
            cells.push(GridCell { scheme, prompt_len, per_delta });
        }
    }

    let csv_path = super::out_path(cfg, "memorization.csv");
    csv.write(&csv_path)?;
    let json_path = super::out_path(cfg, "memorization.json");
    let aggregate = Aggregate {
        schema: "memorization.v1".to_string(),
        gamma,
        deltas: cfg.deltas.clone(),
        prompt_lengths: cfg.prompt_lengths.clone(),
        keys: keys.iter().map(|k| format!("{k:016x}")).collect(),
        n_samples: samples.len(),
        cells,
    };
    wmaudit_core::data::write_json_pretty(&json_path, &aggregate)?;

    let mut manifest = ManifestBuilder::new("memorization", cfg);
    manifest.seeds("watermark-key", &keys);
    manifest.file(&csv_path);
    manifest.file(&json_path);
    manifest.write(&cfg.out_dir)?;
    super::print_written(&csv_path);
    super::print_written(&json_path);
    Ok(vec![csv_path, json_path])
}
