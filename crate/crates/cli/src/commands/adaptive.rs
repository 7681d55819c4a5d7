//! `wmaudit adaptive`: paired plain vs watermark-aware min-K comparison.
//!
//! The dataset splits into four token-length quartile buckets; within each
//! bucket both attacks run on the same watermarked model with identical
//! keys, so every (bucket, key) pair is a controlled comparison. Gamma is
//! the middle grid value and delta the strongest one.

use std::path::PathBuf;

use serde::Serialize;
use wmaudit_core::mia::{best_adaptive_min_k, best_min_k, LabeledSample};
use wmaudit_core::watermark::{Scheme, Watermarked, WatermarkConfig};

use crate::config::{ConfigArgs, ExperimentConfig};
use crate::csvout::{num, Csv};
use crate::manifest::ManifestBuilder;
use crate::parallel::parallel_map;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct AdaptiveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

const N_BUCKETS: usize = 4;

#[derive(Serialize)]
struct PairRow {
    scheme: Scheme,
    bucket: usize,
    len_min: usize,
    len_max: usize,
    n_members: usize,
    n_nonmembers: usize,
    key: String,
    plain_auc: f64,
    plain_k: f64,
    adaptive_auc: f64,
    adaptive_k: f64,
    improvement: f64,
}

#[derive(Serialize)]
struct SchemeSummary {
    scheme: Scheme,
    n_pairs: usize,
    n_wins: usize,
    win_rate: f64,
    plain_auc_mean: f64,
    adaptive_auc_mean: f64,
}

#[derive(Serialize)]
struct Aggregate {
    schema: String,
    gamma: f64,
    delta: f64,
    keys: Vec<String>,
    summaries: Vec<SchemeSummary>,
    rows: Vec<PairRow>,
}

/// Contiguous length-quartile buckets; every bucket must contain both labels.
pub(crate) fn length_buckets(dataset: &[LabeledSample]) -> Result<Vec<Vec<usize>>, CliError> {
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by_key(|&i| (dataset[i].tokens.len(), i));
    let mut buckets = Vec::with_capacity(N_BUCKETS);
    let base = dataset.len() / N_BUCKETS;
    let extra = dataset.len() % N_BUCKETS;
    let mut start = 0usize;
    for b in 0..N_BUCKETS {
        let size = base + usize::from(b < extra);
        let idx: Vec<usize> = order[start..start + size].to_vec();
        start += size;
        let members = idx.iter().filter(|&&i| dataset[i].is_member()).count();
        if members == 0 || members == idx.len() {
            return Err(CliError::Precondition(format!(
                "length bucket {b} has only one label; enlarge or rebalance the dataset"
            )));
        }
        buckets.push(idx);
    }
    Ok(buckets)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    super::ensure_out_dir(cfg)?;
    let setup = super::mia::prepare(cfg)?;
    let keys = cfg.watermark_keys();
    let gamma = cfg.gammas[cfg.gammas.len() / 2];
    let delta = *cfg.deltas.last().expect("validated non-empty");
    let buckets = length_buckets(&setup.dataset)?;

    let mut tasks: Vec<(Scheme, usize, u64)> = Vec::new();
    for &s in &cfg.schemes {
        for b in 0..buckets.len() {
            for &k in &keys {
                tasks.push((s, b, k));
            }
        }
    }
    type PairResult = Result<(f64, f64, f64, f64), wmaudit_core::Error>;
    let results: Vec<PairResult> = parallel_map(&tasks, cfg.threads, |_, &(scheme, b, key)| {
        let config = WatermarkConfig { scheme, gamma, delta, key, mode: cfg.mode };
        let wm = Watermarked::new(&setup.model, &config)?;
        let subset: Vec<LabeledSample> =
            buckets[b].iter().map(|&i| setup.dataset[i].clone()).collect();
        let plain = best_min_k(&wm, &subset)?;
        let adaptive = best_adaptive_min_k(&wm, &config, &subset)?;
        Ok((plain.auc, plain.k_percent, adaptive.auc, adaptive.k_percent))
    });

    let mut csv = Csv::new(&[
        "scheme",
        "bucket",
        "len_min",
        "len_max",
        "n_members",
        "n_nonmembers",
        "key",
        "plain_auc",
        "plain_k",
        "adaptive_auc",
        "adaptive_k",
        "improvement",
    ]);
    let mut rows = Vec::new();
    for (&(scheme, b, key), result) in tasks.iter().zip(results) {
        let (plain_auc, plain_k, adaptive_auc, adaptive_k) = result?;
        let idx = &buckets[b];
        let lens: Vec<usize> = idx.iter().map(|&i| setup.dataset[i].tokens.len()).collect();
        let n_members = idx.iter().filter(|&&i| setup.dataset[i].is_member()).count();
        let row = PairRow {
            scheme,
            bucket: b,
            len_min: *lens.iter().min().unwrap(),
            len_max: *lens.iter().max().unwrap(),
            n_members,
            n_nonmembers: idx.len() - n_members,
            key: format!("{key:016x}"),
            plain_auc,
            plain_k,
            adaptive_auc,
            adaptive_k,
            improvement: adaptive_auc - plain_auc,
        };
        csv.row(vec![
            row.scheme.name().to_string(),
            row.bucket.to_string(),
            row.len_min.to_string(),
            row.len_max.to_string(),
            row.n_members.to_string(),
            row.n_nonmembers.to_string(),
            row.key.clone(),
            num(row.plain_auc),
            num(row.plain_k),
            num(row.adaptive_auc),
            num(row.adaptive_k),
            num(row.improvement),
        ]);
        rows.push(row);
    }

    let mut summaries = Vec::new();
    for &scheme in &cfg.schemes {
        let of_scheme: Vec<&PairRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
        let n_pairs = of_scheme.len();
        let n_wins = of_scheme.iter().filter(|r| r.adaptive_auc >= r.plain_auc).count();
        summaries.push(SchemeSummary {
            scheme,
            n_pairs,
            n_wins,
            win_rate: n_wins as f64 / n_pairs as f64,
            plain_auc_mean: of_scheme.iter().map(|r| r.plain_auc).sum::<f64>() / n_pairs as f64,
            adaptive_auc_mean: of_scheme.iter().map(|r| r.adaptive_auc).sum::<f64>()
                / n_pairs as f64,
        });
    }

    let csv_path = super::out_path(cfg, "adaptive.csv");
    csv.write(&csv_path)?;
    let json_path = super::out_path(cfg, "adaptive_summary.json");
    wmaudit_core::data::write_json_pretty(
        &json_path,
        &Aggregate {
            schema: "adaptive.v1".to_string(),
            gamma,
            delta,
            keys: keys.iter().map(|k| format!("{k:016x}")).collect(),
            summaries,
            rows,
        },
    )?;
    let mut manifest = ManifestBuilder::new("adaptive", cfg);
    manifest.seeds("watermark-key", &keys);
    manifest.file(&csv_path);
    manifest.file(&json_path);
    manifest.write(&cfg.out_dir)?;
    super::print_written(&csv_path);
    super::print_written(&json_path);
    Ok(vec![csv_path, json_path])
}
