//! `wmaudit strength-sweep`: watermark strength vs memorized-sample
//! perplexity increase vs free-generation quality, one row per
//! (scheme, delta).
//!
//! Quality seeds depend only on the key index, so the delta = 0 row is the
//! shared baseline for both curves: the watermarked model with zero bias
//! generates exactly the baseline texts.

use std::path::PathBuf;

use serde::Serialize;
use wmaudit_core::memorization::{generation_quality, relative_ppl_increase};
use wmaudit_core::seed::derive_seed;
use wmaudit_core::vocab::TokenSeq;
use wmaudit_core::watermark::{Scheme, WatermarkConfig};

use crate::config::{ConfigArgs, ExperimentConfig};
use crate::csvout::{num, Csv};
use crate::manifest::ManifestBuilder;
use crate::parallel::parallel_map;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Serialize)]
struct SweepRow {
    scheme: Scheme,
    delta: f64,
    min_rel_increase_mean: f64,
    avg_rel_increase_mean: f64,
    quality_ppl_mean: f64,
    quality_rel_increase: f64,
    per_key_min: Vec<f64>,
    per_key_avg: Vec<f64>,
    per_key_quality: Vec<f64>,
}

#[derive(Serialize)]
struct Aggregate {
    schema: String,
    gamma: f64,
    prompt_len: usize,
    n_samples: usize,
    gen_samples: usize,
    gen_len: usize,
    keys: Vec<String>,
    rows: Vec<SweepRow>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    super::ensure_out_dir(cfg)?;
    let corpus = super::load_required_corpus(cfg)?;
    let (vocab, model) = super::memorization_model(cfg, &corpus)?;
    let samples = super::memorization::memo_sample_set(cfg, &corpus, &vocab);
    let prompt_len = cfg.prompt_lengths[0];
    let min_len = samples.iter().map(TokenSeq::len).min().unwrap_or(0);
    if prompt_len >= min_len {
        return Err(CliError::Precondition(format!(
            "prompt length {prompt_len} >= shortest sample length {min_len}"
        )));
    }
    let gamma = cfg.gammas[0];
    let keys = cfg.watermark_keys();

    // per-key quality baseline: unwatermarked generation with the same seeds
    let quality_seeds: Vec<u64> = (0..keys.len())
        .map(|i| derive_seed(cfg.master_seed, "quality", i as u64))
        .collect();
    let baseline_quality: Vec<f64> = quality_seeds
        .iter()
        .map(|&s| generation_quality(&model, None, cfg.gen_samples, cfg.gen_len, s))
        .collect::<Result<_, _>>()?;
    let baseline_mean: f64 =
        baseline_quality.iter().sum::<f64>() / baseline_quality.len() as f64;

    let tasks: Vec<(Scheme, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.deltas.iter().map(move |&d| (s, d)))
        .collect();
    type CellResult = Result<(Vec<f64>, Vec<f64>, Vec<f64>), wmaudit_core::Error>;
    let results: Vec<CellResult> = parallel_map(&tasks, cfg.threads, |_, &(scheme, delta)| {
        let mut mins = Vec::with_capacity(keys.len());
        let mut avgs = Vec::with_capacity(keys.len());
        let mut quality = Vec::with_capacity(keys.len());
        for (i, &key) in keys.iter().enumerate() {
            let config = WatermarkConfig { scheme, gamma, delta, key, mode: cfg.mode };
            let report = relative_ppl_increase(&model, &config, &samples, prompt_len)?;
            mins.push(report.min_rel_increase);
            avgs.push(report.avg_rel_increase);
            quality.push(generation_quality(
                &model,
                Some(&config),
                cfg.gen_samples,
                cfg.gen_len,
                quality_seeds[i],
            )?);
        }
        Ok((mins, avgs, quality))
    });

    let mut columns: Vec<String> = [
        "scheme",
        "delta",
        "gamma",
        "prompt_len",
        "n_samples",
        "n_keys",
        "min_rel_mean",
        "avg_rel_mean",
        "quality_ppl_mean",
        "quality_rel_increase",
    ]
    .map(String::from)
    .to_vec();
    for i in 0..keys.len() {
        columns.push(format!("min_k{i}"));
        columns.push(format!("avg_k{i}"));
        columns.push(format!("quality_k{i}"));
    }
    let mut csv = Csv::with_header(columns);
    let mut rows = Vec::new();
    for (&(scheme, delta), result) in tasks.iter().zip(results) {
        let (mins, avgs, quality) = result?;
        let k = keys.len() as f64;
        let min_mean = mins.iter().sum::<f64>() / k;
        let avg_mean = avgs.iter().sum::<f64>() / k;
        let q_mean = quality.iter().sum::<f64>() / k;
        let q_rel = (q_mean - baseline_mean) / baseline_mean;
        let mut row = vec![
            scheme.name().to_string(),
            num(delta),
            num(gamma),
            prompt_len.to_string(),
            samples.len().to_string(),
            keys.len().to_string(),
            num(min_mean),
            num(avg_mean),
            num(q_mean),
            num(q_rel),
        ];
        for i in 0..keys.len() {
            row.push(num(mins[i]));
            row.push(num(avgs[i]));
            row.push(num(quality[i]));
        }
        csv.row(row);
        rows.push(SweepRow {
            scheme,
            delta,
            min_rel_increase_mean: min_mean,
            avg_rel_increase_mean: avg_mean,
            quality_ppl_mean: q_mean,
            quality_rel_increase: q_rel,
            per_key_min: mins,
            per_key_avg: avgs,
            per_key_quality: quality,
        });
    }

    let csv_path = super::out_path(cfg, "strength_sweep.csv");
    csv.write(&csv_path)?;
    let json_path = super::out_path(cfg, "strength_sweep.json");
    wmaudit_core::data::write_json_pretty(
        &json_path,
        &Aggregate {
            schema: "strength-sweep.v1".to_string(),
            gamma,
            prompt_len,
            n_samples: samples.len(),
            gen_samples: cfg.gen_samples,
            gen_len: cfg.gen_len,
            keys: keys.iter().map(|k| format!("{k:016x}")).collect(),
            rows,
        },
    )?;

    let mut manifest = ManifestBuilder::new("strength-sweep", cfg);
    manifest.seeds("watermark-key", &keys);
    manifest.seeds("quality", &quality_seeds);
    manifest.file(&csv_path);
    manifest.file(&json_path);
    manifest.write(&cfg.out_dir)?;
    super::print_written(&csv_path);
    super::print_written(&json_path);
    Ok(vec![csv_path, json_path])
}
