//! `wmaudit mia`: the attack suite over the watermark grid.
//!
//! With no dataset file, the member/non-member fixture is constructed from
//! the corpus itself: a seeded shuffle takes half the documents as the
//! training (member) set and leaves the other half as same-distribution
//! non-members; the split is written next to the reports. The suite then
//! reports per-key AUCs, means, and drops per (scheme, gamma, delta) cell,
//! including the three smaller-reference variants, plus the fraction of
//! non-negative drops over the four key-oblivious attacks per gamma sweep.

use std::path::PathBuf;

use serde::Serialize;
use wmaudit_core::data::{dataset_to_samples, write_dataset, DatasetRow};
use wmaudit_core::mia::{attack_suite, AucResult, LabeledSample, SuiteOptions};
use wmaudit_core::ngram::{train_with_vocab, NGramModel};
use wmaudit_core::seed::{derive_seed, SplitMix64};
use wmaudit_core::vocab::build_vocab;
use wmaudit_core::watermark::{Scheme, WatermarkConfig};

use crate::config::{ConfigArgs, ExperimentConfig};
use crate::csvout::{num, Csv};
use crate::manifest::ManifestBuilder;
use crate::parallel::parallel_map;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct MiaArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// The four attacks whose AUC drop defines the gamma-sweep fraction (the
/// key-aware adaptive attack and the reference variants are reported but
/// excluded from it).
const CORE_DROP_ATTACKS: [&str; 4] = ["ppl", "lowercase", "zlib", "min_k"];

pub(crate) struct MiaSetup {
    pub model: NGramModel<f64>,
    pub reference: NGramModel<f64>,
    pub dataset: Vec<LabeledSample>,
    /// Rows actually used, for the artifact dump (construction mode only).
    pub constructed_rows: Option<Vec<DatasetRow>>,
}

/// Builds the models and labeled dataset, constructing the split when no
/// dataset file is configured.
pub(crate) fn prepare(cfg: &ExperimentConfig) -> Result<MiaSetup, CliError> {
    let corpus = super::load_required_corpus(cfg)?;
    let ref_order = cfg.order.saturating_sub(1).max(1);
    match &cfg.dataset {
        Some(path) => {
            let rows = wmaudit_core::data::load_dataset(path)?;
            let mut all_docs = corpus.clone();
            all_docs.extend(rows.iter().map(|r| r.text.clone()));
            let vocab = build_vocab(&all_docs)?;
            let model = train_with_vocab(vocab.clone(), &corpus, cfg.order, cfg.alpha, None)?;
            let reference = train_with_vocab(vocab.clone(), &corpus, ref_order, cfg.alpha, None)?;
            let dataset = dataset_to_samples(&vocab, &rows);
            Ok(MiaSetup { model, reference, dataset, constructed_rows: None })
        }
        None => {
            if corpus.len() < 4 {
                return Err(CliError::Precondition(format!(
                    "need at least 4 corpus documents to construct a split, got {}",
                    corpus.len()
                )));
            }
            let mut order: Vec<usize> = (0..corpus.len()).collect();
            let mut rng = SplitMix64::new(derive_seed(cfg.master_seed, "dataset-split", 0));
            for i in (1..order.len()).rev() {
                let j = rng.next_below(i as u64 + 1) as usize;
                order.swap(i, j);
            }
            let half = corpus.len() / 2;
            let member_set: std::collections::HashSet<usize> =
                order[..half].iter().copied().collect();
            let member_docs: Vec<String> =
                order[..half].iter().map(|&i| corpus[i].clone()).collect();
            let vocab = build_vocab(&corpus)?;
            let model =
                train_with_vocab(vocab.clone(), &member_docs, cfg.order, cfg.alpha, None)?;
            let reference =
                train_with_vocab(vocab.clone(), &member_docs, ref_order, cfg.alpha, None)?;
            // rows keep corpus order: membership is a random subset of it,
            // so downstream tie-breaks on position stay label-neutral
            let rows: Vec<DatasetRow> = corpus
                .iter()
                .enumerate()
                .map(|(i, text)| DatasetRow {
                    text: text.clone(),
                    label: u8::from(member_set.contains(&i)),
                })
                .collect();
            let dataset = dataset_to_samples(&vocab, &rows);
            Ok(MiaSetup { model, reference, dataset, constructed_rows: Some(rows) })
        }
    }
}

#[derive(Serialize)]
struct SummaryRow {
    scheme: Scheme,
    name: String,
    gamma: f64,
    delta: f64,
    auc_unwatermarked: f64,
    auc_mean: f64,
    auc_std: f64,
    drop: f64,
}

#[derive(Serialize)]
struct DropFraction {
    scheme: Scheme,
    delta: f64,
    n_cells: usize,
    n_nonnegative: usize,
    fraction_nonnegative: f64,
}

#[derive(Serialize)]
struct Aggregate {
    schema: String,
    keys: Vec<String>,
    n_members: usize,
    n_nonmembers: usize,
    drop_fractions: Vec<DropFraction>,
    rows: Vec<SummaryRow>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    super::ensure_out_dir(cfg)?;
    let setup = prepare(cfg)?;
    let keys = cfg.watermark_keys();
    let options = SuiteOptions {
        min_k_grid: cfg.min_k_grid.clone(),
        smaller_ref_variants: cfg.smaller_ref_variants.clone(),
    };

    let tasks: Vec<(Scheme, f64, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| {
            cfg.gammas
                .iter()
                .flat_map(move |&g| cfg.deltas.iter().map(move |&d| (s, g, d)))
        })
        .collect();
    let results: Vec<Result<Vec<AucResult<f64>>, wmaudit_core::Error>> =
        parallel_map(&tasks, cfg.threads, |_, &(scheme, gamma, delta)| {
            let config = WatermarkConfig { scheme, gamma, delta, key: 0, mode: cfg.mode };
            attack_suite(&setup.model, Some(&config), &setup.dataset, &setup.reference, &keys, &options)
        });

    let mut files = Vec::new();
    let mut manifest = ManifestBuilder::new("mia", cfg);
    manifest.seeds("watermark-key", &keys);

    if let Some(rows) = &setup.constructed_rows {
        let path = super::out_path(cfg, "dataset.jsonl");
        write_dataset(&path, rows)?;
        manifest.file(&path);
        super::print_written(&path);
        files.push(path);
    }

    let wanted = |name: &str| cfg.attacks.iter().any(|a| name.starts_with(a.as_str()));

    // long CSV per scheme: attack,gamma,delta,key,auc,drop
    let mut summary_rows: Vec<SummaryRow> = Vec::new();
    let mut n_members = 0;
    let mut n_nonmembers = 0;
    for &scheme in &cfg.schemes {
        let mut csv = Csv::new(&["attack", "gamma", "delta", "key", "auc", "drop"]);
        for (&(s, gamma, delta), cell) in tasks.iter().zip(&results) {
            if s != scheme {
                continue;
            }
            let cell = match cell {
                Ok(rows) => rows,
                Err(e) => {
                    return Err(CliError::Precondition(format!(
                        "suite failed at (scheme {}, gamma {gamma}, delta {delta}): {e}",
                        s.name()
                    )))
                }
            };
            for row in cell {
                if !wanted(&row.name) {
                    continue;
                }
                n_members = row.n_members;
                n_nonmembers = row.n_nonmembers;
                csv.row(vec![
                    row.name.clone(),
                    num(gamma),
                    num(delta),
                    "unwatermarked".to_string(),
                    num(row.auc_unwatermarked),
                    num(0.0),
                ]);
                for (ki, &auc) in row.per_key.iter().enumerate() {
                    csv.row(vec![
                        row.name.clone(),
                        num(gamma),
                        num(delta),
                        format!("{:016x}", keys[ki]),
                        num(auc),
                        num(row.auc_unwatermarked - auc),
                    ]);
                }
                summary_rows.push(SummaryRow {
                    scheme,
                    name: row.name.clone(),
                    gamma,
                    delta,
                    auc_unwatermarked: row.auc_unwatermarked,
                    auc_mean: row.auc,
                    auc_std: row.auc_std,
                    drop: row.drop,
                });
            }
        }
        let path = super::out_path(cfg, &format!("mia_{}.csv", scheme.name()));
        csv.write(&path)?;
        manifest.file(&path);
        super::print_written(&path);
        files.push(path);
    }

    // summary CSV across schemes
    let mut csv = Csv::new(&[
        "scheme",
        "attack",
        "gamma",
        "delta",
        "auc_unwatermarked",
        "auc_mean",
        "auc_std",
        "drop",
    ]);
    for r in &summary_rows {
        csv.row(vec![
            r.scheme.name().to_string(),
            r.name.clone(),
            num(r.gamma),
            num(r.delta),
            num(r.auc_unwatermarked),
            num(r.auc_mean),
            num(r.auc_std),
            num(r.drop),
        ]);
    }
    let summary_csv = super::out_path(cfg, "mia_summary.csv");
    csv.write(&summary_csv)?;
    manifest.file(&summary_csv);
    super::print_written(&summary_csv);
    files.push(summary_csv);

    // gamma-sweep drop fractions over the key-oblivious attacks
    let mut drop_fractions = Vec::new();
    for &scheme in &cfg.schemes {
        for &delta in &cfg.deltas {
            let cells: Vec<&SummaryRow> = summary_rows
                .iter()
                .filter(|r| {
                    r.scheme == scheme
                        && r.delta == delta
                        && CORE_DROP_ATTACKS.contains(&r.name.as_str())
                })
                .collect();
            if cells.is_empty() {
                continue;
            }
            let nonneg = cells.iter().filter(|r| r.drop >= 0.0).count();
            drop_fractions.push(DropFraction {
                scheme,
                delta,
                n_cells: cells.len(),
                n_nonnegative: nonneg,
                fraction_nonnegative: nonneg as f64 / cells.len() as f64,
            });
        }
    }
    let json_path = super::out_path(cfg, "mia_summary.json");
    wmaudit_core::data::write_json_pretty(
        &json_path,
        &Aggregate {
            schema: "mia.v1".to_string(),
            keys: keys.iter().map(|k| format!("{k:016x}")).collect(),
            n_members,
            n_nonmembers,
            drop_fractions,
            rows: summary_rows,
        },
    )?;
    manifest.file(&json_path);
    super::print_written(&json_path);
    files.push(json_path);

    manifest.write(&cfg.out_dir)?;
    Ok(files)
}
