//! Attack-suite evaluation: every attack on the plain and watermarked model
//! variants, aggregated over watermark keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ngram::{per_token_logprobs, NGramModel, TokenDistribution};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::vocab::TokenSeq;
use crate::watermark::{Watermarked, WatermarkConfig};

use super::attacks::{adjusted_logprobs, deflate_bits, ln_ppl_from_logprobs, min_k_mean, MinKSpace, MIN_K_GRID};
use super::auc::auc;
use super::{Attack, LabeledSample};

/// How the smaller reference model is treated when the target is watermarked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallerRefVariant {
    /// Plain reference model.
    Unwatermarked,
    /// Reference watermarked with the same strength but a different key.
    DifferentKey,
    /// Reference watermarked with half the strength and a different key.
    DifferentStrength,
}

impl SmallerRefVariant {
    pub fn name(self) -> &'static str {
        match self {
            SmallerRefVariant::Unwatermarked => "ref_unwatermarked",
            SmallerRefVariant::DifferentKey => "ref_different_key",
            SmallerRefVariant::DifferentStrength => "ref_different_strength",
        }
    }
}

/// Derived key for a watermarked reference model.
fn reference_key(target_key: u64) -> u64 {
    derive_seed(target_key, "smaller-ref-key", 0)
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub min_k_grid: Vec<f64>,
    pub smaller_ref_variants: Vec<SmallerRefVariant>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            min_k_grid: MIN_K_GRID.to_vec(),
            smaller_ref_variants: vec![SmallerRefVariant::Unwatermarked],
        }
    }
}

/// Best-AUC min-K selection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MinKBest<T: Scalar> {
    pub k_percent: f64,
    pub auc: T,
}

/// One attack's AUC evaluation: baseline, per-key watermarked values, and the
/// drop `auc_unwatermarked - mean(per_key)`.
#[derive(Debug, Clone, Serialize)]
pub struct AucResult<T: Scalar> {
    pub attack: Attack,
    pub variant: Option<SmallerRefVariant>,
    /// Stable row name (`ppl`, `smaller_ref:ref_different_key`, ...).
    pub name: String,
    /// Mean watermarked AUC over keys (equals the baseline when the suite
    /// runs without a watermark).
    pub auc: T,
    pub auc_std: T,
    pub auc_unwatermarked: T,
    pub drop: T,
    pub per_key: Vec<T>,
    pub keys: Vec<u64>,
    pub n_members: usize,
    pub n_nonmembers: usize,
    pub k_percent_unwatermarked: Option<f64>,
    pub k_percent_per_key: Option<Vec<f64>>,
}

/// Per-sample per-token log-probabilities under one model variant.
struct Pass<T> {
    lps: Vec<Vec<T>>,
}

fn compute_pass<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    samples: &[&TokenSeq],
) -> Result<Pass<T>> {
    let lps = samples
        .iter()
        .map(|s| per_token_logprobs(model, s, 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Pass { lps })
}

/// Scores split into member/non-member sides following `is_member`.
fn split_scores<T: Scalar>(scores: Vec<T>, is_member: &[bool]) -> (Vec<T>, Vec<T>) {
    let mut members = Vec::new();
    let mut nonmembers = Vec::new();
    for (s, &m) in scores.into_iter().zip(is_member) {
        if m {
            members.push(s);
        } else {
            nonmembers.push(s);
        }
    }
    (members, nonmembers)
}

fn auc_of<T: Scalar>(scores: Vec<T>, is_member: &[bool]) -> Result<T> {
    let (m, n) = split_scores(scores, is_member);
    auc(&m, &n)
}

fn ppl_scores<T: Scalar>(pass: &Pass<T>) -> Vec<T> {
    pass.lps.iter().map(|lps| -ln_ppl_from_logprobs(lps)).collect()
}

fn ratio_scores<T: Scalar>(target: &Pass<T>, base: &Pass<T>) -> Vec<T> {
    target
        .lps
        .iter()
        .zip(&base.lps)
        .map(|(t, b)| {
            let s = -(ln_ppl_from_logprobs(t) / ln_ppl_from_logprobs(b));
            if s.is_nan() {
                T::zero()
            } else {
                s
            }
        })
        .collect()
}

fn zlib_scores<T: Scalar>(pass: &Pass<T>, bits: &[u64]) -> Vec<T> {
    pass.lps
        .iter()
        .zip(bits)
        .map(|(lps, &b)| -(ln_ppl_from_logprobs(lps) / T::of_u64(b)))
        .collect()
}

/// Grid-tuned min-K over precomputed (possibly adjusted) log-probabilities.
/// Grid points too small for the shortest sample (`floor(n * K%) == 0`) are
/// skipped; at least one point must remain.
fn best_min_k_over<T: Scalar>(
    lps: &[Vec<T>],
    is_member: &[bool],
    grid: &[f64],
) -> Result<MinKBest<T>> {
    let mut best: Option<MinKBest<T>> = None;
    for &k in grid {
        let mut scores = Vec::with_capacity(lps.len());
        let mut applicable = true;
        for l in lps {
            match min_k_mean(l, k, MinKSpace::LogProb) {
                Ok(s) => scores.push(s),
                Err(Error::InvalidKPercent(_)) => {
                    applicable = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !applicable {
            continue;
        }
        let a = auc_of(scores, is_member)?;
        let better = match &best {
            None => true,
            Some(b) => a > b.auc,
        };
        if better {
            best = Some(MinKBest { k_percent: k, auc: a });
        }
    }
    best.ok_or(Error::InvalidKPercent(f64::NAN))
}

/// Best-over-grid min-K AUC of a model on a labeled dataset.
pub fn best_min_k<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    dataset: &[LabeledSample],
) -> Result<MinKBest<T>> {
    let (samples, is_member) = dataset_views(dataset)?;
    let pass = compute_pass(model, &samples)?;
    best_min_k_over(&pass.lps, &is_member, &MIN_K_GRID)
}

/// Best-over-grid watermark-aware min-K AUC.
pub fn best_adaptive_min_k<T: Scalar, M: TokenDistribution<T>>(
    model: &Watermarked<'_, T, M>,
    config: &WatermarkConfig,
    dataset: &[LabeledSample],
) -> Result<MinKBest<T>> {
    if model.config() != config {
        return Err(Error::ConfigMismatch(format!(
            "attacker config {config:?} != model config {:?}",
            model.config()
        )));
    }
    let (samples, is_member) = dataset_views(dataset)?;
    let pass = compute_pass(model, &samples)?;
    let delta = T::of(config.delta);
    let adj: Vec<Vec<T>> = samples
        .iter()
        .zip(&pass.lps)
        .map(|(s, lps)| adjusted_logprobs(lps, &model.green_flags(&s.ids), delta))
        .collect();
    best_min_k_over(&adj, &is_member, &MIN_K_GRID)
}

fn dataset_views(dataset: &[LabeledSample]) -> Result<(Vec<&TokenSeq>, Vec<bool>)> {
    if dataset.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let samples: Vec<&TokenSeq> = dataset.iter().map(|s| &s.tokens).collect();
    let is_member: Vec<bool> = dataset.iter().map(|s| s.is_member()).collect();
    if is_member.iter().all(|&m| m) || is_member.iter().all(|&m| !m) {
        return Err(Error::EmptyScoreSide);
    }
    Ok((samples, is_member))
}

/// Baseline (unwatermarked) AUCs per attack, evaluated once.
struct Baseline<T: Scalar> {
    ppl: T,
    lowercase: T,
    zlib: T,
    smaller_ref: T,
    min_k: MinKBest<T>,
}

/// Runs every attack against the plain model and, when `watermark` is given,
/// against the watermarked model under each key; reports mean, std, and the
/// drop per attack. Without a watermark each row repeats the baseline with a
/// drop of exactly zero.
pub fn attack_suite<T: Scalar>(
    model: &NGramModel<T>,
    watermark: Option<&WatermarkConfig>,
    dataset: &[LabeledSample],
    reference: &NGramModel<T>,
    keys: &[u64],
    options: &SuiteOptions,
) -> Result<Vec<AucResult<T>>> {
    let (samples, is_member) = dataset_views(dataset)?;
    let n_members = is_member.iter().filter(|&&m| m).count();
    let n_nonmembers = is_member.len() - n_members;
    let bits: Vec<u64> = samples.iter().map(|s| deflate_bits(&s.source_text)).collect();
    let lowered: Vec<TokenSeq> =
        samples.iter().map(|s| s.lowercased(model.vocab())).collect();
    let lowered_refs: Vec<&TokenSeq> = lowered.iter().collect();

    let plain = compute_pass(model, &samples)?;
    let plain_low = compute_pass(model, &lowered_refs)?;
    let plain_ref = compute_pass(reference, &samples)?;

    let baseline = Baseline {
        ppl: auc_of(ppl_scores(&plain), &is_member)?,
        lowercase: auc_of(ratio_scores(&plain, &plain_low), &is_member)?,
        zlib: auc_of(zlib_scores(&plain, &bits), &is_member)?,
        smaller_ref: auc_of(ratio_scores(&plain, &plain_ref), &is_member)?,
        min_k: best_min_k_over(&plain.lps, &is_member, &options.min_k_grid)?,
    };
    // with no watermark, the adaptive correction is the identity
    let baseline_adaptive = baseline.min_k;

    struct PerKey<T: Scalar> {
        ppl: T,
        lowercase: T,
        zlib: T,
        min_k: MinKBest<T>,
        adaptive: MinKBest<T>,
        smaller_ref: Vec<T>,
    }

    let mut per_key: Vec<PerKey<T>> = Vec::new();
    let mut used_keys: Vec<u64> = Vec::new();
    if let Some(base_cfg) = watermark {
        if keys.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        for &key in keys {
            let cfg = base_cfg.with_key(key);
            let wm = Watermarked::new(model, &cfg)?;
            let wm_pass = compute_pass(&wm, &samples)?;
            let wm_low = compute_pass(&wm, &lowered_refs)?;
            let delta = T::of(cfg.delta);
            let adj: Vec<Vec<T>> = samples
                .iter()
                .zip(&wm_pass.lps)
                .map(|(s, lps)| adjusted_logprobs(lps, &wm.green_flags(&s.ids), delta))
                .collect();
            let mut smaller_ref = Vec::with_capacity(options.smaller_ref_variants.len());
            for &variant in &options.smaller_ref_variants {
                let ref_pass = match variant {
                    SmallerRefVariant::Unwatermarked => compute_pass(reference, &samples)?,
                    SmallerRefVariant::DifferentKey => {
                        let rcfg = cfg.with_key(reference_key(key));
                        let rwm = Watermarked::new(reference, &rcfg)?;
                        compute_pass(&rwm, &samples)?
                    }
                    SmallerRefVariant::DifferentStrength => {
                        let mut rcfg = cfg.with_key(reference_key(key));
                        rcfg.delta = cfg.delta / 2.0;
                        let rwm = Watermarked::new(reference, &rcfg)?;
                        compute_pass(&rwm, &samples)?
                    }
                };
                smaller_ref.push(auc_of(ratio_scores(&wm_pass, &ref_pass), &is_member)?);
            }
            per_key.push(PerKey {
                ppl: auc_of(ppl_scores(&wm_pass), &is_member)?,
                lowercase: auc_of(ratio_scores(&wm_pass, &wm_low), &is_member)?,
                zlib: auc_of(zlib_scores(&wm_pass, &bits), &is_member)?,
                min_k: best_min_k_over(&wm_pass.lps, &is_member, &options.min_k_grid)?,
                adaptive: best_min_k_over(&adj, &is_member, &options.min_k_grid)?,
                smaller_ref,
            });
            used_keys.push(key);
        }
    }

    let assemble = |attack: Attack,
                    variant: Option<SmallerRefVariant>,
                    baseline_auc: T,
                    per_key_auc: Vec<T>,
                    k_unwm: Option<f64>,
                    k_keys: Option<Vec<f64>>|
     -> AucResult<T> {
        let (mean, std, per_key_auc) = if per_key_auc.is_empty() {
            (baseline_auc, T::zero(), vec![baseline_auc])
        } else {
            let k = T::of_usize(per_key_auc.len());
            let mean = per_key_auc.iter().cloned().sum::<T>() / k;
            let std = if per_key_auc.len() > 1 {
                let var = per_key_auc
                    .iter()
                    .map(|&a| (a - mean) * (a - mean))
                    .sum::<T>()
                    / (k - T::one());
                var.sqrt()
            } else {
                T::zero()
            };
            (mean, std, per_key_auc)
        };
        let name = match variant {
            Some(v) => format!("{}:{}", attack.name(), v.name()),
            None => attack.name().to_string(),
        };
        AucResult {
            attack,
            variant,
            name,
            auc: mean,
            auc_std: std,
            auc_unwatermarked: baseline_auc,
            drop: baseline_auc - mean,
            per_key: per_key_auc,
            keys: used_keys.clone(),
            n_members,
            n_nonmembers,
            k_percent_unwatermarked: k_unwm,
            k_percent_per_key: k_keys,
        }
    };

    let mut rows = Vec::new();
    rows.push(assemble(
        Attack::Ppl,
        None,
        baseline.ppl,
        per_key.iter().map(|k| k.ppl).collect(),
        None,
        None,
    ));
    rows.push(assemble(
        Attack::Lowercase,
        None,
        baseline.lowercase,
        per_key.iter().map(|k| k.lowercase).collect(),
        None,
        None,
    ));
    rows.push(assemble(
        Attack::Zlib,
        None,
        baseline.zlib,
        per_key.iter().map(|k| k.zlib).collect(),
        None,
        None,
    ));
    rows.push(assemble(
        Attack::MinK,
        None,
        baseline.min_k.auc,
        per_key.iter().map(|k| k.min_k.auc).collect(),
        Some(baseline.min_k.k_percent),
        Some(per_key.iter().map(|k| k.min_k.k_percent).collect()),
    ));
    rows.push(assemble(
        Attack::AdaptiveMinK,
        None,
        baseline_adaptive.auc,
        per_key.iter().map(|k| k.adaptive.auc).collect(),
        Some(baseline_adaptive.k_percent),
        Some(per_key.iter().map(|k| k.adaptive.k_percent).collect()),
    ));
    for (vi, &variant) in options.smaller_ref_variants.iter().enumerate() {
        rows.push(assemble(
            Attack::SmallerRef,
            Some(variant),
            baseline.smaller_ref,
            per_key.iter().map(|k| k.smaller_ref[vi]).collect(),
            None,
            None,
        ));
    }
    Ok(rows)
}
