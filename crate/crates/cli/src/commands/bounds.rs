//! `wmaudit bounds`: closed-form generation bounds plus their verifiers.
//!
//! Prints the hard trial bound for the given (m, T, n, gamma), the soft
//! guarantee pieces (confidence ceiling, bias threshold, reduction factor,
//! trial bound), then runs the hard-bound Monte-Carlo check on a built-in
//! toy model and the closed-form soft-reduction check on random admissible
//! instances. Exit codes: 2 when a hypothesis or precondition is violated,
//! 3 when a verifier observes a violation.

use std::path::PathBuf;

use serde::Serialize;
use wmaudit_core::ngram::{train_ngram, TokenDistribution};
use wmaudit_core::sample::{generate_ids, GenMode};
use wmaudit_core::seed::derive_seed;
use wmaudit_core::theory::{
    confidence_ratio_limit, hard_trial_bound, soft_delta_threshold, soft_reduction_factor,
    soft_trial_bound, verify_hard_bound, verify_soft_reduction, BoundCheckReport,
    HardBoundInstance, SoftmaxInstance,
};
use wmaudit_core::vocab::TokenSeq;

use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct BoundsArgs {
    /// Number of protected texts m.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub m_count: u64,
    /// Generation attempts T.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub t_trials: u64,
    /// Tokens per text n.
    #[arg(long, default_value_t = 100)]
    pub n_len: usize,
    /// Green fraction.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Confidence epsilon in (0, 1/4).
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Lower bound on the exp-logit ratios x/a.
    #[arg(long, default_value_t = 0.1)]
    pub m_conf: f64,
    /// Soft bias; defaults to the threshold + 1.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Monte-Carlo trials for the hard-bound verifier.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Where to write bounds.json (defaults to the current directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct BoundsOutput {
    schema: String,
    hard_trial_bound_sci: String,
    confidence_ratio_limit: f64,
    soft_delta_threshold: f64,
    delta_used: f64,
    soft_reduction_factor_sci: String,
    soft_trial_bound_sci: String,
    reports: Vec<BoundCheckReport<f64>>,
}

/// Monte-Carlo scale for the built-in toy check: the closed-form arguments
/// may be astronomically large, the simulated set stays desk-sized.
fn mc_scale(args: &BoundsArgs) -> (usize, usize) {
    let m = (args.m_count as usize).min(10);
    let n = args.n_len.min(8);
    (m, n)
}

pub fn run(args: &BoundsArgs) -> Result<(), CliError> {
    let inst = HardBoundInstance {
        m_count: args.m_count,
        n_len: args.n_len,
        t_trials: args.t_trials,
        gamma: args.gamma,
    };
    let hard = hard_trial_bound::<f64>(&inst)?;
    println!(
        "hard trial bound  m*T*gamma^n (m={}, T={}, n={}, gamma={}) = {}",
        args.m_count,
        args.t_trials,
        args.n_len,
        args.gamma,
        hard.to_sci()
    );

    let m_limit = confidence_ratio_limit(args.epsilon)?;
    let threshold = soft_delta_threshold(args.epsilon, args.m_conf)?;
    let delta = match args.delta {
        Some(d) => {
            if d <= threshold {
                return Err(CliError::Precondition(format!(
                    "delta {d} must exceed the threshold {threshold}"
                )));
            }
            d
        }
        None => threshold + 1.0,
    };
    let reduction = soft_reduction_factor(args.epsilon, args.n_len)?;
    let soft_bound = soft_trial_bound(args.epsilon, args.n_len, args.m_count, args.t_trials)?;
    println!("confidence limit  M = (1-4e)/(1+4e)                  = {m_limit:.6}");
    println!("bias threshold    ln((1-2e(m+1))/(2em)) (m={})     = {threshold:.6}", args.m_conf);
    println!("delta used                                           = {delta:.6}");
    println!("soft reduction    (1+2e/(2e+1))^n                    = {}", reduction.to_sci());
    println!("soft trial bound  m*T*((2e+1)/(4e+1))^n              = {}", soft_bound.to_sci());

    // hard-bound Monte Carlo on a built-in toy model
    let (mc_m, mc_n) = mc_scale(args);
    let corpus = wmaudit_core::synth::synth_corpus(derive_seed(args.seed, "bounds-corpus", 0), 30, 24, 24);
    let model = train_ngram::<f64>(&corpus, 2, 0.5, None)
        .map_err(|e| CliError::Precondition(e.to_string()))?;
    let mut texts: Vec<TokenSeq> = Vec::new();
    let mut draw = 0u64;
    while texts.len() < mc_m {
        let ids = generate_ids(
            &model,
            &[],
            mc_n,
            GenMode::Multinomial,
            derive_seed(args.seed, "bounds-text", draw),
        );
        draw += 1;
        let seq = TokenSeq::from_ids(model.vocab(), ids);
        if !texts.contains(&seq) {
            texts.push(seq);
        }
    }
    let key = derive_seed(args.seed, "bounds-key", 0);
    let hard_report = verify_hard_bound(
        &model,
        &texts,
        args.gamma,
        key,
        args.trials,
        derive_seed(args.seed, "bounds-mc", 0),
    )?;
    println!(
        "verify hard bound  [{}] {} (m={mc_m}, n={mc_n}, T={})",
        if hard_report.pass { "pass" } else { "FAIL" },
        hard_report.note,
        args.trials
    );

    // soft-reduction check on random admissible instances
    let mut reports = vec![hard_report];
    let soft_n = args.n_len.clamp(1, 20);
    let mut soft_pass = true;
    for i in 0..100u64 {
        let instance = SoftmaxInstance::sample_with_floor(
            args.epsilon,
            soft_n,
            derive_seed(args.seed, "soft-instance", i),
            Some(args.m_conf),
        )?;
        let report = verify_soft_reduction(&instance, delta)?;
        soft_pass &= report.pass;
        if i == 0 || !report.pass {
            reports.push(report);
        }
    }
    println!(
        "verify soft reduction  [{}] 100 random instances (n={soft_n}, eps={}, delta={delta:.4})",
        if soft_pass { "pass" } else { "FAIL" },
        args.epsilon
    );

    let all_pass = reports.iter().all(|r| r.pass) && soft_pass;
    let out = BoundsOutput {
        schema: "bounds.v1".to_string(),
        hard_trial_bound_sci: hard.to_sci(),
        confidence_ratio_limit: m_limit,
        soft_delta_threshold: threshold,
        delta_used: delta,
        soft_reduction_factor_sci: reduction.to_sci(),
        soft_trial_bound_sci: soft_bound.to_sci(),
        reports,
    };
    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Usage(format!("cannot create {dir:?}: {e}")))?;
    let path = dir.join("bounds.json");
    wmaudit_core::data::write_json_pretty(&path, &out)?;
    super::print_written(&path);

    if all_pass {
        Ok(())
    } else {
        Err(CliError::VerifierFailed("a bound verifier observed a violation".to_string()))
    }
}
