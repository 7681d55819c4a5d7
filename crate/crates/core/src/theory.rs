//! Closed-form generation-probability bounds for hard and soft watermarks,
//! with Monte-Carlo and closed-form verifiers.
//!
//! Hard mode: with green fraction `gamma` and per-step masks treated as
//! independent uniform partitions, a fixed `n`-token text survives only if
//! every token lands green, so `P(text) < gamma^n` and the chance of emitting
//! any of `m` texts within `T` trials is below `m * T * gamma^n` (two
//! applications of Bernoulli's inequality).
//!
//! Soft mode: per token, write the softmax as `a / (d + a)` unwatermarked and
//! split `d` into red/green masses `b' + c' = b'' + c'' = d` for the cases
//! where the true token is green or red. If every ratio `x/a` stays below
//! `M = (1 - 4*eps) / (1 + 4*eps)`, then the unwatermarked token probability
//! exceeds `1/2 + 2*eps`, and any bias above the threshold
//! `ln((1 - 2*eps*(m_conf + 1)) / (2*eps*m_conf))` pins the expected
//! watermarked probability (green/red averaged with weight 1/2 at
//! `gamma = 0.5`) below `1/2 + eps`, cutting the sequence probability by at
//! least `(1 + 2*eps/(2*eps + 1))^n`. The two symbols both written as "m"
//! elsewhere are split here into `m_count` (number of protected texts) and
//! `m_conf` (the lower bound on `x/a`).

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::logspace::LogValue;
use crate::ngram::TokenDistribution;
use crate::sample::{generate_ids, GenMode};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, SplitMix64};
use crate::vocab::TokenSeq;
use crate::watermark::{Mode, Scheme, Watermarked, WatermarkConfig};

/// Inputs to the hard-watermark trial bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HardBoundInstance {
    /// Number of protected texts.
    pub m_count: u64,
    /// Tokens per text.
    pub n_len: usize,
    /// Generation attempts.
    pub t_trials: u64,
    /// Green fraction.
    pub gamma: f64,
}

impl HardBoundInstance {
    pub fn validate(&self) -> Result<()> {
        if self.m_count == 0 || self.t_trials == 0 || self.n_len == 0 {
            return Err(Error::BoundHypothesis(
                "m_count, t_trials, and n_len must all be >= 1".to_string(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidGamma(self.gamma));
        }
        // hypothesis: m * gamma^n < 1, checked in log space
        let ln_m_gamma_n = (self.m_count as f64).ln() + self.n_len as f64 * self.gamma.ln();
        if ln_m_gamma_n >= 0.0 {
            return Err(Error::BoundHypothesis(format!(
                "m_count * gamma^n_len must be < 1; got ln(m*gamma^n) = {ln_m_gamma_n:.6} >= 0"
            )));
        }
        Ok(())
    }
}

/// `m * T * gamma^n` in log space.
pub fn hard_trial_bound<T: Scalar>(inst: &HardBoundInstance) -> Result<LogValue<T>> {
    inst.validate()?;
    let ln = (inst.m_count as f64).ln()
        + (inst.t_trials as f64).ln()
        + inst.n_len as f64 * inst.gamma.ln();
    Ok(LogValue::from_ln(T::of(ln)))
}

/// Outcome of a bound verification. For Monte-Carlo checks `pass` means
/// `empirical <= bound + 3 sigma`; for the soft-reduction check it means the
/// achieved reduction meets the required one (and every per-token inequality
/// held). `note` spells out which rule was applied.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheckReport<T: Scalar> {
    pub check: String,
    pub bound: LogValue<T>,
    pub empirical: LogValue<T>,
    pub trials: u64,
    pub pass: bool,
    pub note: String,
}

/// Runs `trials` hard-watermarked generations of length `n` and checks the
/// per-trial hit frequency against the per-trial bound `m * gamma^n` with
/// 3-sigma binomial slack. (The `T`-trial bound follows by the union bound,
/// so verifying the per-trial form verifies the trial bound without the
/// vacuous factor of `T`.)
pub fn verify_hard_bound<T: Scalar, M: TokenDistribution<T>>(
    model: &M,
    copyrighted: &[TokenSeq],
    gamma: f64,
    key: u64,
    trials: u64,
    rng_seed: u64,
) -> Result<BoundCheckReport<T>> {
    if copyrighted.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if trials == 0 {
        return Err(Error::BoundHypothesis("trials must be >= 1".to_string()));
    }
    let n = copyrighted[0].ids.len();
    if n == 0 || copyrighted.iter().any(|s| s.ids.len() != n) {
        return Err(Error::LengthMismatch(
            "all protected texts must share a fixed non-zero length".to_string(),
        ));
    }
    let m = copyrighted.len() as u64;
    HardBoundInstance { m_count: m, n_len: n, t_trials: trials, gamma }.validate()?;

    let config = WatermarkConfig { scheme: Scheme::Umd, gamma, delta: 0.0, key, mode: Mode::Hard };
    let wm = Watermarked::new(model, &config)?;
    let set: HashSet<&[u32]> = copyrighted.iter().map(|s| s.ids.as_slice()).collect();
    let mut hits = 0u64;
    for t in 0..trials {
        let ids = generate_ids(&wm, &[], n, GenMode::Multinomial, derive_seed(rng_seed, "hard-bound-trial", t));
        if set.contains(ids.as_slice()) {
            hits += 1;
        }
    }
    let per_trial_bound = (m as f64) * gamma.powi(n as i32);
    let freq = hits as f64 / trials as f64;
    let sigma = (per_trial_bound * (1.0 - per_trial_bound) / trials as f64).sqrt();
    let pass = freq <= per_trial_bound + 3.0 * sigma;
    let empirical = if hits == 0 {
        LogValue::zero()
    } else {
        LogValue::from_value(T::of(freq))
    };
    Ok(BoundCheckReport {
        check: "hard-bound-generation".to_string(),
        bound: LogValue::from_ln(T::of(per_trial_bound.ln())),
        empirical,
        trials,
        pass,
        note: format!(
            "per-trial hit frequency {freq:.3e} vs m*gamma^n = {per_trial_bound:.3e} \
             (+3 sigma = {:.3e}); trial-level bound m*T*gamma^n = {:.3e}",
            per_trial_bound + 3.0 * sigma,
            (m * trials) as f64 * gamma.powi(n as i32),
        ),
    })
}

/// Confidence ceiling `M = (1 - 4*eps) / (1 + 4*eps)`.
pub fn confidence_ratio_limit<T: Scalar>(epsilon: T) -> Result<T> {
    check_epsilon(epsilon)?;
    let four = T::of(4.0);
    Ok((T::one() - four * epsilon) / (T::one() + four * epsilon))
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<()> {
    if !(epsilon > T::zero() && epsilon < T::of(0.25)) {
        return Err(Error::ConfidencePrecondition {
            token: None,
            detail: format!("epsilon must lie in (0, 1/4), got {epsilon}"),
        });
    }
    Ok(())
}

/// Bias threshold `ln((1 - 2*eps*(m_conf + 1)) / (2*eps*m_conf))`; any delta
/// above it triggers the soft-reduction guarantee.
pub fn soft_delta_threshold<T: Scalar>(epsilon: T, m_conf: T) -> Result<T> {
    check_epsilon(epsilon)?;
    if !(m_conf > T::zero()) {
        return Err(Error::ConfidencePrecondition {
            token: None,
            detail: format!("m_conf must be > 0, got {m_conf}"),
        });
    }
    let two_eps = T::of(2.0) * epsilon;
    let numerator = T::one() - two_eps * (m_conf + T::one());
    if !(numerator > T::zero()) {
        return Err(Error::ConfidencePrecondition {
            token: None,
            detail: format!(
                "1 - 2*eps*(m_conf + 1) must be positive (eps = {epsilon}, m_conf = {m_conf})"
            ),
        });
    }
    Ok((numerator / (two_eps * m_conf)).ln())
}

/// Guaranteed reduction `(1 + 2*eps/(2*eps + 1))^n` in log space.
pub fn soft_reduction_factor<T: Scalar>(epsilon: T, n: usize) -> Result<LogValue<T>> {
    check_epsilon(epsilon)?;
    let two_eps = T::of(2.0) * epsilon;
    let per_token = (T::one() + two_eps / (two_eps + T::one())).ln();
    Ok(LogValue::from_ln(T::of_usize(n) * per_token))
}

/// Trial bound for the soft scheme: `m * T * ((2*eps + 1)/(4*eps + 1))^n`.
pub fn soft_trial_bound<T: Scalar>(
    epsilon: T,
    n: usize,
    m_count: u64,
    t_trials: u64,
) -> Result<LogValue<T>> {
    check_epsilon(epsilon)?;
    if m_count == 0 || t_trials == 0 {
        return Err(Error::BoundHypothesis("m_count and t_trials must be >= 1".to_string()));
    }
    let two_eps = T::of(2.0) * epsilon;
    let four_eps = T::of(4.0) * epsilon;
    let ln = T::of((m_count as f64).ln())
        + T::of((t_trials as f64).ln())
        + T::of_usize(n) * ((two_eps + T::one()) / (four_eps + T::one())).ln();
    Ok(LogValue::from_ln(ln))
}

/// One token's softmax decomposition. `a` is the exp-logit of the true token;
/// `d` the exp-logit mass of all other tokens. `b_*`/`c_*` split `d` into
/// red/green mass for the two cases (true token green vs red):
/// `b_green_case + c_green_case = b_red_case + c_red_case = d`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SoftmaxTerm<T: Scalar> {
    pub a: T,
    pub d: T,
    /// Red-list mass among the other tokens when the true token is green.
    pub b_green_case: T,
    /// Green-list mass among the other tokens when the true token is green.
    pub c_green_case: T,
    /// Red-list mass among the other tokens when the true token is red.
    pub b_red_case: T,
    /// Green-list mass among the other tokens when the true token is red.
    pub c_red_case: T,
}

/// A synthetic per-token softmax decomposition for soft-bound verification.
#[derive(Debug, Clone, Serialize)]
pub struct SoftmaxInstance<T: Scalar> {
    pub epsilon: T,
    pub terms: Vec<SoftmaxTerm<T>>,
}

impl<T: Scalar> SoftmaxInstance<T> {
    /// Checks positivity, the mass splits, and the confidence condition
    /// `x/a < M` for every component of every token.
    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.terms.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let m_big = confidence_ratio_limit(self.epsilon)?;
        let tol = T::of(1e-9);
        for (i, t) in self.terms.iter().enumerate() {
            let components =
                [t.d, t.b_green_case, t.c_green_case, t.b_red_case, t.c_red_case];
            if !(t.a > T::zero()) || components.iter().any(|&x| !(x > T::zero())) {
                return Err(Error::ConfidencePrecondition {
                    token: Some(i),
                    detail: "all masses must be strictly positive".to_string(),
                });
            }
            for &x in &components {
                if !(x / t.a < m_big) {
                    return Err(Error::ConfidencePrecondition {
                        token: Some(i),
                        detail: format!("x/a = {} not below M = {m_big}", x / t.a),
                    });
                }
            }
            let g = (t.b_green_case + t.c_green_case - t.d).abs();
            let r = (t.b_red_case + t.c_red_case - t.d).abs();
            if g > tol * t.d || r > tol * t.d {
                return Err(Error::ConfidencePrecondition {
                    token: Some(i),
                    detail: "b + c must equal d in both cases".to_string(),
                });
            }
        }
        Ok(())
    }

    /// Least `x/a` over all tokens and components: the proof's confidence
    /// floor `m_conf`.
    pub fn m_conf(&self) -> T {
        let mut m = T::infinity();
        for t in &self.terms {
            for x in [t.d, t.b_green_case, t.c_green_case, t.b_red_case, t.c_red_case] {
                m = m.min(x / t.a);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Random admissible instance. With `m_floor` set, every `x/a` stays at
    /// or above it (so a delta above `soft_delta_threshold(eps, m_floor)`
    /// works for the whole instance).
    pub fn sample_with_floor(
        epsilon: T,
        n: usize,
        seed: u64,
        m_floor: Option<T>,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        if n == 0 {
            return Err(Error::EmptySampleSet);
        }
        let m_big = confidence_ratio_limit(epsilon)?;
        let floor = m_floor.unwrap_or(m_big * T::of(0.02));
        if !(floor > T::zero() && T::of(2.5) * floor < T::of(0.95) * m_big) {
            return Err(Error::ConfidencePrecondition {
                token: None,
                detail: format!("m_floor {floor} too large for epsilon {epsilon}"),
            });
        }
        let mut rng = SplitMix64::new(seed);
        let mut uniform = |lo: T, hi: T| lo + (hi - lo) * T::of(rng.next_f64());
        let mut terms = Vec::with_capacity(n);
        for _ in 0..n {
            let a = uniform(T::of(0.5), T::of(2.0));
            let da = uniform(T::of(2.5) * floor, T::of(0.95) * m_big);
            let d = a * da;
            let share_min = (floor / da) * T::of(1.05);
            let sg = uniform(share_min, T::one() - share_min);
            let sr = uniform(share_min, T::one() - share_min);
            terms.push(SoftmaxTerm {
                a,
                d,
                b_green_case: d * sg,
                c_green_case: d * (T::one() - sg),
                b_red_case: d * sr,
                c_red_case: d * (T::one() - sr),
            });
        }
        Ok(Self { epsilon, terms })
    }

    pub fn sample(epsilon: T, n: usize, seed: u64) -> Result<Self> {
        Self::sample_with_floor(epsilon, n, seed, None)
    }
}

/// Closed-form verification of the soft-watermark reduction on one instance.
///
/// Per token it computes the unwatermarked probability `a/(d+a)` and the
/// expected watermarked probability (green and red case averaged with weight
/// 1/2), asserts `p_unwm > 1/2 + 2*eps` and `p_wm < 1/2 + eps`, and finally
/// that the product ratio meets [`soft_reduction_factor`]. A delta at or
/// below the instance threshold is a precondition error, not a violation.
pub fn verify_soft_reduction<T: Scalar>(
    inst: &SoftmaxInstance<T>,
    delta: T,
) -> Result<BoundCheckReport<T>> {
    inst.validate()?;
    let eps = inst.epsilon;
    let threshold = soft_delta_threshold(eps, inst.m_conf())?;
    if !(delta > threshold) {
        return Err(Error::ConfidencePrecondition {
            token: None,
            detail: format!("delta {delta} must exceed the threshold {threshold}"),
        });
    }
    let half = T::of(0.5);
    let exp_neg_delta = (-delta).exp();
    let exp_delta = delta.exp();
    let mut ln_unwm = T::zero();
    let mut ln_wm = T::zero();
    let mut ok = true;
    let mut note = String::new();
    for (i, t) in inst.terms.iter().enumerate() {
        let p_unwm = t.a / (t.d + t.a);
        // green case rewritten as a / (b'*e^-delta + c' + a): stable for any delta
        let p_green = t.a / (t.b_green_case * exp_neg_delta + t.c_green_case + t.a);
        let p_red = t.a / (t.b_red_case + t.c_red_case * exp_delta + t.a);
        let p_wm = half * (p_green + p_red);
        if !(p_unwm > half + T::of(2.0) * eps) {
            ok = false;
            note = format!("token {i}: p_unwm {p_unwm} not above 1/2 + 2*eps");
        }
        if !(p_wm < half + eps) {
            ok = false;
            note = format!("token {i}: expected p_wm {p_wm} not below 1/2 + eps");
        }
        ln_unwm += p_unwm.ln();
        ln_wm += p_wm.ln();
    }
    let required = soft_reduction_factor(eps, inst.terms.len())?;
    let achieved = LogValue::from_ln(ln_unwm - ln_wm);
    let pass = ok && achieved.ln >= required.ln;
    if note.is_empty() {
        note = format!(
            "achieved reduction {} vs required {} over {} tokens",
            achieved.to_sci(),
            required.to_sci(),
            inst.terms.len()
        );
    }
    Ok(BoundCheckReport {
        check: "soft-reduction".to_string(),
        bound: required,
        empirical: achieved,
        trials: 0,
        pass,
        note,
    })
}
