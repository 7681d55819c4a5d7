//! Membership-inference attacks and their evaluation.
//!
//! Every attack emits a score oriented "higher means more likely member", so
//! ROC-AUC is comparable across attacks. Scores derived from perplexities
//! are negated accordingly.

mod attacks;
mod auc;
mod suite;

pub use attacks::{
    deflate_bits, min_k_mean, score_adaptive_min_k, score_lowercase, score_min_k,
    score_min_k_in, score_ppl, score_smaller_ref, score_zlib, MinKSpace, MIN_K_GRID,
};
pub use auc::auc;
pub use suite::{attack_suite, best_adaptive_min_k, best_min_k, AucResult, MinKBest, SmallerRefVariant, SuiteOptions};

use serde::Serialize;

use crate::scalar::Scalar;
use crate::vocab::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Member,
    NonMember,
}

/// A tokenized text with its ground-truth membership label.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub tokens: TokenSeq,
    pub label: Label,
}

impl LabeledSample {
    pub fn is_member(&self) -> bool {
        self.label == Label::Member
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attack {
    Ppl,
    SmallerRef,
    Lowercase,
    Zlib,
    MinK,
    AdaptiveMinK,
}

impl Attack {
    pub fn name(self) -> &'static str {
        match self {
            Attack::Ppl => "ppl",
            Attack::SmallerRef => "smaller_ref",
            Attack::Lowercase => "lowercase",
            Attack::Zlib => "zlib",
            Attack::MinK => "min_k",
            Attack::AdaptiveMinK => "adaptive_min_k",
        }
    }
}

/// A single attack score. `flagged` marks degenerate inputs (an exactly-zero
/// probability or an exactly-1 reference perplexity); flagged scores stay
/// rankable (`±inf`), never NaN.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AttackScore<T: Scalar> {
    pub attack: Attack,
    pub score: T,
    pub flagged: bool,
}

impl<T: Scalar> AttackScore<T> {
    pub(crate) fn new(attack: Attack, score: T) -> Self {
        let flagged = !score.is_finite();
        // NaN cannot be ranked; degrade deterministically to a neutral tie.
        let score = if score.is_nan() { T::zero() } else { score };
        Self { attack, score, flagged }
    }
}
