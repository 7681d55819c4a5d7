//! ROC-AUC via the rank form of the Mann-Whitney U statistic.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability that a random member outscores a random non-member, ties
/// counted half. Computed from tie-averaged ranks:
/// `AUC = (R_members - m(m+1)/2) / (m * n)`.
///
/// Infinite scores rank normally; NaN is rejected.
pub fn auc<T: Scalar>(member_scores: &[T], nonmember_scores: &[T]) -> Result<T> {
    if member_scores.is_empty() || nonmember_scores.is_empty() {
        return Err(Error::EmptyScoreSide);
    }
    if member_scores.iter().chain(nonmember_scores).any(|s| s.is_nan()) {
        return Err(Error::NonFiniteScore("NaN score in AUC input"));
    }
    let mut all: Vec<(T, bool)> = Vec::with_capacity(member_scores.len() + nonmember_scores.len());
    all.extend(member_scores.iter().map(|&s| (s, true)));
    all.extend(nonmember_scores.iter().map(|&s| (s, false)));
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN was rejected above"));

    let n = all.len();
    let mut member_rank_sum = 0.0f64;
    let mut i = 0usize;
    while i < n {
        let mut j = i + 1;
        while j < n && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share the average rank (i + 1 + j) / 2
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                member_rank_sum += avg_rank;
            }
        }
        i = j;
    }
    let m = member_scores.len() as f64;
    let nn = nonmember_scores.len() as f64;
    let u = member_rank_sum - m * (m + 1.0) / 2.0;
    Ok(T::of(u / (m * nn)))
}
