//! Sequence generation: greedy decoding and seeded multinomial sampling.
//!
//! Each call owns a SplitMix64 stream built from its seed, so generation is a
//! pure function of `(model, prompt, mode, seed)` and safe to run from any
//! number of threads.

use crate::ngram::{next_token_probs, TokenDistribution};
use crate::scalar::Scalar;
use crate::seed::SplitMix64;
use crate::vocab::{TokenId, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// Argmax decoding; ties go to the lowest token id.
    Greedy,
    /// Draw from the softmax distribution.
    Multinomial,
}

/// Appends `max_len` generated ids to a copy of `prompt`.
pub fn generate_ids<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    prompt: &[TokenId],
    max_len: usize,
    mode: GenMode,
    rng_seed: u64,
) -> Vec<TokenId> {
    let mut ids = prompt.to_vec();
    let mut rng = SplitMix64::new(rng_seed);
    for _ in 0..max_len {
        let probs = next_token_probs(model, &ids);
        let next = match mode {
            GenMode::Greedy => argmax(&probs),
            GenMode::Multinomial => sample_index(&mut rng, &probs),
        };
        ids.push(next as TokenId);
    }
    ids
}

/// As [`generate_ids`], returning a detokenized sequence.
pub fn generate<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    prompt: &TokenSeq,
    max_len: usize,
    mode: GenMode,
    rng_seed: u64,
) -> TokenSeq {
    let ids = generate_ids(model, &prompt.ids, max_len, mode, rng_seed);
    TokenSeq::from_ids(model.vocab(), ids)
}

fn argmax<T: Scalar>(probs: &[T]) -> usize {
    let mut best = 0usize;
    for i in 1..probs.len() {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw. Zero-probability entries can never be selected, even
/// when rounding leaves the cumulative sum a hair under 1.
fn sample_index<T: Scalar>(rng: &mut SplitMix64, probs: &[T]) -> usize {
    let u = T::of(rng.next_f64());
    let mut acc = T::zero();
    let mut last_nonzero = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        if p > T::zero() {
            last_nonzero = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_nonzero
}
