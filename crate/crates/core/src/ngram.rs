//! Additively smoothed n-gram language model with a logits interface.
//!
//! The model stores raw counts for every context length `0..=order` and backs
//! off to the longest context that was actually observed; the empty context
//! (level 0) is always available, so an untrained model is uniform. Smoothing
//! is `P(t | ctx) = (count + alpha) / (total + alpha * V)`, which keeps every
//! probability strictly positive and every logit finite.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vocab::{build_vocab, tokenize, TokenId, TokenSeq, Vocabulary};

/// Length-V vector of natural-log-scale logits. Logits are defined as
/// `ln P`, so `softmax` reproduces the model distribution exactly (up to
/// rounding) and any additive bias composes cleanly.
#[derive(Debug, Clone, PartialEq)]
pub struct NextTokenLogits<T: Scalar> {
    pub logits: Vec<T>,
}

impl<T: Scalar> NextTokenLogits<T> {
    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    /// Max-shifted softmax; entries pushed to the hard-mask floor underflow
    /// to exactly zero.
    pub fn softmax(&self) -> Vec<T> {
        let mx = self.logits.iter().cloned().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = self.logits.iter().map(|&l| (l - mx).exp()).collect();
        let total: T = exps.iter().cloned().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    /// Index of the largest logit; first index wins ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0usize;
        for i in 1..self.logits.len() {
            if self.logits[i] > self.logits[best] {
                best = i;
            }
        }
        best as TokenId
    }
}

/// Anything that maps a context to next-token logits over a fixed vocabulary:
/// the plain model, or a watermarked view of one.
pub trait TokenDistribution<T: Scalar> {
    fn vocab(&self) -> &Vocabulary;

    fn next_token_logits(&self, context: &[TokenId]) -> NextTokenLogits<T>;

    fn vocab_size(&self) -> usize {
        self.vocab().len()
    }
}

/// Next-token probabilities under a distribution.
pub fn next_token_probs<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    context: &[TokenId],
) -> Vec<T> {
    model.next_token_logits(context).softmax()
}

#[derive(Debug, Clone, Default)]
pub(crate) struct ContextCounts {
    pub total: u64,
    pub by_token: HashMap<TokenId, u64>,
}

/// Counts one document `factor` times during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Duplication {
    pub doc_index: usize,
    pub factor: u64,
}

#[derive(Debug, Clone)]
pub struct NGramModel<T: Scalar> {
    order: usize,
    alpha: T,
    vocab: Vocabulary,
    /// `levels[k]`: context of length `k` -> counts. Level 0 holds the single
    /// empty context.
    levels: Vec<HashMap<Vec<TokenId>, ContextCounts>>,
}

/// Builds the vocabulary over `corpus` and trains on it.
pub fn train_ngram<T: Scalar>(
    corpus: &[String],
    order: usize,
    alpha: T,
    duplication: Option<Duplication>,
) -> Result<NGramModel<T>> {
    let vocab = build_vocab(corpus)?;
    train_with_vocab(vocab, corpus, order, alpha, duplication)
}

/// Trains on `docs` against a pre-built vocabulary. Used when the vocabulary
/// must cover more text than the training set (e.g. member/non-member splits).
pub fn train_with_vocab<T: Scalar>(
    vocab: Vocabulary,
    docs: &[String],
    order: usize,
    alpha: T,
    duplication: Option<Duplication>,
) -> Result<NGramModel<T>> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha.as_f64()));
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(d) = duplication {
        if d.doc_index >= docs.len() {
            return Err(Error::DuplicationIndex { index: d.doc_index, n_docs: docs.len() });
        }
        if d.factor == 0 {
            return Err(Error::InvalidDuplicationFactor(d.factor));
        }
    }
    let mut levels: Vec<HashMap<Vec<TokenId>, ContextCounts>> = vec![HashMap::new(); order + 1];
    for (di, doc) in docs.iter().enumerate() {
        let weight = match duplication {
            Some(d) if d.doc_index == di => d.factor,
            _ => 1,
        };
        let seq = tokenize(&vocab, doc);
        for i in 0..seq.ids.len() {
            for k in 0..=order.min(i) {
                let entry = levels[k].entry(seq.ids[i - k..i].to_vec()).or_default();
                entry.total += weight;
                *entry.by_token.entry(seq.ids[i]).or_insert(0) += weight;
            }
        }
    }
    Ok(NGramModel { order, alpha, vocab, levels })
}

impl<T: Scalar> NGramModel<T> {
    pub(crate) fn from_parts(
        order: usize,
        alpha: T,
        vocab: Vocabulary,
        levels: Vec<HashMap<Vec<TokenId>, ContextCounts>>,
    ) -> Result<Self> {
        if order == 0 || levels.len() != order + 1 {
            return Err(Error::InvalidOrder(order));
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidAlpha(alpha.as_f64()));
        }
        Ok(Self { order, alpha, vocab, levels })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub(crate) fn levels(&self) -> &[HashMap<Vec<TokenId>, ContextCounts>] {
        &self.levels
    }

    /// Longest observed context suffix, down to the (possibly empty) unigram
    /// level.
    fn active_counts(&self, context: &[TokenId]) -> Option<&ContextCounts> {
        let max_k = self.order.min(context.len());
        for k in (1..=max_k).rev() {
            if let Some(c) = self.levels[k].get(&context[context.len() - k..]) {
                if c.total > 0 {
                    return Some(c);
                }
            }
        }
        self.levels[0].get([].as_slice())
    }
}

impl<T: Scalar> TokenDistribution<T> for NGramModel<T> {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_token_logits(&self, context: &[TokenId]) -> NextTokenLogits<T> {
        let v = self.vocab.len();
        let (total, counts) = match self.active_counts(context) {
            Some(c) => (c.total, Some(&c.by_token)),
            None => (0, None),
        };
        let denom_ln = (T::of_u64(total) + self.alpha * T::of_usize(v)).ln();
        let base = self.alpha.ln() - denom_ln;
        let mut logits = vec![base; v];
        if let Some(by_token) = counts {
            for (&t, &c) in by_token {
                logits[t as usize] = (T::of_u64(c) + self.alpha).ln() - denom_ln;
            }
        }
        NextTokenLogits { logits }
    }
}

/// Per-token `ln P(t_i | t_1..t_{i-1})` for the scored region, conditioning
/// on the full preceding text including the prompt.
pub fn per_token_logprobs<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    tokens: &TokenSeq,
    prompt_len: usize,
) -> Result<Vec<T>> {
    if prompt_len >= tokens.ids.len() {
        return Err(Error::PromptTooLong { prompt_len, len: tokens.ids.len() });
    }
    let mut out = Vec::with_capacity(tokens.ids.len() - prompt_len);
    for i in prompt_len..tokens.ids.len() {
        let probs = next_token_probs(model, &tokens.ids[..i]);
        out.push(probs[tokens.ids[i] as usize].ln());
    }
    Ok(out)
}

/// Sum of scored per-token log-probabilities.
pub fn sequence_logprob<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    tokens: &TokenSeq,
    prompt_len: usize,
) -> Result<T> {
    Ok(per_token_logprobs(model, tokens, prompt_len)?.into_iter().sum())
}

/// `exp(-logprob / n)` over the `n` scored tokens.
pub fn perplexity<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    tokens: &TokenSeq,
    prompt_len: usize,
) -> Result<T> {
    let lps = per_token_logprobs(model, tokens, prompt_len)?;
    let n = T::of_usize(lps.len());
    let sum: T = lps.into_iter().sum();
    Ok((-sum / n).exp())
}
