//! The individual membership scores.
//!
//! All of them condition on the empty prompt and reduce to functions of the
//! per-token log-probabilities, which callers can precompute and share.

use std::io::Write;

use crate::error::{Error, Result};
use crate::ngram::{per_token_logprobs, TokenDistribution};
use crate::scalar::Scalar;
use crate::vocab::TokenSeq;
use crate::watermark::{Watermarked, WatermarkConfig};

use super::{Attack, AttackScore};

/// The K% grid the min-K attacks tune over.
pub const MIN_K_GRID: [f64; 7] = [5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0];

/// `ln perplexity` = negated mean per-token log-probability.
pub(crate) fn ln_ppl_from_logprobs<T: Scalar>(lps: &[T]) -> T {
    -(lps.iter().copied().sum::<T>() / T::of_usize(lps.len()))
}

/// Perplexity attack: `score = -ln ppl(sample | empty prompt)`.
pub fn score_ppl<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    sample: &TokenSeq,
) -> Result<AttackScore<T>> {
    let lps = per_token_logprobs(model, sample, 0)?;
    Ok(AttackScore::new(Attack::Ppl, -ln_ppl_from_logprobs(&lps)))
}

/// Smaller-reference attack: `score = -(ln ppl_target / ln ppl_reference)`.
/// A reference perplexity of exactly 1 makes the ratio blow up; the score is
/// flagged.
pub fn score_smaller_ref<T: Scalar, A, B>(
    target: &A,
    reference: &B,
    sample: &TokenSeq,
) -> Result<AttackScore<T>>
where
    A: TokenDistribution<T> + ?Sized,
    B: TokenDistribution<T> + ?Sized,
{
    let lt = ln_ppl_from_logprobs(&per_token_logprobs(target, sample, 0)?);
    let lr = ln_ppl_from_logprobs(&per_token_logprobs(reference, sample, 0)?);
    Ok(AttackScore::new(Attack::SmallerRef, -(lt / lr)))
}

/// Lowercase attack: `score = -(ln ppl(original) / ln ppl(lowercased))`, with
/// the lowercasing done through the vocabulary's lowercase map.
pub fn score_lowercase<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    sample: &TokenSeq,
) -> Result<AttackScore<T>> {
    let lo = sample.lowercased(model.vocab());
    let l_orig = ln_ppl_from_logprobs(&per_token_logprobs(model, sample, 0)?);
    let l_low = ln_ppl_from_logprobs(&per_token_logprobs(model, &lo, 0)?);
    Ok(AttackScore::new(Attack::Lowercase, -(l_orig / l_low)))
}

/// DEFLATE compression level pinned for the zlib attack; recorded in reports.
pub const ZLIB_ATTACK_LEVEL: u32 = 6;

/// Bits in the DEFLATE compression of the UTF-8 text at the pinned level.
pub fn deflate_bits(text: &str) -> u64 {
    let mut enc = flate2::write::DeflateEncoder::new(
        Vec::new(),
        flate2::Compression::new(ZLIB_ATTACK_LEVEL),
    );
    enc.write_all(text.as_bytes()).expect("in-memory write");
    let out = enc.finish().expect("in-memory finish");
    8 * out.len() as u64
}

/// Zlib attack: `score = -(ln ppl / compressed_bits)`.
pub fn score_zlib<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    sample: &TokenSeq,
) -> Result<AttackScore<T>> {
    let lp = ln_ppl_from_logprobs(&per_token_logprobs(model, sample, 0)?);
    let bits = T::of_u64(deflate_bits(&sample.source_text));
    Ok(AttackScore::new(Attack::Zlib, -(lp / bits)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinKSpace {
    /// Mean of the k smallest log-probabilities (the default).
    LogProb,
    /// Mean of the k smallest probabilities.
    Prob,
}

/// Mean over the `floor(n * K%)` smallest entries. Ties break by position,
/// so at K = 100 the selection is the whole sequence in order and the score
/// reproduces the plain mean bit-for-bit.
pub fn min_k_mean<T: Scalar>(logps: &[T], k_percent: f64, space: MinKSpace) -> Result<T> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::InvalidKPercent(k_percent));
    }
    let n = logps.len();
    if n == 0 {
        return Err(Error::EmptySampleSet);
    }
    let k = ((n as f64) * k_percent / 100.0).floor() as usize;
    if k == 0 {
        return Err(Error::InvalidKPercent(k_percent));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        logps[a]
            .partial_cmp(&logps[b])
            .expect("log-probabilities are never NaN")
            .then(a.cmp(&b))
    });
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    let sum: T = chosen
        .iter()
        .map(|&i| match space {
            MinKSpace::LogProb => logps[i],
            MinKSpace::Prob => logps[i].exp(),
        })
        .sum();
    Ok(sum / T::of_usize(k))
}

/// Min-K% attack in a chosen aggregation space.
pub fn score_min_k_in<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    space: MinKSpace,
    model: &M,
    sample: &TokenSeq,
    k_percent: f64,
) -> Result<AttackScore<T>> {
    let lps = per_token_logprobs(model, sample, 0)?;
    Ok(AttackScore::new(Attack::MinK, min_k_mean(&lps, k_percent, space)?))
}

/// Min-K% attack: mean of the k smallest per-token log-probabilities.
pub fn score_min_k<T: Scalar, M: TokenDistribution<T> + ?Sized>(
    model: &M,
    sample: &TokenSeq,
    k_percent: f64,
) -> Result<AttackScore<T>> {
    score_min_k_in(MinKSpace::LogProb, model, sample, k_percent)
}

/// Watermark-aware min-K%: divides the probability of each green token by
/// `e^delta` (a subtraction in log space) before taking the bottom-k mean.
/// The caller must know the watermark; `config` must match the scoring
/// model's configuration exactly.
pub fn score_adaptive_min_k<T: Scalar, M: TokenDistribution<T>>(
    model: &Watermarked<'_, T, M>,
    config: &WatermarkConfig,
    sample: &TokenSeq,
    k_percent: f64,
) -> Result<AttackScore<T>> {
    if model.config() != config {
        return Err(Error::ConfigMismatch(format!(
            "attacker config {config:?} != model config {:?}",
            model.config()
        )));
    }
    let lps = per_token_logprobs(model, sample, 0)?;
    let adj = adjusted_logprobs(&lps, &model.green_flags(&sample.ids), T::of(config.delta));
    Ok(AttackScore::new(Attack::AdaptiveMinK, min_k_mean(&adj, k_percent, MinKSpace::LogProb)?))
}

/// Green positions get `lp - delta`; red positions pass through.
pub(crate) fn adjusted_logprobs<T: Scalar>(lps: &[T], green: &[bool], delta: T) -> Vec<T> {
    lps.iter()
        .zip(green)
        .map(|(&lp, &g)| if g { lp - delta } else { lp })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::{perplexity, train_ngram, train_with_vocab, NGramModel};
    use crate::seed::SplitMix64;
    use crate::vocab::{build_vocab, tokenize};
    use crate::watermark::{Mode, Scheme};

    fn model_fixture() -> NGramModel<f64> {
        let corpus = crate::synth::synth_corpus(31, 24, 26, 80);
        train_ngram(&corpus, 2, 0.3, None).unwrap()
    }

    #[test]
    fn ppl_score_orders_by_perplexity() {
        let model = model_fixture();
        let texts = crate::synth::synth_corpus(32, 6, 20, 80);
        let mut scored: Vec<(f64, f64)> = texts
            .iter()
            .map(|t| {
                let seq = tokenize(model.vocab(), t);
                let ppl = perplexity(&model, &seq, 0).unwrap();
                let score = score_ppl(&model, &seq).unwrap().score;
                (ppl, score)
            })
            .collect();
        // sort oracle: ranking by score equals ranking by ascending perplexity
        let mut by_score = scored.clone();
        by_score.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (a, b) in scored.iter().zip(&by_score) {
            assert_eq!(a.0, b.0);
        }
    }

    #[test]
    fn ppl_score_uniform_model() {
        let corpus = vec!["a b c".to_string()];
        let vocab = build_vocab(&corpus).unwrap();
        let v = vocab.len() as f64;
        let uniform: NGramModel<f64> =
            NGramModel::from_parts(1, 1.0, vocab.clone(), vec![Default::default(); 2]).unwrap();
        let seq = tokenize(&vocab, "a c b");
        let s = score_ppl(&uniform, &seq).unwrap();
        assert!((s.score - -(v.ln())).abs() < 1e-12);
    }

    #[test]
    fn smaller_ref_self_is_minus_one() {
        let model = model_fixture();
        let seq = tokenize(model.vocab(), &crate::synth::synth_corpus(31, 24, 26, 80)[0]);
        let s = score_smaller_ref(&model, &model, &seq).unwrap();
        assert!((s.score - -1.0).abs() < 1e-12);
    }

    #[test]
    fn memorized_member_outscores_nonmembers_under_smaller_ref() {
        let corpus = crate::synth::synth_corpus(41, 30, 30, 80);
        let vocab = build_vocab(&corpus).unwrap();
        let target: NGramModel<f64> = train_with_vocab(
            vocab.clone(),
            &corpus,
            2,
            0.05,
            Some(crate::ngram::Duplication { doc_index: 0, factor: 50 }),
        )
        .unwrap();
        let reference: NGramModel<f64> =
            train_with_vocab(vocab.clone(), &corpus, 1, 0.05, None).unwrap();
        let member = tokenize(&vocab, &corpus[0]);
        let member_score = score_smaller_ref(&target, &reference, &member).unwrap().score;
        let fresh = crate::synth::synth_corpus(999, 4, 30, 80);
        for doc in &fresh {
            let seq = tokenize(&vocab, doc);
            let s = score_smaller_ref(&target, &reference, &seq).unwrap().score;
            assert!(member_score > s, "member {member_score} <= nonmember {s}");
        }
        // memorized member: ppl_target -> 1+, so the ratio -> 0-
        assert!(member_score > -0.5 && member_score < 0.0);
    }

    #[test]
    fn lowercase_identity_and_idempotence() {
        let model = model_fixture();
        let all_lower = tokenize(model.vocab(), "the"); // may be unk; build explicit text
        let _ = all_lower;
        let corpus = crate::synth::synth_corpus(31, 24, 26, 80);
        let lower_text = corpus[0].to_lowercase();
        let seq = tokenize(model.vocab(), &lower_text);
        let s = score_lowercase(&model, &seq).unwrap();
        assert!((s.score - -1.0).abs() < 1e-12);
        let twice = seq.lowercased(model.vocab()).lowercased(model.vocab());
        assert_eq!(twice.ids, seq.lowercased(model.vocab()).ids);
    }

    #[test]
    fn deflate_bits_orders_by_compressibility() {
        let repetitive = "aaaa".repeat(100);
        let mut rng = SplitMix64::new(3);
        let random: String = (0..400)
            .map(|_| char::from(b'a' + (rng.next_u64() % 26) as u8))
            .collect();
        assert!(deflate_bits(&repetitive) < deflate_bits(&random));
        // determinism at the pinned level
        assert_eq!(deflate_bits(&random), deflate_bits(&random));
    }

    #[test]
    fn zlib_orientation_on_constructed_pair() {
        // equal perplexity (same ids scored), different compressibility:
        // the more compressible text yields fewer bits, hence a score with
        // larger magnitude on the negative side (less member-like per
        // remaining entropy when ppl is high).
        let model = model_fixture();
        let corpus = crate::synth::synth_corpus(31, 24, 26, 80);
        let seq = tokenize(model.vocab(), &corpus[0]);
        let lp = ln_ppl_from_logprobs(&per_token_logprobs(&model, &seq, 0).unwrap());
        let bits_small = 100.0f64;
        let bits_large = 1000.0f64;
        let score_small = -(lp / bits_small);
        let score_large = -(lp / bits_large);
        // ln ppl > 0, so fewer bits => more negative score
        assert!(lp > 0.0);
        assert!(score_small < score_large);
        let s = score_zlib(&model, &seq).unwrap();
        let bits = deflate_bits(&seq.source_text) as f64;
        assert!((s.score - -(lp / bits)).abs() < 1e-12);
    }

    #[test]
    fn min_k_mean_hand_example() {
        // probs [0.1, 0.2, 0.4, 0.8], K=50 -> mean(ln 0.1, ln 0.2)
        let lps: Vec<f64> = [0.1f64, 0.2, 0.4, 0.8].iter().map(|p| p.ln()).collect();
        let got = min_k_mean(&lps, 50.0, MinKSpace::LogProb).unwrap();
        let expect = (0.1f64.ln() + 0.2f64.ln()) / 2.0;
        assert!((got - expect).abs() < 1e-12);
        assert!((got - -1.956_011_502_714_073).abs() < 1e-9);
        // prob space variant
        let gp = min_k_mean(&lps, 50.0, MinKSpace::Prob).unwrap();
        assert!((gp - 0.15).abs() < 1e-12);
    }

    #[test]
    fn min_k_at_100_equals_ppl_score_exactly() {
        let model = model_fixture();
        let corpus = crate::synth::synth_corpus(31, 24, 26, 80);
        for doc in corpus.iter().take(5) {
            let seq = tokenize(model.vocab(), doc);
            let mk = score_min_k(&model, &seq, 100.0).unwrap().score;
            let pp = score_ppl(&model, &seq).unwrap().score;
            assert_eq!(mk, pp, "bitwise equality required at K=100");
        }
    }

    #[test]
    fn min_k_selection_matches_full_sort_oracle() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..50 {
            let n = 3 + (rng.next_u64() % 40) as usize;
            let lps: Vec<f64> = (0..n).map(|_| -(rng.next_f64() * 8.0)).collect();
            for k_percent in [5.0, 20.0, 50.0, 100.0] {
                let k = ((n as f64) * k_percent / 100.0).floor() as usize;
                if k == 0 {
                    continue;
                }
                let got = min_k_mean(&lps, k_percent, MinKSpace::LogProb).unwrap();
                let mut sorted = lps.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let expect: f64 = sorted[..k].iter().sum::<f64>() / k as f64;
                assert!((got - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_k_preconditions() {
        let lps = [-1.0f64, -2.0];
        assert!(matches!(
            min_k_mean(&lps, 0.0, MinKSpace::LogProb),
            Err(Error::InvalidKPercent(_))
        ));
        assert!(matches!(
            min_k_mean(&lps, 101.0, MinKSpace::LogProb),
            Err(Error::InvalidKPercent(_))
        ));
        // floor(2 * 10%) = 0
        assert!(matches!(
            min_k_mean(&lps, 10.0, MinKSpace::LogProb),
            Err(Error::InvalidKPercent(_))
        ));
    }

    #[test]
    fn adaptive_with_zero_delta_is_bitwise_plain() {
        let model = model_fixture();
        let config = WatermarkConfig {
            scheme: Scheme::Umd,
            gamma: 0.5,
            delta: 0.0,
            key: 9,
            mode: Mode::Soft,
        };
        let wm = Watermarked::new(&model, &config).unwrap();
        let corpus = crate::synth::synth_corpus(31, 24, 26, 80);
        for doc in corpus.iter().take(5) {
            let seq = tokenize(model.vocab(), doc);
            let plain = score_min_k(&wm, &seq, 20.0).unwrap().score;
            let adaptive = score_adaptive_min_k(&wm, &config, &seq, 20.0).unwrap().score;
            assert_eq!(plain, adaptive);
        }
    }

    #[test]
    fn adaptive_adjustment_formula() {
        // one green token with p = 0.8 and delta = ln 2 adjusts to 0.4
        let lps = [0.8f64.ln()];
        let adj = adjusted_logprobs(&lps, &[true], 2.0f64.ln());
        assert!((adj[0].exp() - 0.4).abs() < 1e-12);
        let red = adjusted_logprobs(&lps, &[false], 2.0f64.ln());
        assert_eq!(red[0], lps[0]);
    }

    #[test]
    fn adaptive_config_mismatch_is_an_error() {
        let model = model_fixture();
        let config = WatermarkConfig {
            scheme: Scheme::Umd,
            gamma: 0.5,
            delta: 2.0,
            key: 9,
            mode: Mode::Soft,
        };
        let wm = Watermarked::new(&model, &config).unwrap();
        let other = WatermarkConfig { scheme: Scheme::Unigram, ..config };
        let seq = tokenize(model.vocab(), &crate::synth::synth_corpus(31, 4, 20, 80)[0]);
        assert!(matches!(
            score_adaptive_min_k(&wm, &other, &seq, 20.0),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn adaptive_recovers_ranks_under_constant_denominator() {
        // Unigram scheme with equal green mass in every context: the
        // watermarked softmax denominator is constant, so the adjusted
        // probabilities are a fixed rescaling of the unwatermarked ones and
        // rank correlation is exactly 1.
        let corpus = vec!["a b c d".to_string()];
        let vocab = build_vocab(&corpus).unwrap();
        let v = vocab.len();
        // counts chosen so each context's green mass is the same
        let config = WatermarkConfig {
            scheme: Scheme::Unigram,
            gamma: 0.5,
            delta: 3.0,
            key: 4,
            mode: Mode::Soft,
        };
        let mask = crate::watermark::partition_unigram(v, 0.5, 4).unwrap();
        let greens = mask.green_ids();
        let reds: Vec<_> = (0..v as u32).filter(|t| !mask.is_green(*t as usize)).collect();
        // context "a": green0 -> 4, green1 -> 1, red0 -> 3, red1 -> 2
        // context "b": green0 -> 1, green1 -> 4, red0 -> 2, red1 -> 3
        // both have green mass 5, red mass 5.
        let mut level1: std::collections::HashMap<Vec<u32>, crate::ngram::ContextCounts> =
            Default::default();
        let weights_a = [(greens[0], 4u64), (greens[1], 1), (reds[0], 3), (reds[1], 2)];
        let weights_b = [(greens[0], 1u64), (greens[1], 4), (reds[0], 2), (reds[1], 3)];
        for (ctx_tok, weights) in [(0u32, weights_a), (1u32, weights_b)] {
            let mut cc = crate::ngram::ContextCounts::default();
            for (t, w) in weights {
                cc.total += w;
                cc.by_token.insert(t, w);
            }
            level1.insert(vec![ctx_tok], cc);
        }
        let model: NGramModel<f64> =
            NGramModel::from_parts(1, 1e-9, vocab.clone(), vec![Default::default(), level1])
                .unwrap();
        let wm = Watermarked::new(&model, &config).unwrap();

        // walk a sequence alternating contexts; compare rank orders
        let seq = TokenSeqFixture::build(&vocab, &[0, greens[0], 1, reds[1], 0, reds[0], 1, greens[1]]);
        let plain_lps = per_token_logprobs(&model, &seq, 1).unwrap();
        let wm_lps = per_token_logprobs(&wm, &seq, 1).unwrap();
        let flags = wm.green_flags(&seq.ids);
        let adj = adjusted_logprobs(&wm_lps, &flags[1..], 3.0);
        // rank correlation 1.0: every strictly-ordered plain pair keeps its
        // order after adjustment (exact plain ties carry no constraint)
        for i in 0..plain_lps.len() {
            for j in 0..plain_lps.len() {
                if plain_lps[i] < plain_lps[j] - 1e-12 {
                    assert!(
                        adj[i] < adj[j] + 1e-9,
                        "pair ({i}, {j}): plain order {} < {} flipped to {} vs {}",
                        plain_lps[i],
                        plain_lps[j],
                        adj[i],
                        adj[j]
                    );
                }
            }
        }
    }

    struct TokenSeqFixture;
    impl TokenSeqFixture {
        fn build(vocab: &crate::vocab::Vocabulary, ids: &[u32]) -> TokenSeq {
            TokenSeq::from_ids(vocab, ids.to_vec())
        }
    }
}
