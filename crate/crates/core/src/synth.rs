//! Deterministic synthetic corpus generator.
//!
//! Produces pronounceable gibberish with first-order word structure (each
//! word has a handful of preferred successors), sentence-initial and
//! occasional mid-sentence capitalization, and sentence-final periods — just
//! enough texture that n-gram models memorize what they saw and the
//! case-folding and compression heuristics have something to work with.

use crate::seed::{derive_seed, mix64, SplitMix64};

const CONSONANTS: [&str; 14] =
    ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn syllable(i: u64) -> String {
    let c = CONSONANTS[(i % CONSONANTS.len() as u64) as usize];
    let v = VOWELS[((i / CONSONANTS.len() as u64) % VOWELS.len() as u64) as usize];
    format!("{c}{v}")
}

/// First `n` distinct words of the fixed lexicon enumeration.
pub fn lexicon(n: usize) -> Vec<String> {
    let mut words = Vec::with_capacity(n);
    let mut seen = std::collections::HashSet::new();
    let mut i = 0u64;
    while words.len() < n {
        let syllables = 2 + (i % 3) as usize;
        let mut w = String::new();
        for j in 0..syllables {
            w.push_str(&syllable(mix64(i * 8 + j as u64 + 1) % 70));
        }
        if seen.insert(w.clone()) {
            words.push(w);
        }
        i += 1;
    }
    words
}

fn capitalize(w: &str) -> String {
    let mut chars = w.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// One of the four preferred successors of `prev`.
fn successor(prev: usize, pick: u64, n: usize) -> usize {
    (prev.wrapping_mul(31) + 7 + pick as usize) % n
}

/// Zipf-flavored global draw (quadratic skew toward low indices).
fn global_draw(rng: &mut SplitMix64, n: usize) -> usize {
    let u = rng.next_f64();
    (((u * u) * n as f64) as usize).min(n - 1)
}

/// `n_docs` documents of roughly `mean_words` words (±30%) over a lexicon of
/// `lexicon_words` base words. Deterministic in `seed`.
pub fn synth_corpus(
    seed: u64,
    n_docs: usize,
    mean_words: usize,
    lexicon_words: usize,
) -> Vec<String> {
    let lex = lexicon(lexicon_words);
    let n = lex.len();
    let mut docs = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let mut rng = SplitMix64::new(derive_seed(seed, "synth-doc", d as u64));
        let jitter = 0.7 + 0.6 * rng.next_f64();
        let target = ((mean_words as f64 * jitter) as usize).max(8);
        let mut words: Vec<String> = Vec::with_capacity(target + 1);
        let mut prev = (rng.next_u64() % n as u64) as usize;
        let mut sentence_pos = 0usize;
        let mut sentence_len = 6 + (rng.next_u64() % 8) as usize;
        while words.len() < target {
            let idx = if rng.next_f64() < 0.75 {
                successor(prev, rng.next_u64() % 4, n)
            } else {
                global_draw(&mut rng, n)
            };
            let mut w = lex[idx].clone();
            if sentence_pos == 0 || rng.next_f64() < 0.05 {
                w = capitalize(&w);
            }
            words.push(w);
            prev = idx;
            sentence_pos += 1;
            if sentence_pos >= sentence_len {
                if let Some(last) = words.last_mut() {
                    last.push('.');
                }
                sentence_pos = 0;
                sentence_len = 6 + (rng.next_u64() % 8) as usize;
            }
        }
        if let Some(last) = words.last_mut() {
            if !last.ends_with('.') {
                last.push('.');
            }
        }
        docs.push(words.join(" "));
    }
    docs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let a = synth_corpus(1, 20, 30, 100);
        let b = synth_corpus(1, 20, 30, 100);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        let c = synth_corpus(2, 20, 30, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn lexicon_distinct() {
        let lex = lexicon(200);
        let set: std::collections::HashSet<_> = lex.iter().collect();
        assert_eq!(set.len(), 200);
    }

    #[test]
    fn docs_have_sentences_and_case() {
        let docs = synth_corpus(5, 10, 40, 120);
        for doc in &docs {
            assert!(doc.contains('.'));
            assert!(doc.chars().next().unwrap().is_uppercase());
        }
    }
}
