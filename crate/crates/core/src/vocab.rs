//! Vocabulary construction and word-level tokenization.
//!
//! A token is either a maximal alphanumeric run or a single non-alphanumeric
//! character; whitespace separates words and is never a token. The vocabulary
//! is closed under lowercasing, so case-folding a tokenized sequence never
//! introduces UNK.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Reserved string for out-of-vocabulary words. The tokenizer can never
/// produce it from text (it mixes alphanumerics and punctuation), so it
/// cannot collide with a real token.
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    unk_id: TokenId,
    lowercase_map: Vec<TokenId>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its serialized parts, revalidating the
    /// invariants (dense distinct tokens, in-range unk and lowercase map).
    pub fn from_parts(
        tokens: Vec<String>,
        unk_id: TokenId,
        lowercase_map: Vec<TokenId>,
    ) -> Result<Self> {
        let v = tokens.len();
        if v < 1 {
            return Err(Error::EmptyCorpus);
        }
        let mut index = HashMap::with_capacity(v);
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::LengthMismatch(format!("duplicate token {t:?}")));
            }
        }
        if unk_id as usize >= v || lowercase_map.len() != v {
            return Err(Error::LengthMismatch(
                "unk_id or lowercase_map out of range".to_string(),
            ));
        }
        if lowercase_map.iter().any(|&m| m as usize >= v) {
            return Err(Error::LengthMismatch("lowercase_map entry out of range".to_string()));
        }
        Ok(Self { tokens, unk_id, lowercase_map, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> TokenId {
        self.unk_id
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id_of(token).unwrap_or(self.unk_id)
    }

    /// Index of the lowercased form of `id` (itself when already lowercase).
    pub fn lowercase_id(&self, id: TokenId) -> TokenId {
        self.lowercase_map[id as usize]
    }

    pub fn lowercase_map(&self) -> &[TokenId] {
        &self.lowercase_map
    }
}

/// A tokenized text. `glued[i]` marks a token that attaches to its
/// predecessor with no space (detached punctuation), which is what lets
/// `detokenize` reproduce the whitespace-normalized source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub ids: Vec<TokenId>,
    pub glued: Vec<bool>,
    pub source_text: String,
}

impl TokenSeq {
    pub fn empty() -> Self {
        Self { ids: Vec::new(), glued: Vec::new(), source_text: String::new() }
    }

    /// Wraps raw ids (e.g. generated ones) as a space-separated sequence.
    /// Every id must be in range for `vocab`.
    pub fn from_ids(vocab: &Vocabulary, ids: Vec<TokenId>) -> Self {
        debug_assert!(ids.iter().all(|&id| (id as usize) < vocab.len()));
        let glued = vec![false; ids.len()];
        let source_text = ids
            .iter()
            .map(|&id| vocab.token(id))
            .collect::<Vec<_>>()
            .join(" ");
        Self { ids, glued, source_text }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Whitespace-delimited words of the source text.
    pub fn words(&self) -> Vec<&str> {
        self.source_text.split_whitespace().collect()
    }

    /// Token indices that begin a word.
    pub fn word_starts(&self) -> Vec<usize> {
        (0..self.ids.len()).filter(|&i| !self.glued[i]).collect()
    }

    /// Case-folded copy via the vocabulary's lowercase map.
    pub fn lowercased(&self, vocab: &Vocabulary) -> TokenSeq {
        TokenSeq {
            ids: self.ids.iter().map(|&id| vocab.lowercase_id(id)).collect(),
            glued: self.glued.clone(),
            source_text: self.source_text.to_lowercase(),
        }
    }
}

/// Splits text into `(token, glued)` pairs.
pub(crate) fn segment(text: &str) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let start = out.len();
        let mut run = String::new();
        for ch in chunk.chars() {
            if ch.is_alphanumeric() {
                run.push(ch);
            } else {
                if !run.is_empty() {
                    let glued = out.len() > start;
                    out.push((std::mem::take(&mut run), glued));
                }
                let glued = out.len() > start;
                out.push((ch.to_string(), glued));
            }
        }
        if !run.is_empty() {
            let glued = out.len() > start;
            out.push((run, glued));
        }
    }
    out
}

/// Builds a vocabulary over a corpus: words in first-occurrence order, then
/// missing lowercase forms, then UNK last.
pub fn build_vocab(corpus: &[String]) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut tokens: Vec<String> = Vec::new();
    let mut index: HashMap<String, TokenId> = HashMap::new();
    for doc in corpus {
        for (tok, _) in segment(doc) {
            if !index.contains_key(&tok) {
                index.insert(tok.clone(), tokens.len() as TokenId);
                tokens.push(tok);
            }
        }
    }
    if tokens.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let first_pass = tokens.len();
    for i in 0..first_pass {
        let lc = tokens[i].to_lowercase();
        if !index.contains_key(&lc) {
            index.insert(lc.clone(), tokens.len() as TokenId);
            tokens.push(lc);
        }
    }
    index.insert(UNK_TOKEN.to_string(), tokens.len() as TokenId);
    tokens.push(UNK_TOKEN.to_string());
    let unk_id = (tokens.len() - 1) as TokenId;
    let lowercase_map = tokens
        .iter()
        .map(|t| index[&t.to_lowercase()])
        .collect();
    Ok(Vocabulary { tokens, unk_id, lowercase_map, index })
}

/// Tokenizes text against a vocabulary; unknown words map to UNK.
pub fn tokenize(vocab: &Vocabulary, text: &str) -> TokenSeq {
    let mut ids = Vec::new();
    let mut glued = Vec::new();
    for (tok, g) in segment(text) {
        ids.push(vocab.id_or_unk(&tok));
        glued.push(g);
    }
    TokenSeq { ids, glued, source_text: text.to_string() }
}

/// Reconstructs the whitespace-normalized text of a sequence.
pub fn detokenize(vocab: &Vocabulary, seq: &TokenSeq) -> String {
    let mut out = String::new();
    for (i, &id) in seq.ids.iter().enumerate() {
        if i > 0 && !seq.glued[i] {
            out.push(' ');
        }
        out.push_str(vocab.token(id));
    }
    out
}
