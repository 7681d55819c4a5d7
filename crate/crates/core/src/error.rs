//! Error type shared across the toolkit.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
#[non_exhaustive]
pub enum Error {
    /// Corpus contained no documents (or no tokens at all).
    EmptyCorpus,
    /// An operation over a sample set was given no samples.
    EmptySampleSet,
    /// Model order (context length) must be at least 1.
    InvalidOrder(usize),
    /// Smoothing constant must be finite and strictly positive.
    InvalidAlpha(f64),
    /// Duplication factor must be at least 1.
    InvalidDuplicationFactor(u64),
    /// Duplication target index is outside the corpus.
    DuplicationIndex { index: usize, n_docs: usize },
    /// Prompt consumes the whole sequence; nothing left to score.
    PromptTooLong { prompt_len: usize, len: usize },
    /// Green fraction must lie strictly inside (0, 1).
    InvalidGamma(f64),
    /// Logit bias must be finite and non-negative.
    InvalidDelta(f64),
    /// floor(gamma * V) left the green or red list empty.
    DegenerateGreenList { vocab_size: usize, gamma: f64 },
    /// Partitioning needs at least two tokens.
    VocabTooSmall(usize),
    /// Previous-token id exceeds the sentinel (vocabulary size).
    PrevTokenOutOfRange { prev: u32, vocab_size: usize },
    /// K percent outside (0, 100], or floor(n * K%) == 0.
    InvalidKPercent(f64),
    /// AUC needs at least one score on each side.
    EmptyScoreSide,
    /// A score was NaN and cannot be ranked.
    NonFiniteScore(&'static str),
    /// Attacker-supplied watermark config differs from the scoring model's.
    ConfigMismatch(String),
    /// A closed-form bound was requested outside its hypothesis.
    BoundHypothesis(String),
    /// A soft-watermark confidence precondition failed.
    ConfidencePrecondition { token: Option<usize>, detail: String },
    /// Inputs that must share a length do not.
    LengthMismatch(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyCorpus => write!(f, "corpus is empty"),
            Error::EmptySampleSet => write!(f, "sample set is empty"),
            Error::InvalidOrder(n) => write!(f, "model order must be >= 1, got {n}"),
            Error::InvalidAlpha(a) => write!(f, "smoothing alpha must be finite and > 0, got {a}"),
            Error::InvalidDuplicationFactor(d) => {
                write!(f, "duplication factor must be >= 1, got {d}")
            }
            Error::DuplicationIndex { index, n_docs } => {
                write!(f, "duplication index {index} out of range for {n_docs} documents")
            }
            Error::PromptTooLong { prompt_len, len } => {
                write!(f, "prompt length {prompt_len} leaves no scored tokens (sequence length {len})")
            }
            Error::InvalidGamma(g) => write!(f, "gamma must lie in (0, 1), got {g}"),
            Error::InvalidDelta(d) => write!(f, "delta must be finite and >= 0, got {d}"),
            Error::DegenerateGreenList { vocab_size, gamma } => write!(
                f,
                "floor(gamma*V) must leave both lists non-empty (V = {vocab_size}, gamma = {gamma})"
            ),
            Error::VocabTooSmall(v) => write!(f, "vocabulary must have >= 2 tokens, got {v}"),
            Error::PrevTokenOutOfRange { prev, vocab_size } => {
                write!(f, "previous-token id {prev} exceeds sentinel {vocab_size}")
            }
            Error::InvalidKPercent(k) => {
                write!(f, "K percent must be in (0, 100] and select >= 1 token, got {k}")
            }
            Error::EmptyScoreSide => write!(f, "AUC needs non-empty member and non-member sides"),
            Error::NonFiniteScore(what) => write!(f, "score is not rankable: {what}"),
            Error::ConfigMismatch(detail) => write!(f, "watermark config mismatch: {detail}"),
            Error::BoundHypothesis(detail) => write!(f, "bound hypothesis violated: {detail}"),
            Error::ConfidencePrecondition { token, detail } => match token {
                Some(i) => write!(f, "confidence precondition failed at token {i}: {detail}"),
                None => write!(f, "confidence precondition failed: {detail}"),
            },
            Error::LengthMismatch(detail) => write!(f, "length mismatch: {detail}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
