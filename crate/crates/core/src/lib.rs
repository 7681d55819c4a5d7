//! Green/red-list watermarking over trainable n-gram language models, with
//! the memorization metrics, membership-inference attacks, and probabilistic
//! bound verifiers needed to audit what watermarking does to the generation
//! and detection of memorized text.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below are the concrete types the CLI and the test suites use.

pub mod data;
pub mod error;
pub mod logspace;
pub mod memorization;
pub mod mia;
pub mod ngram;
pub mod sample;
pub mod scalar;
pub mod seed;
pub mod synth;
pub mod theory;
pub mod vocab;
pub mod watermark;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// f64 instantiations (what the CLI and acceptance suite run on).
pub type NGramModel64 = ngram::NGramModel<f64>;
pub type NextTokenLogits64 = ngram::NextTokenLogits<f64>;
pub type Watermarked64<'a> = watermark::Watermarked<'a, f64, NGramModel64>;
pub type LogValue64 = logspace::LogValue<f64>;
pub type MemorizationReport64 = memorization::MemorizationReport<f64>;
pub type AucResult64 = mia::AucResult<f64>;
pub type SoftmaxInstance64 = theory::SoftmaxInstance<f64>;
pub type BoundCheckReport64 = theory::BoundCheckReport<f64>;

/// f32 instantiations for footprint-sensitive callers.
pub type NGramModel32 = ngram::NGramModel<f32>;
pub type Watermarked32<'a> = watermark::Watermarked<'a, f32, NGramModel32>;
