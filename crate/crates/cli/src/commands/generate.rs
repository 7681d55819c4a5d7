//! `wmaudit generate`: sample text from a trained model, optionally through
//! a watermark.

use std::path::PathBuf;

use wmaudit_core::data::load_model;
use wmaudit_core::ngram::NGramModel;
use wmaudit_core::sample::{generate, GenMode};
use wmaudit_core::vocab::tokenize;
use wmaudit_core::watermark::{Mode, Scheme, Watermarked, WatermarkConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SamplerArg {
    Greedy,
    Multinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SchemeArg {
    Umd,
    Unigram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Soft,
    Hard,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Umd => Scheme::Umd,
            SchemeArg::Unigram => Scheme::Unigram,
        }
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Soft => Mode::Soft,
            ModeArg::Hard => Mode::Hard,
        }
    }
}

/// Parses a key given as hex (`0x...` or 16 hex digits) or decimal.
pub fn parse_key(s: &str) -> Result<u64, String> {
    let (radix, digits) = match s.strip_prefix("0x") {
        Some(hex) => (16, hex),
        None if s.len() == 16 && s.chars().all(|c| c.is_ascii_hexdigit()) => (16, s),
        None => (10, s),
    };
    u64::from_str_radix(digits, radix).map_err(|e| format!("bad key {s:?}: {e}"))
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    /// Trained model JSON (see `wmaudit train`).
    #[arg(long)]
    pub model: PathBuf,
    /// Watermark scheme; omit for unwatermarked generation.
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 10.0)]
    pub delta: f64,
    /// Watermark key (hex or decimal).
    #[arg(long, default_value = "1", value_parser = parse_key)]
    pub key: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Soft)]
    pub mode: ModeArg,
    /// Prompt text; empty by default.
    #[arg(long, default_value = "")]
    pub prompt: String,
    /// Tokens to generate.
    #[arg(long, default_value_t = 42)]
    pub len: usize,
    #[arg(long, value_enum, default_value_t = SamplerArg::Multinomial)]
    pub sampler: SamplerArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

pub fn run(args: &GenerateArgs) -> Result<(), CliError> {
    let model: NGramModel<f64> = load_model(&args.model)?;
    let prompt = tokenize(wmaudit_core::ngram::TokenDistribution::<f64>::vocab(&model), &args.prompt);
    let mode = match args.sampler {
        SamplerArg::Greedy => GenMode::Greedy,
        SamplerArg::Multinomial => GenMode::Multinomial,
    };
    let out = match args.scheme {
        Some(scheme) => {
            let config = WatermarkConfig {
                scheme: scheme.into(),
                gamma: args.gamma,
                delta: args.delta,
                key: args.key,
                mode: args.mode.into(),
            };
            let wm = Watermarked::new(&model, &config)?;
            generate(&wm, &prompt, args.len, mode, args.seed)
        }
        None => generate(&model, &prompt, args.len, mode, args.seed),
    };
    println!("{}", out.source_text);
    Ok(())
}
