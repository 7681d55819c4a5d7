//! `wmaudit detect`: key-holder detection via the green-fraction z-score.

use std::path::PathBuf;

use wmaudit_core::data::load_model;
use wmaudit_core::ngram::{NGramModel, TokenDistribution};
use wmaudit_core::vocab::tokenize;
use wmaudit_core::watermark::{green_fraction_zscore, WatermarkConfig};

use super::generate::{parse_key, ModeArg, SchemeArg};
use crate::CliError;

/// Detection threshold on |z|; a keyed hard watermark at T = 100 tokens sits
/// at z = 10, unwatermarked text almost surely below 4.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, clap::Args)]
pub struct DetectArgs {
    /// Trained model JSON (supplies the vocabulary).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Watermark key (hex or decimal).
    #[arg(long, value_parser = parse_key)]
    pub key: u64,
    /// Text to score.
    #[arg(long, conflicts_with = "file")]
    pub text: Option<String>,
    /// File whose contents are scored as one text.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

pub fn run(args: &DetectArgs) -> Result<(), CliError> {
    let model: NGramModel<f64> = load_model(&args.model)?;
    let text = match (&args.text, &args.file) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read {p:?}: {e}")))?,
        (None, None) => return Err(CliError::Usage("detect needs --text or --file".to_string())),
    };
    let config = WatermarkConfig {
        scheme: args.scheme.into(),
        gamma: args.gamma,
        delta: 0.0,
        key: args.key,
        mode: ModeArg::Soft.into(),
    };
    let seq = tokenize(model.vocab(), &text);
    let z = green_fraction_zscore(&seq, &config, model.vocab().len())?;
    let verdict = if z > Z_THRESHOLD { "watermark detected" } else { "no watermark signal" };
    println!("tokens = {}, z = {z:.4}, threshold = {Z_THRESHOLD}: {verdict}", seq.len());
    Ok(())
}
