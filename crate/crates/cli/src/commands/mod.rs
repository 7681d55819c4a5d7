pub mod adaptive;
pub mod bounds;
pub mod detect;
pub mod generate;
pub mod memorization;
pub mod mia;
pub mod sweep;
pub mod train;

use std::path::Path;

use wmaudit_core::data;
use wmaudit_core::ngram::{train_with_vocab, Duplication, NGramModel};
use wmaudit_core::vocab::{build_vocab, Vocabulary};

use crate::config::ExperimentConfig;
use crate::CliError;

pub(crate) fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Usage(format!("cannot create {:?}: {e}", cfg.out_dir)))
}

pub(crate) fn load_required_corpus(cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let path = cfg
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --corpus (or a config with one)".to_string()))?;
    Ok(data::load_corpus(path)?)
}

/// Model used by the memorization recipes: trained on the whole corpus, with
/// the strongest configured duplication factor applied to the target.
pub(crate) fn memorization_model(
    cfg: &ExperimentConfig,
    corpus: &[String],
) -> Result<(Vocabulary, NGramModel<f64>), CliError> {
    let vocab = build_vocab(corpus)?;
    let duplication = cfg.duplication.as_ref().map(|d| Duplication {
        doc_index: d.doc_index,
        factor: d.factors.last().copied().unwrap_or(1),
    });
    let model = train_with_vocab(vocab.clone(), corpus, cfg.order, cfg.alpha, duplication)?;
    Ok((vocab, model))
}

pub(crate) fn out_path(cfg: &ExperimentConfig, name: &str) -> std::path::PathBuf {
    cfg.out_dir.join(name)
}

pub(crate) fn print_written(path: &Path) {
    println!("wrote {}", path.display());
}
