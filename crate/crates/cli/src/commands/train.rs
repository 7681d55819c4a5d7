//! `wmaudit train`: fit the smoothed n-gram model(s) and dump them as JSON.

use std::path::PathBuf;

use wmaudit_core::data::save_model;
use wmaudit_core::ngram::{train_with_vocab, Duplication};
use wmaudit_core::vocab::build_vocab;

use crate::config::{ConfigArgs, ExperimentConfig};
use crate::manifest::ManifestBuilder;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    super::ensure_out_dir(cfg)?;
    let corpus = super::load_required_corpus(cfg)?;
    let vocab = build_vocab(&corpus)?;
    let mut manifest = ManifestBuilder::new("train", cfg);
    let mut files = Vec::new();
    match &cfg.duplication {
        None => {
            let model = train_with_vocab(vocab, &corpus, cfg.order, cfg.alpha, None)?;
            let path = super::out_path(cfg, "model.json");
            save_model(&model, &path)?;
            manifest.file(&path);
            super::print_written(&path);
            files.push(path);
        }
        Some(spec) => {
            for &factor in &spec.factors {
                let model = train_with_vocab(
                    vocab.clone(),
                    &corpus,
                    cfg.order,
                    cfg.alpha,
                    Some(Duplication { doc_index: spec.doc_index, factor }),
                )?;
                let path = super::out_path(cfg, &format!("model_d{factor}.json"));
                save_model(&model, &path)?;
                manifest.file(&path);
                super::print_written(&path);
                files.push(path);
            }
        }
    }
    manifest.write(&cfg.out_dir)?;
    Ok(files)
}
