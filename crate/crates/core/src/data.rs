//! Corpus, dataset, and model (de)serialization.
//!
//! Corpora are UTF-8 text files with one document per line (blank lines
//! skipped) or JSONL with a `"text"` field. Labeled datasets are JSONL with
//! `"text"` and `"label"` (1 = member). Model dumps are JSON with sorted
//! keys, so identical models produce identical bytes.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mia::{Label, LabeledSample};
use crate::ngram::{ContextCounts, NGramModel, TokenDistribution};
use crate::scalar::Scalar;
use crate::vocab::{tokenize, TokenId, Vocabulary};

/// Loads a corpus; `.jsonl`/`.json` extensions parse as JSONL records with a
/// `"text"` field, anything else as one document per non-blank line.
pub fn load_corpus(path: &Path) -> Result<Vec<String>> {
    let raw = fs::read_to_string(path)?;
    let jsonl = matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("json")
    );
    let mut docs = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if jsonl {
            #[derive(Deserialize)]
            struct Row {
                text: String,
            }
            let row: Row = serde_json::from_str(line)?;
            docs.push(row.text);
        } else {
            docs.push(line.to_string());
        }
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(docs)
}

/// A labeled dataset row as stored on disk (`label: 1` = member).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRow {
    pub text: String,
    pub label: u8,
}

/// Loads a JSONL dataset of `{"text", "label"}` rows.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRow>> {
    let raw = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(line)?);
    }
    if rows.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    Ok(rows)
}

/// Tokenizes dataset rows against a vocabulary.
pub fn dataset_to_samples(vocab: &Vocabulary, rows: &[DatasetRow]) -> Vec<LabeledSample> {
    rows.iter()
        .map(|r| LabeledSample {
            tokens: tokenize(vocab, &r.text),
            label: if r.label == 1 { Label::Member } else { Label::NonMember },
        })
        .collect()
}

/// Serializes dataset rows as JSONL.
pub fn write_dataset(path: &Path, rows: &[DatasetRow]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct VocabDump {
    tokens: Vec<String>,
    unk_id: TokenId,
    lowercase_map: Vec<TokenId>,
}

#[derive(Serialize, Deserialize)]
struct ModelDump<T> {
    schema: String,
    order: usize,
    alpha: T,
    vocab: VocabDump,
    /// `counts[k]["3 17"]["5"] = n`: context ids (space-joined) to token id
    /// to count, for each context length `k`.
    counts: Vec<BTreeMap<String, BTreeMap<String, u64>>>,
}

const MODEL_SCHEMA: &str = "ngram-model.v1";

/// Model as a canonical JSON string (sorted keys; byte-stable).
pub fn model_to_json<T: Scalar>(model: &NGramModel<T>) -> Result<String> {
    let vocab = model.vocab();
    let counts = model
        .levels()
        .iter()
        .map(|level| {
            let mut ctxs = BTreeMap::new();
            for (ctx, cc) in level {
                let key = ctx
                    .iter()
                    .map(|t| t.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                let mut by_token = BTreeMap::new();
                for (&t, &c) in &cc.by_token {
                    by_token.insert(t.to_string(), c);
                }
                ctxs.insert(key, by_token);
            }
            ctxs
        })
        .collect();
    let dump = ModelDump {
        schema: MODEL_SCHEMA.to_string(),
        order: model.order(),
        alpha: model.alpha(),
        vocab: VocabDump {
            tokens: vocab.tokens().to_vec(),
            unk_id: vocab.unk_id(),
            lowercase_map: vocab.lowercase_map().to_vec(),
        },
        counts,
    };
    let mut s = serde_json::to_string_pretty(&dump)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json<T: Scalar>(json: &str) -> Result<NGramModel<T>> {
    let dump: ModelDump<T> = serde_json::from_str(json)?;
    if dump.schema != MODEL_SCHEMA {
        return Err(Error::LengthMismatch(format!(
            "unsupported model schema {:?}",
            dump.schema
        )));
    }
    let vocab = Vocabulary::from_parts(dump.vocab.tokens, dump.vocab.unk_id, dump.vocab.lowercase_map)?;
    let parse_id = |s: &str| -> Result<TokenId> {
        s.parse::<TokenId>()
            .map_err(|e| Error::LengthMismatch(format!("bad token id {s:?}: {e}")))
    };
    let mut levels = Vec::with_capacity(dump.counts.len());
    for level in &dump.counts {
        let mut map: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
        for (ctx_key, by_token) in level {
            let ctx: Vec<TokenId> = if ctx_key.is_empty() {
                Vec::new()
            } else {
                ctx_key
                    .split(' ')
                    .map(parse_id)
                    .collect::<Result<Vec<_>>>()?
            };
            let mut cc = ContextCounts::default();
            for (tok, &c) in by_token {
                cc.by_token.insert(parse_id(tok)?, c);
                cc.total += c;
            }
            map.insert(ctx, cc);
        }
        levels.push(map);
    }
    NGramModel::from_parts(dump.order, dump.alpha, vocab, levels)
}

pub fn save_model<T: Scalar>(model: &NGramModel<T>, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<NGramModel<T>> {
    model_from_json(&fs::read_to_string(path)?)
}

/// Pretty JSON with a trailing newline (byte-stable given stable input).
pub fn write_json_pretty<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
