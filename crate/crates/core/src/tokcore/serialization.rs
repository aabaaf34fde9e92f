//! JSON model files.
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "algorithm": "bpe" | "wordpiece" | "unigram",
//!   "normalizer": {"unicode_form": "NFD", "lowercase": true},
//!   "pretokenizer": {"kind": "byte_level" | "bert_style", "add_prefix_space": false, "use_regex": false},
//!   "special_tokens": {"unk": ..., "bos": ..., "eos": ..., "pad": ..., "mask": ..., "cls"?, "sep"?, "nln"?},
//!   "vocab": [[token, id], ...],
//!   "merges": [[a, b], ...],            // bpe only
//!   "logprobs": [[token, logprob], ...], // unigram only
//!   "wordpiece_prefix": "##"            // wordpiece only
//! }
//! ```
//!
//! Byte-level tokens are stored in their mapped printable form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelState, TokenizerModel};
use super::normalizer::NormalizerConfig;
use super::pretokenizer::PreTokenizerConfig;
use super::vocab::{Algorithm, SpecialTokenSet, Vocabulary};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    algorithm: Algorithm,
    normalizer: NormalizerConfig,
    pretokenizer: PreTokenizerConfig,
    special_tokens: SpecialTokenSet,
    vocab: Vec<(String, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    merges: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logprobs: Option<Vec<(String, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wordpiece_prefix: Option<String>,
}

impl TokenizerModel {
    pub fn to_json(&self) -> String {
        let (merges, logprobs, wordpiece_prefix) = match self.state() {
            ModelState::Bpe { merges } => (Some(merges.clone()), None, None),
            ModelState::Unigram { logprobs } => (None, Some(logprobs.clone()), None),
            ModelState::WordPiece { prefix } => (None, None, Some(prefix.clone())),
        };
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            algorithm: self.algorithm(),
            normalizer: *self.normalizer(),
            pretokenizer: *self.pretokenizer(),
            special_tokens: self.specials().clone(),
            vocab: self.vocabulary().iter().map(|(t, i)| (t.to_string(), i)).collect(),
            merges,
            logprobs,
            wordpiece_prefix,
        };
        let mut out = serde_json::to_string_pretty(&file).expect("model serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::SchemaViolation(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let state = match (file.algorithm, file.merges, file.logprobs, file.wordpiece_prefix) {
            (Algorithm::Bpe, Some(merges), None, None) => ModelState::Bpe { merges },
            (Algorithm::Unigram, None, Some(logprobs), None) => ModelState::Unigram { logprobs },
            (Algorithm::WordPiece, None, None, Some(prefix)) => ModelState::WordPiece { prefix },
            (alg, ..) => {
                return Err(Error::SchemaViolation(format!(
                    "{alg} models need exactly their own state block"
                )))
            }
        };
        TokenizerModel::new(
            Vocabulary::from_pairs(file.vocab)?,
            file.special_tokens,
            file.normalizer,
            file.pretokenizer,
            state,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes).map_err(|_| Error::InvalidUtf8)?;
        TokenizerModel::from_json(&text)
    }
}

pub fn save_model(model: &TokenizerModel, path: impl AsRef<Path>) -> Result<()> {
    model.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TokenizerModel> {
    TokenizerModel::load(path)
}
