//! Infrastructure shared by the three tokenizer algorithms.

pub mod bytelevel;
mod model;
mod normalizer;
mod pretokenizer;
mod serialization;
mod vocab;

use std::collections::HashMap;

use rayon::prelude::*;

pub use model::{ModelState, TokenizerModel};
pub use normalizer::{normalize, normalize_bytes, NormalizerConfig, UnicodeForm};
pub use pretokenizer::{
    bert_words, byte_pieces, is_punctuation, pretokenize, PreTokenizerConfig, PreTokenizerKind,
};
pub use serialization::{load_model, save_model, FORMAT_VERSION};
pub use vocab::{Algorithm, SpecialTokenSet, Vocabulary};

use crate::corpus::Corpus;

/// Weighted training units: distinct pieces with their corpus frequency,
/// sorted by content so training is independent of hash order.
pub type WeightedPieces<T> = Vec<(T, u64)>;

fn sorted<T: Ord>(counts: HashMap<T, u64>) -> WeightedPieces<T> {
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    v
}

/// Byte-level training pieces: each function's normalized text, pre-tokenized.
pub fn corpus_byte_pieces(
    corpus: &Corpus,
    normalizer: &NormalizerConfig,
    pretokenizer: &PreTokenizerConfig,
) -> WeightedPieces<Vec<u8>> {
    let texts: Vec<String> = corpus
        .records
        .par_iter()
        .map(|r| normalize(&r.text(), normalizer))
        .collect();
    let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
    for text in &texts {
        for piece in byte_pieces(text, pretokenizer) {
            *counts.entry(piece.into_owned()).or_default() += 1;
        }
    }
    sorted(counts)
}

/// BERT-style training words with frequencies.
pub fn corpus_words(corpus: &Corpus, normalizer: &NormalizerConfig) -> WeightedPieces<String> {
    let texts: Vec<String> = corpus
        .records
        .par_iter()
        .map(|r| normalize(&r.text(), normalizer))
        .collect();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for text in &texts {
        for w in bert_words(text) {
            if let Some(c) = counts.get_mut(w) {
                *c += 1;
            } else {
                counts.insert(w.to_string(), 1);
            }
        }
    }
    sorted(counts)
}
