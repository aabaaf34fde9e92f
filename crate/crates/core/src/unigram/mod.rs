//! Unigram language-model tokenizer over byte units.
//!
//! Training starts from a large vocabulary of frequent substrings whose
//! probabilities are fitted by EM over segmentation lattices. Each round then
//! prunes the tokens whose removal costs the least likelihood. Segmentation
//! is Viterbi decoding.

mod lattice;
mod trainer;
mod trie;

use std::collections::HashMap;

pub use lattice::{Lattice, ViterbiPath};
pub use trainer::{
    seed_vocabulary, train_unigram, train_unigram_on_pieces, train_unigram_traced, RoundTrace,
    SeedVocabulary, UnigramTrace, UnigramTrainerConfig,
};
pub use trie::ByteTrie;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tokcore::{bytelevel, SpecialTokenSet, TokenizerModel, Vocabulary};

/// Largest accepted deviation of the total probability mass from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Compiled Viterbi segmenter.
#[derive(Clone, Debug)]
pub struct UnigramEncoder<R> {
    trie: ByteTrie,
    ids: Vec<u32>,
    logprob: Vec<R>,
}

impl<R: Real> UnigramEncoder<R> {
    /// `logprobs` must cover every non-special vocabulary token exactly once
    /// (tokens in byte-mapped form) and sum to one in probability space.
    pub fn from_logprobs(
        vocab: &Vocabulary,
        specials: &SpecialTokenSet,
        logprobs: &[(String, f64)],
    ) -> Result<Self> {
        let mut given: HashMap<&str, f64> = HashMap::with_capacity(logprobs.len());
        for (t, lp) in logprobs {
            if !lp.is_finite() || *lp > 0.0 {
                return Err(Error::SchemaViolation(format!("token {t:?} has invalid logprob {lp}")));
            }
            if given.insert(t.as_str(), *lp).is_some() {
                return Err(Error::SchemaViolation(format!("token {t:?} has two logprobs")));
            }
        }
        let mut trie = ByteTrie::new();
        let mut ids = Vec::new();
        let mut logprob = Vec::new();
        let mut mass = 0.0f64;
        for (tok, id) in vocab.iter() {
            if specials.contains(tok) {
                continue;
            }
            let lp = given.remove(tok).ok_or_else(|| {
                Error::SchemaViolation(format!("token {tok:?} has no logprob"))
            })?;
            let bytes = bytelevel::decode_str(tok)
                .ok_or_else(|| Error::SchemaViolation(format!("token {tok:?} is not byte-mapped")))?;
            trie.insert(&bytes, ids.len() as u32);
            ids.push(id);
            logprob.push(R::from_f64_lossy(lp));
            mass += lp.exp();
        }
        if let Some(t) = given.keys().next() {
            return Err(Error::SchemaViolation(format!("logprob given for absent token {t:?}")));
        }
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::SchemaViolation(format!("token probabilities sum to {mass}, not 1")));
        }
        Ok(Self { trie, ids, logprob })
    }

    /// Viterbi decoding of one piece into vocabulary ids.
    pub fn segment_ids(&self, bytes: &[u8], out: &mut Vec<u32>) -> Result<()> {
        let lat = Lattice::build(bytes, &self.trie);
        match lat.viterbi(&self.logprob, None) {
            Some(path) => {
                out.extend(path.tokens.iter().map(|&t| self.ids[t as usize]));
                Ok(())
            }
            None => {
                let missing = (0..bytes.len())
                    .find(|&i| lat.edges_from(i).is_empty())
                    .map_or(0, |i| bytes[i]);
                Err(Error::Unsegmentable(bytelevel::byte_to_char(missing).to_string()))
            }
        }
    }
}

/// Segments one raw piece, returning vocabulary token strings.
pub fn segment_unigram(model: &TokenizerModel, piece: &str) -> Result<Vec<String>> {
    if model.logprobs().is_none() {
        return Err(Error::InvalidConfig("segment_unigram needs a Unigram model".into()));
    }
    let ids = model.encode_raw_bytes(piece.as_bytes())?;
    Ok(model.tokens(&ids)?.into_iter().map(str::to_string).collect())
}


#[cfg(test)]
mod tests {
    use super::oracle::{exhaustive_best, Prob};
    use super::*;
    use crate::tokcore::{ModelState, NormalizerConfig, PreTokenizerConfig};
    use num_bigint::BigUint;
    use proptest::prelude::*;

    /// Byte-level model whose non-byte probabilities are given; the 256 byte
    /// tokens share what is left, with the named bytes taking their stated mass.
    fn hand_model(probs: &[(&str, f64)]) -> TokenizerModel {
        let specials = SpecialTokenSet::unigram();
        let mut tokens: Vec<String> = specials.ordered().into_iter().map(str::to_string).collect();
        let stated: f64 = probs.iter().map(|p| p.1).sum();
        let rest = (1.0 - stated) / (256 - probs.iter().filter(|p| p.0.len() == 1).count()) as f64;
        let mut lps = Vec::new();
        for b in 0..=255u8 {
            let c = bytelevel::byte_to_char(b).to_string();
            let p = probs
                .iter()
                .find(|(t, _)| t.as_bytes() == [b])
                .map_or(rest, |x| x.1);
            tokens.push(c.clone());
            lps.push((c, p.ln()));
        }
        for (t, p) in probs.iter().filter(|p| p.0.len() > 1) {
            let m = bytelevel::encode_bytes(t.as_bytes());
            tokens.push(m.clone());
            lps.push((m, p.ln()));
        }
        TokenizerModel::new(
            Vocabulary::from_tokens(tokens).unwrap(),
            specials,
            NormalizerConfig::default(),
            PreTokenizerConfig::byte_level(),
            ModelState::Unigram { logprobs: lps },
        )
        .unwrap()
    }

    #[test]
    fn more_probable_single_token_wins() {
        // Remaining mass goes to the other 254 bytes.
        let m = hand_model(&[("a", 0.4), ("b", 0.3), ("ab", 0.2)]);
        assert_eq!(segment_unigram(&m, "ab").unwrap(), ["ab"]);
        assert_eq!(segment_unigram(&m, "a").unwrap(), ["a"]);
        assert!(segment_unigram(&m, "").unwrap().is_empty());
    }

    #[test]
    fn unnormalized_models_are_rejected() {
        let specials = SpecialTokenSet::unigram();
        let mut tokens: Vec<String> = specials.ordered().into_iter().map(str::to_string).collect();
        let mut lps = Vec::new();
        for b in 0..=255u8 {
            let c = bytelevel::byte_to_char(b).to_string();
            tokens.push(c.clone());
            lps.push((c, (0.5f64).ln()));
        }
        let r = TokenizerModel::new(
            Vocabulary::from_tokens(tokens).unwrap(),
            specials,
            NormalizerConfig::default(),
            PreTokenizerConfig::byte_level(),
            ModelState::Unigram { logprobs: lps },
        );
        assert!(matches!(r, Err(Error::SchemaViolation(_))));
    }

    fn toy_vocab() -> impl Strategy<Value = Vec<(Vec<u8>, u32)>> {
        // Units a, b, c always present; up to three longer tokens.
        let multi = prop::collection::btree_set("[abc]{2,4}", 0..=3);
        (prop::collection::vec(1u32..50, 3), multi, prop::collection::vec(1u32..50, 3)).prop_map(
            |(unit_w, multi, multi_w)| {
                let mut v: Vec<(Vec<u8>, u32)> =
                    [b'a', b'b', b'c'].iter().zip(unit_w).map(|(&u, w)| (vec![u], w)).collect();
                for (t, w) in multi.into_iter().zip(multi_w) {
                    v.push((t.into_bytes(), w));
                }
                v
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn viterbi_matches_exhaustive_enumeration(vocab in toy_vocab(), word in "[abc]{1,12}") {
            let total: u32 = vocab.iter().map(|v| v.1).sum();
            let exact: Vec<(Vec<u8>, Prob)> = vocab
                .iter()
                .map(|(t, w)| (t.clone(), Prob::new(BigUint::from(*w), BigUint::from(total))))
                .collect();
            let trie = ByteTrie::from_keys(vocab.iter().map(|v| v.0.as_slice()));
            let lp: Vec<f64> = vocab.iter().map(|v| (v.1 as f64 / total as f64).ln()).collect();
            let lat = Lattice::build(word.as_bytes(), &trie);
            let got: Vec<Vec<u8>> = lat
                .viterbi(&lp, None)
                .unwrap()
                .tokens
                .iter()
                .map(|&t| vocab[t as usize].0.clone())
                .collect();
            prop_assert_eq!(Some(got), exhaustive_best(word.as_bytes(), &exact));
        }
    }
}
