use super::bytelevel;
use super::normalizer::{normalize, NormalizerConfig};
use super::pretokenizer::{bert_words, byte_pieces, PreTokenizerConfig, PreTokenizerKind};
use super::vocab::{Algorithm, SpecialTokenSet, Vocabulary};
use crate::bpe::BpeEncoder;
use crate::error::{Error, Result};
use crate::unigram::UnigramEncoder;
use crate::wordpiece::WordPieceEncoder;

/// Algorithm-specific part of a trained model.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelState {
    /// Merge rules in creation order, tokens in mapped byte-level form.
    Bpe { merges: Vec<(String, String)> },
    WordPiece { prefix: String },
    /// Log-probability of every non-special token.
    Unigram { logprobs: Vec<(String, f64)> },
}

impl ModelState {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ModelState::Bpe { .. } => Algorithm::Bpe,
            ModelState::WordPiece { .. } => Algorithm::WordPiece,
            ModelState::Unigram { .. } => Algorithm::Unigram,
        }
    }
}

#[derive(Clone, Debug)]
enum Engine {
    Bpe(BpeEncoder),
    WordPiece(WordPieceEncoder),
    Unigram(UnigramEncoder<f64>),
}

/// A trained tokenizer. Immutable once built; cheap to share across threads.
#[derive(Clone, Debug)]
pub struct TokenizerModel {
    vocabulary: Vocabulary,
    specials: SpecialTokenSet,
    normalizer: NormalizerConfig,
    pretokenizer: PreTokenizerConfig,
    state: ModelState,
    engine: Engine,
    special_ids: Vec<u32>,
}

impl PartialEq for TokenizerModel {
    fn eq(&self, other: &Self) -> bool {
        self.vocabulary == other.vocabulary
            && self.specials == other.specials
            && self.normalizer == other.normalizer
            && self.pretokenizer == other.pretokenizer
            && self.state == other.state
    }
}

impl TokenizerModel {
    /// Validates every model invariant and compiles the segmentation engine.
    pub fn new(
        vocabulary: Vocabulary,
        specials: SpecialTokenSet,
        normalizer: NormalizerConfig,
        pretokenizer: PreTokenizerConfig,
        state: ModelState,
    ) -> Result<Self> {
        specials.validate()?;
        let algorithm = state.algorithm();
        let expected_kind = match algorithm {
            Algorithm::Bpe | Algorithm::Unigram => PreTokenizerKind::ByteLevel,
            Algorithm::WordPiece => PreTokenizerKind::BertStyle,
        };
        if pretokenizer.kind != expected_kind {
            return Err(Error::SchemaViolation(format!(
                "{algorithm} models require the {expected_kind:?} pre-tokenizer"
            )));
        }
        if pretokenizer.use_regex {
            return Err(Error::SchemaViolation("regex pre-splitting is not supported".into()));
        }
        let mut special_ids = Vec::new();
        for (expected, tok) in specials.ordered().into_iter().enumerate() {
            match vocabulary.id(tok) {
                Some(id) if id as usize == expected => special_ids.push(id),
                Some(id) => {
                    return Err(Error::SchemaViolation(format!(
                        "special token {tok:?} has id {id}, expected {expected}"
                    )))
                }
                None => {
                    return Err(Error::SchemaViolation(format!(
                        "special token {tok:?} is missing from the vocabulary"
                    )))
                }
            }
        }
        if expected_kind == PreTokenizerKind::ByteLevel {
            for b in 0..=255u8 {
                let c = bytelevel::byte_to_char(b).to_string();
                if !vocabulary.contains(&c) {
                    return Err(Error::SchemaViolation(format!(
                        "byte-level alphabet entry {c:?} (byte {b}) is missing"
                    )));
                }
            }
        }
        let engine = match &state {
            ModelState::Bpe { merges } => Engine::Bpe(BpeEncoder::new(&vocabulary, merges)?),
            ModelState::WordPiece { prefix } => {
                let unk = vocabulary.id(&specials.unk).expect("checked above");
                Engine::WordPiece(WordPieceEncoder::new(prefix, unk)?)
            }
            ModelState::Unigram { logprobs } => {
                Engine::Unigram(UnigramEncoder::from_logprobs(&vocabulary, &specials, logprobs)?)
            }
        };
        Ok(Self {
            vocabulary,
            specials,
            normalizer,
            pretokenizer,
            state,
            engine,
            special_ids,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.state.algorithm()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn specials(&self) -> &SpecialTokenSet {
        &self.specials
    }

    pub fn normalizer(&self) -> &NormalizerConfig {
        &self.normalizer
    }

    pub fn pretokenizer(&self) -> &PreTokenizerConfig {
        &self.pretokenizer
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn merges(&self) -> Option<&[(String, String)]> {
        match &self.state {
            ModelState::Bpe { merges } => Some(merges),
            _ => None,
        }
    }

    pub fn logprobs(&self) -> Option<&[(String, f64)]> {
        match &self.state {
            ModelState::Unigram { logprobs } => Some(logprobs),
            _ => None,
        }
    }

    pub fn wordpiece_prefix(&self) -> Option<&str> {
        match &self.state {
            ModelState::WordPiece { prefix } => Some(prefix),
            _ => None,
        }
    }

    pub fn is_byte_level(&self) -> bool {
        self.pretokenizer.kind == PreTokenizerKind::ByteLevel
    }

    pub fn unk_id(&self) -> u32 {
        self.special_ids[0]
    }

    pub fn special_id(&self, token: &str) -> Option<u32> {
        self.special_ids
            .iter()
            .copied()
            .find(|&id| self.vocabulary.token(id) == Some(token))
    }

    pub fn mask_id(&self) -> u32 {
        self.special_id(&self.specials.mask).expect("validated on construction")
    }

    pub fn is_special_id(&self, id: u32) -> bool {
        (id as usize) < self.special_ids.len()
    }

    /// Token strings of the vocabulary excluding special tokens.
    pub fn regular_tokens(&self) -> impl Iterator<Item = &str> {
        self.vocabulary.tokens()[self.special_ids.len()..]
            .iter()
            .map(String::as_str)
    }

    /// Raw form of a vocabulary token: inverse byte mapping for byte-level
    /// models, UTF-8 bytes otherwise (WordPiece `##` continuation prefixes kept).
    pub fn raw_token(&self, token: &str) -> Vec<u8> {
        if self.is_byte_level() {
            bytelevel::decode_str(token).unwrap_or_else(|| token.as_bytes().to_vec())
        } else {
            token.as_bytes().to_vec()
        }
    }

    /// normalize, pre-tokenize, segment.
    pub fn encode(&self, text: &str) -> Result<Vec<u32>> {
        let normalized = normalize(text, &self.normalizer);
        let mut ids = Vec::new();
        match &self.engine {
            Engine::Bpe(bpe) => {
                for piece in byte_pieces(&normalized, &self.pretokenizer) {
                    bpe.segment_ids(&piece, &mut ids);
                }
            }
            Engine::Unigram(uni) => {
                for piece in byte_pieces(&normalized, &self.pretokenizer) {
                    uni.segment_ids(&piece, &mut ids)?;
                }
            }
            Engine::WordPiece(wp) => {
                for word in bert_words(&normalized) {
                    wp.segment_ids(&self.vocabulary, word, &mut ids);
                }
            }
        }
        Ok(ids)
    }

    /// Encodes UTF-8 bytes, failing with `InvalidUtf8` otherwise.
    pub fn encode_utf8(&self, bytes: &[u8]) -> Result<Vec<u32>> {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::InvalidUtf8)?;
        self.encode(text)
    }

    /// Segments arbitrary bytes with a byte-level model, skipping
    /// normalization (which needs text).
    pub fn encode_raw_bytes(&self, bytes: &[u8]) -> Result<Vec<u32>> {
        let mut ids = Vec::new();
        match &self.engine {
            Engine::Bpe(bpe) => bpe.segment_ids(bytes, &mut ids),
            Engine::Unigram(uni) => uni.segment_ids(bytes, &mut ids)?,
            Engine::WordPiece(_) => {
                return Err(Error::InvalidConfig(
                    "raw byte encoding needs a byte-level model".into(),
                ))
            }
        }
        Ok(ids)
    }

    pub fn id_to_token(&self, id: u32) -> Result<&str> {
        self.vocabulary.token(id).ok_or(Error::UnknownId {
            id,
            size: self.vocabulary.len(),
        })
    }

    pub fn tokens(&self, ids: &[u32]) -> Result<Vec<&str>> {
        ids.iter().map(|&id| self.id_to_token(id)).collect()
    }

    /// Byte-level: concatenation with the byte mapping inverted (special
    /// tokens are emitted literally). WordPiece: `##` pieces attach to the
    /// previous token, other tokens are joined by single spaces.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let tokens = self.tokens(ids)?;
        match &self.engine {
            Engine::WordPiece(wp) => Ok(wp.join(&tokens)),
            _ => {
                let mut bytes = Vec::new();
                for (&id, tok) in ids.iter().zip(&tokens) {
                    if self.is_special_id(id) {
                        bytes.extend_from_slice(tok.as_bytes());
                    } else {
                        bytes.extend(bytelevel::decode_str(tok).ok_or_else(|| {
                            Error::SchemaViolation(format!("token {tok:?} is not byte-mapped"))
                        })?);
                    }
                }
                String::from_utf8(bytes).map_err(|_| Error::InvalidUtf8)
            }
        }
    }
}
