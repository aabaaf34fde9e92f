use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bpe,
    WordPiece,
    Unigram,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Bpe, Algorithm::Unigram, Algorithm::WordPiece];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Bpe => "bpe",
            Algorithm::WordPiece => "wordpiece",
            Algorithm::Unigram => "unigram",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpe" => Ok(Algorithm::Bpe),
            "wordpiece" => Ok(Algorithm::WordPiece),
            "unigram" => Ok(Algorithm::Unigram),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Special token strings. The optional entries are only used by some
/// algorithms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokenSet {
    pub unk: String,
    pub bos: String,
    pub eos: String,
    pub pad: String,
    pub mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cls: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nln: Option<String>,
}

impl SpecialTokenSet {
    pub fn bpe() -> Self {
        Self {
            unk: "<unk>".into(),
            bos: "<s>".into(),
            eos: "</s>".into(),
            pad: "[PAD]".into(),
            mask: "[MASK]".into(),
            cls: None,
            sep: None,
            nln: None,
        }
    }

    pub fn unigram() -> Self {
        Self {
            cls: Some("<cls>".into()),
            sep: Some("<sep>".into()),
            ..Self::bpe()
        }
    }

    pub fn wordpiece() -> Self {
        Self {
            unk: "[UNK]".into(),
            cls: Some("<cls>".into()),
            sep: Some("<sep>".into()),
            nln: Some("<nln>".into()),
            ..Self::bpe()
        }
    }

    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Bpe => Self::bpe(),
            Algorithm::WordPiece => Self::wordpiece(),
            Algorithm::Unigram => Self::unigram(),
        }
    }

    /// Tokens in id order: unk, eos, bos, cls, sep, nln, pad, mask (absent
    /// optional entries skipped).
    pub fn ordered(&self) -> Vec<&str> {
        let mut out = vec![self.unk.as_str(), self.eos.as_str(), self.bos.as_str()];
        out.extend(
            [&self.cls, &self.sep, &self.nln]
                .into_iter()
                .flatten()
                .map(String::as_str),
        );
        out.push(&self.pad);
        out.push(&self.mask);
        out
    }

    pub fn len(&self) -> usize {
        self.ordered().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ordered().contains(&token)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.ordered();
        for (i, t) in all.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::SchemaViolation("special token is empty".into()));
            }
            if all[..i].contains(t) {
                return Err(Error::SchemaViolation(format!("special token {t:?} is duplicated")));
            }
        }
        Ok(())
    }
}

/// Bijective token <-> id map with dense ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), id as u32).is_some() {
                return Err(Error::SchemaViolation(format!("token {t:?} appears twice in the vocabulary")));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Builds from explicit `(token, id)` pairs; ids must cover `0..n` exactly.
    pub fn from_pairs(pairs: Vec<(String, u32)>) -> Result<Self> {
        let n = pairs.len();
        let mut slots: Vec<Option<String>> = vec![None; n];
        for (t, id) in pairs {
            let slot = slots
                .get_mut(id as usize)
                .ok_or_else(|| Error::SchemaViolation(format!("token id {id} is not dense in 0..{n}")))?;
            if slot.is_some() {
                return Err(Error::SchemaViolation(format!("token id {id} is assigned twice")));
            }
            *slot = Some(t);
        }
        Vocabulary::from_tokens(slots.into_iter().map(|s| s.expect("dense")).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.tokens.iter().enumerate().map(|(i, t)| (t.as_str(), i as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_orders_follow_algorithm_presets() {
        assert_eq!(SpecialTokenSet::bpe().ordered(), ["<unk>", "</s>", "<s>", "[PAD]", "[MASK]"]);
        assert_eq!(
            SpecialTokenSet::unigram().ordered(),
            ["<unk>", "</s>", "<s>", "<cls>", "<sep>", "[PAD]", "[MASK]"]
        );
        assert_eq!(
            SpecialTokenSet::wordpiece().ordered(),
            ["[UNK]", "</s>", "<s>", "<cls>", "<sep>", "<nln>", "[PAD]", "[MASK]"]
        );
    }

    #[test]
    fn duplicate_specials_rejected() {
        let mut s = SpecialTokenSet::bpe();
        s.pad = "<unk>".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn vocabulary_bijection() {
        let v = Vocabulary::from_pairs(vec![("b".into(), 1), ("a".into(), 0)]).unwrap();
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.token(1), Some("b"));
        assert!(Vocabulary::from_pairs(vec![("a".into(), 0), ("b".into(), 2)]).is_err());
        assert!(Vocabulary::from_pairs(vec![("a".into(), 0), ("b".into(), 0)]).is_err());
        assert!(Vocabulary::from_tokens(vec!["a".into(), "a".into()]).is_err());
    }
}
