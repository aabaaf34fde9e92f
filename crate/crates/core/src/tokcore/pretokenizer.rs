use serde::{Deserialize, Serialize};

use super::bytelevel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreTokenizerKind {
    ByteLevel,
    BertStyle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreTokenizerConfig {
    pub kind: PreTokenizerKind,
    pub add_prefix_space: bool,
    pub use_regex: bool,
}

impl PreTokenizerConfig {
    pub fn byte_level() -> Self {
        Self {
            kind: PreTokenizerKind::ByteLevel,
            add_prefix_space: false,
            use_regex: false,
        }
    }

    pub fn bert_style() -> Self {
        Self {
            kind: PreTokenizerKind::BertStyle,
            add_prefix_space: false,
            use_regex: false,
        }
    }
}

/// Raw byte pieces for a byte-level pre-tokenizer. Without regex splitting
/// the whole text is a single piece, spaces and line breaks included.
pub fn byte_pieces<'a>(text: &'a str, config: &PreTokenizerConfig) -> Vec<std::borrow::Cow<'a, [u8]>> {
    if text.is_empty() {
        return Vec::new();
    }
    if config.add_prefix_space && !text.starts_with(' ') {
        let mut owned = Vec::with_capacity(text.len() + 1);
        owned.push(b' ');
        owned.extend_from_slice(text.as_bytes());
        vec![owned.into()]
    } else {
        vec![text.as_bytes().into()]
    }
}

/// BERT-style split: whitespace separates words and every punctuation
/// character becomes a word of its own.
pub fn bert_words(text: &str) -> Vec<&str> {
    let mut words = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                words.push(&text[s..i]);
            }
        } else if is_punctuation(c) {
            if let Some(s) = start.take() {
                words.push(&text[s..i]);
            }
            words.push(&text[i..i + c.len_utf8()]);
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        words.push(&text[s..]);
    }
    words
}

/// ASCII punctuation plus the Unicode general-punctuation and CJK symbol blocks.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || ('\u{2000}'..='\u{206F}').contains(&c) && !c.is_whitespace()
        || ('\u{3000}'..='\u{303F}').contains(&c) && !c.is_whitespace()
}

/// Pieces in their model-facing string form: byte-mapped for byte-level,
/// plain words for BERT-style.
pub fn pretokenize(text: &str, config: &PreTokenizerConfig) -> Vec<String> {
    match config.kind {
        PreTokenizerKind::ByteLevel => byte_pieces(text, config)
            .iter()
            .map(|p| bytelevel::encode_bytes(p))
            .collect(),
        PreTokenizerKind::BertStyle => bert_words(text).into_iter().map(str::to_string).collect(),
    }
}
