use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnicodeForm {
    #[default]
    #[serde(rename = "NFD")]
    Nfd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizerConfig {
    pub unicode_form: UnicodeForm,
    pub lowercase: bool,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        Self {
            unicode_form: UnicodeForm::Nfd,
            lowercase: true,
        }
    }
}

/// NFD decomposition followed by lowercasing. Lowercasing can emit a
/// precomposed character, so the result is decomposed once more to keep the
/// whole mapping idempotent.
pub fn normalize(text: &str, config: &NormalizerConfig) -> String {
    let decomposed: String = match config.unicode_form {
        UnicodeForm::Nfd => text.nfd().collect(),
    };
    if !config.lowercase {
        return decomposed;
    }
    let lowered = decomposed.to_lowercase();
    if unicode_normalization::is_nfd(&lowered) {
        lowered
    } else {
        lowered.nfd().collect()
    }
}

pub fn normalize_bytes(bytes: &[u8], config: &NormalizerConfig) -> Result<String> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::InvalidUtf8)?;
    Ok(normalize(text, config))
}
