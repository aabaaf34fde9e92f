//! Subword tokenizers for disassembled binary code.
//!
//! Corpora of disassembled functions are loaded, cleaned and optionally
//! rewritten with sequential address identifiers. BPE, WordPiece and Unigram
//! models are trained on them and evaluated with intrinsic metrics. The
//! `masking` module turns a corpus into training datasets.

pub mod bpe;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod masking;
pub mod matrix;
pub mod preprocess;
pub mod scalar;
pub mod tokcore;
pub mod train;
pub mod unigram;
pub mod wordpiece;

pub use corpus::{Corpus, FunctionRecord, SignatureSpec, Variant};
pub use error::{Error, Result};
pub use scalar::{Fraction, Real};
pub use tokcore::{Algorithm, SpecialTokenSet, TokenizerModel, Vocabulary};
pub use train::{train, TrainOptions};

/// Unigram segmenter in the precision used by saved models.
pub type UnigramEncoder = unigram::UnigramEncoder<f64>;
/// Single-precision Unigram segmenter.
pub type UnigramEncoderF32 = unigram::UnigramEncoder<f32>;
