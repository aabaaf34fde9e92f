//! Algorithm-independent training entry point.

use crate::bpe::{train_bpe, BpeTrainerConfig};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::scalar::Fraction;
use crate::tokcore::{Algorithm, TokenizerModel};
use crate::unigram::{train_unigram, UnigramTrainerConfig};
use crate::wordpiece::{train_wordpiece, WordPieceTrainerConfig};

/// Options shared by all trainers plus the Unigram-specific knobs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainOptions {
    pub algorithm: Algorithm,
    pub vocab_size: usize,
    pub lowercase: bool,
    pub prune_fraction: Fraction,
    pub seed_multiplier: usize,
}

impl TrainOptions {
    pub fn new(algorithm: Algorithm, vocab_size: usize) -> Self {
        Self {
            algorithm,
            vocab_size,
            lowercase: true,
            prune_fraction: Fraction::new(1, 5),
            seed_multiplier: 4,
        }
    }
}

pub fn train(corpus: &Corpus, options: &TrainOptions) -> Result<TokenizerModel> {
    match options.algorithm {
        Algorithm::Bpe => {
            let mut c = BpeTrainerConfig::new(options.vocab_size);
            c.normalizer.lowercase = options.lowercase;
            train_bpe(corpus, &c)
        }
        Algorithm::WordPiece => {
            let mut c = WordPieceTrainerConfig::new(options.vocab_size);
            c.normalizer.lowercase = options.lowercase;
            train_wordpiece(corpus, &c)
        }
        Algorithm::Unigram => {
            let mut c = UnigramTrainerConfig::new(options.vocab_size);
            c.normalizer.lowercase = options.lowercase;
            c.prune_fraction = options.prune_fraction;
            c.seed_multiplier = options.seed_multiplier;
            train_unigram(corpus, &c)
        }
    }
}
