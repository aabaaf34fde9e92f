//! Intrinsic metrics: fertility, vocabulary overlap and OOV rate.

pub(crate) mod emit;

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use emit::{emit_report, render_report, Report, ReportFormat};

use crate::corpus::{Corpus, Variant};
use crate::error::{Error, Result};
use crate::tokcore::{Algorithm, TokenizerModel};

/// Tokens per instruction for one (tokenizer, corpus) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FertilityReport {
    pub algorithm: Algorithm,
    pub vocab_size: usize,
    pub variant: Variant,
    pub total_tokens: u64,
    pub total_instructions: u64,
    pub fertility: f64,
}

impl FertilityReport {
    /// `total_tokens / total_instructions` as an exact ratio.
    pub fn exact(&self) -> Ratio<u64> {
        Ratio::new(self.total_tokens, self.total_instructions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FertilityOptions {
    /// Count unknown-token emissions (the only special token encoding can produce).
    pub count_unk: bool,
}

impl Default for FertilityOptions {
    fn default() -> Self {
        Self { count_unk: true }
    }
}

/// Number of tokens the model emits for each record's text.
fn token_counts(model: &TokenizerModel, corpus: &Corpus) -> Result<Vec<(u64, u64)>> {
    let unk = model.unk_id();
    corpus
        .records
        .par_iter()
        .map(|r| {
            let ids = model.encode(&r.text())?;
            let unks = ids.iter().filter(|&&i| i == unk).count() as u64;
            Ok((ids.len() as u64, unks))
        })
        .collect()
}

pub fn fertility(model: &TokenizerModel, corpus: &Corpus) -> Result<FertilityReport> {
    fertility_with(model, corpus, FertilityOptions::default())
}

pub fn fertility_with(
    model: &TokenizerModel,
    corpus: &Corpus,
    options: FertilityOptions,
) -> Result<FertilityReport> {
    if corpus.records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let counts = token_counts(model, corpus)?;
    let total_tokens: u64 = counts
        .iter()
        .map(|(n, unk)| if options.count_unk { *n } else { n - unk })
        .sum();
    let total_instructions = corpus.instruction_count() as u64;
    Ok(FertilityReport {
        algorithm: model.algorithm(),
        vocab_size: model.vocab_size(),
        variant: corpus.variant,
        total_tokens,
        total_instructions,
        fertility: total_tokens as f64 / total_instructions as f64,
    })
}

/// Shared-vocabulary statistics across tokenizers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub tokenizer_ids: Vec<String>,
    pub intersection_size: usize,
    pub union_size: usize,
    pub jaccard_percent: f64,
    /// `pairwise[i][j]` is the Jaccard percentage of tokenizers `i` and `j`.
    pub pairwise: Vec<Vec<f64>>,
    pub pairwise_intersection: Vec<Vec<usize>>,
    pub pairwise_union: Vec<Vec<usize>>,
}

/// `100 * |a ∩ b| / |a ∪ b|`, with two empty sets counted as identical.
pub fn jaccard_percent(intersection: usize, union: usize) -> f64 {
    if union == 0 {
        100.0
    } else {
        100.0 * intersection as f64 / union as f64
    }
}

/// Non-special vocabulary in raw form: byte-level tokens inverse-mapped,
/// WordPiece continuation prefixes kept.
pub fn raw_vocabulary(model: &TokenizerModel) -> BTreeSet<Vec<u8>> {
    model.regular_tokens().map(|t| model.raw_token(t)).collect()
}

/// Overlap over explicit token sets.
pub fn overlap_of_sets(ids: Vec<String>, sets: &[BTreeSet<Vec<u8>>]) -> Result<OverlapReport> {
    if sets.len() < 2 {
        return Err(Error::TooFewModels(sets.len()));
    }
    if ids.len() != sets.len() {
        return Err(Error::InvalidConfig(format!(
            "{} tokenizer ids for {} vocabularies",
            ids.len(),
            sets.len()
        )));
    }
    let mut inter: BTreeSet<&Vec<u8>> = sets[0].iter().collect();
    let mut union: BTreeSet<&Vec<u8>> = BTreeSet::new();
    for s in sets {
        inter.retain(|t| s.contains(*t));
        union.extend(s.iter());
    }
    let k = sets.len();
    let mut pairwise = vec![vec![0.0; k]; k];
    let mut pi = vec![vec![0usize; k]; k];
    let mut pu = vec![vec![0usize; k]; k];
    for i in 0..k {
        for j in i..k {
            let n = sets[i].intersection(&sets[j]).count();
            let u = sets[i].len() + sets[j].len() - n;
            let p = jaccard_percent(n, u);
            for (a, b) in [(i, j), (j, i)] {
                pairwise[a][b] = p;
                pi[a][b] = n;
                pu[a][b] = u;
            }
        }
    }
    Ok(OverlapReport {
        tokenizer_ids: ids,
        intersection_size: inter.len(),
        union_size: union.len(),
        jaccard_percent: jaccard_percent(inter.len(), union.len()),
        pairwise,
        pairwise_intersection: pi,
        pairwise_union: pu,
    })
}

/// Overlap of labelled models.
pub fn vocab_overlap(models: &[(String, &TokenizerModel)]) -> Result<OverlapReport> {
    if models.len() < 2 {
        return Err(Error::TooFewModels(models.len()));
    }
    let sets: Vec<_> = models.iter().map(|(_, m)| raw_vocabulary(m)).collect();
    overlap_of_sets(models.iter().map(|(id, _)| id.clone()).collect(), &sets)
}

/// Unknown-token emissions over an encoded corpus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OovReport {
    pub algorithm: Algorithm,
    pub vocab_size: usize,
    pub unk_token_count: u64,
    pub total_token_count: u64,
    pub oov_rate: f64,
    /// Set when nothing was encoded, so the rate is a convention rather than a measurement.
    pub empty_input: bool,
}

fn oov_report(model: &TokenizerModel, unk: u64, total: u64) -> OovReport {
    OovReport {
        algorithm: model.algorithm(),
        vocab_size: model.vocab_size(),
        unk_token_count: unk,
        total_token_count: total,
        oov_rate: if total == 0 { 0.0 } else { unk as f64 / total as f64 },
        empty_input: total == 0,
    }
}

pub fn oov_rate(model: &TokenizerModel, corpus: &Corpus) -> Result<OovReport> {
    let counts = token_counts(model, corpus)?;
    let total = counts.iter().map(|c| c.0).sum();
    let unk = counts.iter().map(|c| c.1).sum();
    Ok(oov_report(model, unk, total))
}

/// OOV rate over arbitrary byte strings. Byte-level models segment the raw
/// bytes; WordPiece models need UTF-8 and reject other input.
pub fn oov_rate_on_bytes(model: &TokenizerModel, inputs: &[Vec<u8>]) -> Result<OovReport> {
    let unk = model.unk_id();
    let counts: Vec<(u64, u64)> = inputs
        .par_iter()
        .map(|b| {
            let ids = if model.is_byte_level() {
                model.encode_raw_bytes(b)?
            } else {
                model.encode_utf8(b)?
            };
            Ok((ids.len() as u64, ids.iter().filter(|&&i| i == unk).count() as u64))
        })
        .collect::<Result<_>>()?;
    Ok(oov_report(
        model,
        counts.iter().map(|c| c.1).sum(),
        counts.iter().map(|c| c.0).sum(),
    ))
}

/// `count` byte strings with lengths uniform in `1..=max_len`, drawn from a
/// ChaCha8 stream seeded with `seed`.
pub fn random_byte_strings(count: usize, max_len: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_len = max_len.max(1);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_len);
            (0..n).map(|_| rng.gen::<u8>()).collect()
        })
        .collect()
}
