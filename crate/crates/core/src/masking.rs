//! Masked-token and signature-prediction datasets.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, FunctionRecord};
use crate::error::{Error, Result};
use crate::scalar::{round_half_up_scaled, Fraction};
use crate::tokcore::TokenizerModel;

/// Label value at positions that are not predicted.
pub const IGNORE_LABEL: i64 = -100;

pub fn default_rate() -> Fraction {
    Fraction::new(3, 20)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub input_ids: Vec<u32>,
    pub labels: Vec<i64>,
    pub mask_positions: Vec<usize>,
}

impl MaskedExample {
    /// The original encoding: labels written back at the masked positions.
    pub fn reconstruct(&self) -> Vec<u32> {
        let mut ids = self.input_ids.clone();
        for &p in &self.mask_positions {
            ids[p] = self.labels[p] as u32;
        }
        ids
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureExample {
    pub input_text: String,
    pub target_text: String,
}

/// `max(1, round_half_up(rate * n))`.
pub fn mask_count(n: usize, rate: Fraction) -> usize {
    round_half_up_scaled(rate, n).max(1)
}

/// Seed for record `index`: the first eight bytes (little endian) of
/// SHA-256 over the global seed and the index, both as little-endian u64.
pub fn record_seed(global_seed: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn validate_rate(rate: Fraction) -> Result<()> {
    if *rate.numer() == 0 || rate >= Fraction::from_integer(1) {
        return Err(Error::InvalidConfig(format!("mask rate {rate} must lie in (0, 1)")));
    }
    Ok(())
}

/// Masks an id sequence: positions sampled uniformly without replacement
/// from a ChaCha8 stream seeded with `seed`.
pub fn mask_ids(ids: &[u32], mask_id: u32, rate: Fraction, seed: u64) -> Result<MaskedExample> {
    validate_rate(rate)?;
    let n = ids.len();
    if n == 0 {
        return Err(Error::EmptyEncoding);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = rand::seq::index::sample(&mut rng, n, mask_count(n, rate)).into_vec();
    positions.sort_unstable();
    let mut input_ids = ids.to_vec();
    let mut labels = vec![IGNORE_LABEL; n];
    for &p in &positions {
        labels[p] = ids[p] as i64;
        input_ids[p] = mask_id;
    }
    Ok(MaskedExample {
        input_ids,
        labels,
        mask_positions: positions,
    })
}

pub fn mask_function(
    model: &TokenizerModel,
    record: &FunctionRecord,
    rate: Fraction,
    seed: u64,
) -> Result<MaskedExample> {
    let ids = model.encode(&record.text())?;
    mask_ids(&ids, model.mask_id(), rate, seed)
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for l in lines {
        w.write_all(l.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Masks every record (record `i` uses `record_seed(seed, i)`) as JSONL lines.
pub fn mlm_lines(model: &TokenizerModel, corpus: &Corpus, rate: Fraction, seed: u64) -> Result<Vec<String>> {
    validate_rate(rate)?;
    corpus
        .records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let ex = mask_function(model, r, rate, record_seed(seed, i as u64))?;
            Ok(serde_json::to_string(&ex)?)
        })
        .collect()
}

/// Writes one `{input_ids, labels, mask_positions}` line per function.
/// Returns the number of lines.
pub fn emit_mlm_dataset(
    model: &TokenizerModel,
    corpus: &Corpus,
    rate: Fraction,
    seed: u64,
    path: impl AsRef<Path>,
) -> Result<usize> {
    let lines = mlm_lines(model, corpus, rate, seed)?;
    write_lines(path.as_ref(), &lines)?;
    Ok(lines.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignatureSummary {
    pub written: usize,
    pub skipped: usize,
}

pub fn signature_examples(corpus: &Corpus) -> (Vec<SignatureExample>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for r in &corpus.records {
        match r.signature() {
            Some(sig) => out.push(SignatureExample {
                input_text: r.disassembly(),
                target_text: sig.render(),
            }),
            None => skipped += 1,
        }
    }
    (out, skipped)
}

/// Writes `{input_text, target_text}` for every record with a signature.
pub fn emit_signature_dataset(corpus: &Corpus, path: impl AsRef<Path>) -> Result<SignatureSummary> {
    let (examples, skipped) = signature_examples(corpus);
    let lines = examples
        .iter()
        .map(serde_json::to_string)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    write_lines(path.as_ref(), &lines)?;
    Ok(SignatureSummary {
        written: lines.len(),
        skipped,
    })
}
