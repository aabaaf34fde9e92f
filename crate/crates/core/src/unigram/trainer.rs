use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use super::lattice::Lattice;
use super::trie::ByteTrie;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::{log_add_exp, Fraction, Real};
use crate::tokcore::{
    bytelevel, corpus_byte_pieces, ModelState, NormalizerConfig, PreTokenizerConfig,
    SpecialTokenSet, TokenizerModel, Vocabulary,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnigramTrainerConfig {
    pub vocab_size: usize,
    pub specials: SpecialTokenSet,
    pub normalizer: NormalizerConfig,
    pub pretokenizer: PreTokenizerConfig,
    /// Share of prunable tokens removed per round.
    pub prune_fraction: Fraction,
    pub em_iters_per_round: usize,
    /// Longest seed substring, in bytes.
    pub max_piece_len: usize,
    /// Minimum occurrence count of a seed substring.
    pub min_count: u64,
    /// Seed candidates are capped at this multiple of `vocab_size`.
    pub seed_multiplier: usize,
}

impl UnigramTrainerConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            specials: SpecialTokenSet::unigram(),
            normalizer: NormalizerConfig::default(),
            pretokenizer: PreTokenizerConfig::byte_level(),
            prune_fraction: Fraction::new(1, 5),
            em_iters_per_round: 2,
            max_piece_len: 16,
            min_count: 2,
            seed_multiplier: 4,
        }
    }

    pub fn floor(&self) -> usize {
        self.specials.len() + 256
    }

    fn validate(&self) -> Result<()> {
        let f = self.prune_fraction;
        if *f.numer() == 0 || f >= Fraction::from_integer(1) {
            return Err(Error::InvalidConfig("prune fraction must lie in (0, 1)".into()));
        }
        if self.em_iters_per_round == 0 || self.max_piece_len < 1 || self.seed_multiplier == 0 {
            return Err(Error::InvalidConfig(
                "EM iterations, max piece length and seed multiplier must be positive".into(),
            ));
        }
        if self.vocab_size < self.floor() {
            return Err(Error::VocabTooSmall {
                requested: self.vocab_size,
                floor: self.floor(),
            });
        }
        Ok(())
    }
}

/// Initial candidates: frequent multi-byte substrings ranked by `count * len`,
/// plus the count of every byte seen in the corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedVocabulary {
    pub candidates: Vec<(Vec<u8>, u64)>,
    pub byte_counts: [u64; 256],
}

impl SeedVocabulary {
    pub fn seen_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(|&b| self.byte_counts[b as usize] > 0)
    }
}

/// Counts substrings level by level: a substring of length `L + 1` can only
/// be frequent if both of its length-`L` sub-substrings are.
pub fn seed_vocabulary(
    pieces: &[(Vec<u8>, u64)],
    max_len: usize,
    min_count: u64,
    cap: usize,
) -> SeedVocabulary {
    let mut byte_counts = [0u64; 256];
    for (p, w) in pieces {
        for &b in p {
            byte_counts[b as usize] += w;
        }
    }
    // frequent[k][i]: the (L)-gram starting at i in piece k is frequent.
    let mut frequent: Vec<Vec<bool>> = pieces
        .iter()
        .map(|(p, _)| p.iter().map(|&b| byte_counts[b as usize] >= min_count).collect())
        .collect();
    let mut candidates: Vec<(Vec<u8>, u64)> = Vec::new();
    for len in 2..=max_len {
        let mut counts: HashMap<&[u8], u64> = HashMap::new();
        for ((p, w), freq) in pieces.iter().zip(&frequent) {
            for i in 0..(p.len() + 1).saturating_sub(len) {
                if freq[i] && freq[i + 1] {
                    *counts.entry(&p[i..i + len]).or_default() += w;
                }
            }
        }
        counts.retain(|_, c| *c >= min_count);
        if counts.is_empty() {
            break;
        }
        for ((p, _), freq) in pieces.iter().zip(frequent.iter_mut()) {
            let n = (p.len() + 1).saturating_sub(len);
            let next: Vec<bool> = (0..n)
                .map(|i| freq[i] && freq[i + 1] && counts.contains_key(&p[i..i + len]))
                .collect();
            *freq = next;
        }
        candidates.extend(counts.into_iter().map(|(s, c)| (s.to_vec(), c)));
    }
    candidates.sort_by(|a, b| {
        let sa = a.1 as u128 * a.0.len() as u128;
        let sb = b.1 as u128 * b.0.len() as u128;
        sb.cmp(&sa).then_with(|| a.0.cmp(&b.0))
    });
    candidates.truncate(cap);
    SeedVocabulary {
        candidates,
        byte_counts,
    }
}

/// Diagnostics of one EM-then-prune round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTrace {
    /// Corpus log-likelihood under the parameters entering each EM iteration.
    pub log_likelihoods: Vec<f64>,
    /// Total probability mass after each M-step.
    pub masses: Vec<f64>,
    /// Multi-byte tokens alive after EM.
    pub multi_tokens: usize,
    pub pruned: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnigramTrace {
    pub seed_candidates: usize,
    pub rounds: Vec<RoundTrace>,
}

struct Model<R> {
    /// Indices 0..256 are the single bytes.
    tokens: Vec<Vec<u8>>,
    logprob: Vec<R>,
    trie: ByteTrie,
}

impl<R: Real> Model<R> {
    fn new(tokens: Vec<Vec<u8>>, logprob: Vec<R>) -> Self {
        let trie = ByteTrie::from_keys(tokens.iter().map(Vec::as_slice));
        Self { tokens, logprob, trie }
    }

    fn retain(&mut self, keep: &[bool]) {
        let mut tokens = Vec::new();
        let mut lp = Vec::new();
        for (i, k) in keep.iter().enumerate() {
            if *k || i < 256 {
                tokens.push(std::mem::take(&mut self.tokens[i]));
                lp.push(self.logprob[i]);
            }
        }
        *self = Model::new(tokens, lp);
        normalize_logprobs(&mut self.logprob);
    }

    fn multi(&self) -> usize {
        self.tokens.len() - 256
    }
}

fn normalize_logprobs<R: Real>(lp: &mut [R]) {
    let z = lp.iter().fold(R::neg_infinity(), |acc, &x| log_add_exp(acc, x));
    for x in lp.iter_mut() {
        *x -= z;
    }
}

fn chunk_size(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

/// Expected token counts and corpus log-likelihood. Chunks are fixed by the
/// input size and reduced in order, so results do not depend on the thread
/// count.
fn e_step<R: Real>(pieces: &[(Vec<u8>, u64)], model: &Model<R>) -> (Vec<R>, R) {
    let parts: Vec<(Vec<R>, R)> = pieces
        .par_chunks(chunk_size(pieces.len()))
        .map(|chunk| {
            let mut exp = vec![R::zero(); model.tokens.len()];
            let mut ll = R::zero();
            for (p, w) in chunk {
                let lat = Lattice::build(p, &model.trie);
                let w = R::from_u64(*w).expect("weight fits");
                ll += w * lat.forward_backward(&model.logprob, w, &mut exp);
            }
            (exp, ll)
        })
        .collect();
    let mut total = vec![R::zero(); model.tokens.len()];
    let mut ll = R::zero();
    for (exp, l) in parts {
        for (t, e) in total.iter_mut().zip(exp) {
            *t += e;
        }
        ll += l;
    }
    (total, ll)
}

/// Maximum-likelihood update. Returns the keep mask: multi-byte tokens whose
/// expected count is zero (or underflows) are dropped.
fn m_step<R: Real>(model: &mut Model<R>, expected: &[R], seen: &[bool; 256]) -> Vec<bool> {
    let total: R = expected.iter().copied().sum();
    let mut keep = vec![true; expected.len()];
    for (i, &e) in expected.iter().enumerate() {
        model.logprob[i] = if i < 256 {
            if seen[i] {
                (e.max(R::min_positive_value()) / total).ln()
            } else {
                R::neg_infinity()
            }
        } else {
            // Also drops counts so small that the log underflows.
            let lp = (e / total).ln();
            if e <= R::zero() || !lp.is_finite() {
                keep[i] = false;
            }
            lp
        };
    }
    keep
}

/// Tokens on either side of an occurrence that are re-segmented with it.
const LOSS_WINDOW_RADIUS: usize = 2;

/// Likelihood lost by removing each multi-byte token. Every Viterbi
/// occurrence is re-segmented without the token, together with up to
/// `LOSS_WINDOW_RADIUS` neighbouring tokens on each side, and the score drop
/// is charged to the token. Unused tokens lose nothing.
fn removal_losses<R: Real>(pieces: &[(Vec<u8>, u64)], model: &Model<R>) -> Vec<(f64, usize)> {
    let parts: Vec<Vec<f64>> = pieces
        .par_chunks(chunk_size(pieces.len()))
        .map(|chunk| {
            let mut loss = vec![0f64; model.tokens.len()];
            for (p, w) in chunk {
                let lat = Lattice::build(p, &model.trie);
                let Some(path) = lat.viterbi(&model.logprob, None) else {
                    continue;
                };
                let mut starts = Vec::with_capacity(path.tokens.len() + 1);
                let mut pos = 0usize;
                for &l in &path.lengths {
                    starts.push(pos);
                    pos += l as usize;
                }
                starts.push(pos);
                let n = path.tokens.len();
                for (k, &t) in path.tokens.iter().enumerate() {
                    if (t as usize) < 256 {
                        continue;
                    }
                    let lo = k.saturating_sub(LOSS_WINDOW_RADIUS);
                    let hi = (k + LOSS_WINDOW_RADIUS + 1).min(n);
                    let here: f64 = path.tokens[lo..hi]
                        .iter()
                        .map(|&x| model.logprob[x as usize].to_f64_lossy())
                        .sum();
                    let window = Lattice::build(&p[starts[lo]..starts[hi]], &model.trie);
                    let alt = window
                        .viterbi(&model.logprob, Some(t))
                        .map_or(f64::NEG_INFINITY, |q| q.score.to_f64_lossy());
                    loss[t as usize] += *w as f64 * (here - alt);
                }
            }
            loss
        })
        .collect();
    let mut total = vec![0f64; model.tokens.len()];
    for c in parts {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    (256..model.tokens.len()).map(|i| (total[i], i)).collect()
}

fn prune<R: Real>(model: &mut Model<R>, pieces: &[(Vec<u8>, u64)], target_multi: usize, frac: Fraction) -> usize {
    let multi = model.multi();
    let by_frac = crate::scalar::ceil_scaled(frac, multi);
    let remove = by_frac.min(multi - target_multi);
    let mut losses = removal_losses(pieces, model);
    losses.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| model.tokens[a.1].cmp(&model.tokens[b.1]))
    });
    let mut keep = vec![true; model.tokens.len()];
    for &(_, i) in &losses[..remove] {
        keep[i] = false;
    }
    model.retain(&keep);
    remove
}

/// Trains with the scalar type `R` for lattice arithmetic and records
/// per-round diagnostics.
pub fn train_unigram_traced<R: Real>(
    pieces: &[(Vec<u8>, u64)],
    config: &UnigramTrainerConfig,
) -> Result<(TokenizerModel, UnigramTrace)> {
    config.validate()?;
    let target_multi = config.vocab_size - config.floor();
    let cap = config.seed_multiplier.saturating_mul(config.vocab_size);
    let seed = seed_vocabulary(pieces, config.max_piece_len, config.min_count, cap);
    let mut seen = [false; 256];
    for b in seed.seen_bytes() {
        seen[b as usize] = true;
    }
    let mut trace = UnigramTrace {
        seed_candidates: seed.candidates.len(),
        rounds: Vec::new(),
    };
    let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut scores: Vec<f64> = seed.byte_counts.iter().map(|&c| c as f64).collect();
    for (s, c) in &seed.candidates {
        scores.push(*c as f64 * s.len() as f64);
        tokens.push(s.clone());
    }
    let mut lp: Vec<R> = scores.iter().map(|&s| R::from_f64_lossy(s.ln())).collect();
    normalize_logprobs(&mut lp);
    let mut model = Model::new(tokens, lp);

    loop {
        let mut round = RoundTrace {
            log_likelihoods: Vec::new(),
            masses: Vec::new(),
            multi_tokens: 0,
            pruned: 0,
        };
        for _ in 0..config.em_iters_per_round {
            let (expected, ll) = e_step(pieces, &model);
            round.log_likelihoods.push(ll.to_f64_lossy());
            let keep = m_step(&mut model, &expected, &seen);
            if keep.iter().any(|k| !k) {
                model.retain(&keep);
            }
            round
                .masses
                .push(model.logprob.iter().map(|x| x.to_f64_lossy().exp()).sum());
        }
        round.multi_tokens = model.multi();
        if model.multi() <= target_multi {
            trace.rounds.push(round);
            break;
        }
        round.pruned = prune(&mut model, pieces, target_multi, config.prune_fraction);
        log::debug!(
            "unigram: pruned {} tokens, {} multi-byte tokens remain",
            round.pruned,
            model.multi()
        );
        trace.rounds.push(round);
    }
    Ok((finish(model, &seen, config)?, trace))
}

/// Bytes never seen in training receive a small share of probability so
/// every byte stays encodable; then the distribution is renormalized.
fn finish<R: Real>(model: Model<R>, seen: &[bool; 256], config: &UnigramTrainerConfig) -> Result<TokenizerModel> {
    let mut lp: Vec<f64> = model.logprob.iter().map(|x| x.to_f64_lossy()).collect();
    let min = lp.iter().copied().filter(|x| x.is_finite()).fold(0.0f64, f64::min);
    let unseen_lp = min - 1000f64.ln();
    for b in 0..256 {
        if !seen[b] || !lp[b].is_finite() {
            lp[b] = unseen_lp;
        }
    }
    normalize_logprobs(&mut lp);

    let mut multi: Vec<usize> = (256..model.tokens.len()).collect();
    multi.sort_by(|&a, &b| {
        lp[b]
            .partial_cmp(&lp[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| model.tokens[a].cmp(&model.tokens[b]))
    });
    let mut vocab: Vec<String> = config.specials.ordered().into_iter().map(str::to_string).collect();
    let mut logprobs = Vec::with_capacity(model.tokens.len());
    for i in (0..256).chain(multi) {
        let t = bytelevel::encode_bytes(&model.tokens[i]);
        vocab.push(t.clone());
        logprobs.push((t, lp[i]));
    }
    TokenizerModel::new(
        Vocabulary::from_tokens(vocab)?,
        config.specials.clone(),
        config.normalizer,
        config.pretokenizer,
        ModelState::Unigram { logprobs },
    )
}

pub fn train_unigram_on_pieces(
    pieces: &[(Vec<u8>, u64)],
    config: &UnigramTrainerConfig,
) -> Result<TokenizerModel> {
    train_unigram_traced::<f64>(pieces, config).map(|(m, _)| m)
}

pub fn train_unigram(corpus: &Corpus, config: &UnigramTrainerConfig) -> Result<TokenizerModel> {
    let pieces = corpus_byte_pieces(corpus, &config.normalizer, &config.pretokenizer);
    train_unigram_on_pieces(&pieces, config)
}
