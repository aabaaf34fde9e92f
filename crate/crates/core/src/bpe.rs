//! Byte-level BPE: trainer and rank-ordered segmenter.
//!
//! Training starts from the 256 single-byte tokens and repeatedly merges the
//! adjacent pair with the highest frequency (pieces weighted by their corpus
//! count). Equal counts go to the pair whose `(first, second)` raw byte
//! strings compare smallest. Training stops at the vocabulary budget or when
//! no pair occurs at least `min_frequency` times.
//!
//! Pair counts are maintained incrementally: every pair keeps the list of
//! positions where it was created, and a merge only touches those positions.

use std::cmp::{Ordering, Reverse};
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::rc::Rc;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tokcore::{
    bytelevel, corpus_byte_pieces, ModelState, NormalizerConfig, PreTokenizerConfig,
    SpecialTokenSet, TokenizerModel, Vocabulary,
};

pub const DEFAULT_MIN_FREQUENCY: u64 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeTrainerConfig {
    pub vocab_size: usize,
    pub min_frequency: u64,
    pub specials: SpecialTokenSet,
    pub normalizer: NormalizerConfig,
    pub pretokenizer: PreTokenizerConfig,
}

impl BpeTrainerConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            min_frequency: DEFAULT_MIN_FREQUENCY,
            specials: SpecialTokenSet::bpe(),
            normalizer: NormalizerConfig::default(),
            pretokenizer: PreTokenizerConfig::byte_level(),
        }
    }

    pub fn floor(&self) -> usize {
        self.specials.len() + 256
    }
}

/// Adjacent-pair frequency in the working corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCount {
    pub pair: (Vec<u8>, Vec<u8>),
    pub count: u64,
}

const NONE: u32 = u32::MAX;

struct Word {
    sym: Vec<u32>,
    prev: Vec<u32>,
    next: Vec<u32>,
    alive: Vec<bool>,
    weight: u64,
}

#[derive(Eq, PartialEq)]
struct Candidate {
    count: u64,
    left: Rc<[u8]>,
    right: Rc<[u8]>,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct MergeState {
    tokens: Vec<Rc<[u8]>>,
    by_bytes: HashMap<Rc<[u8]>, u32>,
    words: Vec<Word>,
    counts: HashMap<(u32, u32), u64>,
    where_: HashMap<(u32, u32), Vec<(u32, u32)>>,
    heap: BinaryHeap<Candidate>,
}

impl MergeState {
    fn new(pieces: &[(Vec<u8>, u64)]) -> Self {
        let tokens: Vec<Rc<[u8]>> = (0..=255u8).map(|b| Rc::from(vec![b])).collect();
        let by_bytes = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let mut st = MergeState {
            tokens,
            by_bytes,
            words: Vec::with_capacity(pieces.len()),
            counts: HashMap::new(),
            where_: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        for (wi, (bytes, weight)) in pieces.iter().enumerate() {
            let n = bytes.len();
            let word = Word {
                sym: bytes.iter().map(|&b| b as u32).collect(),
                prev: (0..n).map(|i| if i == 0 { NONE } else { i as u32 - 1 }).collect(),
                next: (0..n).map(|i| if i + 1 == n { NONE } else { i as u32 + 1 }).collect(),
                alive: vec![true; n],
                weight: *weight,
            };
            for i in 0..n.saturating_sub(1) {
                let pair = (word.sym[i], word.sym[i + 1]);
                *st.counts.entry(pair).or_default() += weight;
                st.where_.entry(pair).or_default().push((wi as u32, i as u32));
            }
            st.words.push(word);
        }
        let pairs: Vec<_> = st.counts.iter().map(|(&p, &c)| (p, c)).collect();
        for (pair, count) in pairs {
            st.push(pair, count);
        }
        st
    }

    fn push(&mut self, pair: (u32, u32), count: u64) {
        self.heap.push(Candidate {
            count,
            left: self.tokens[pair.0 as usize].clone(),
            right: self.tokens[pair.1 as usize].clone(),
            pair,
        });
    }

    fn current(&self, pair: (u32, u32)) -> u64 {
        self.counts.get(&pair).copied().unwrap_or(0)
    }

    /// Highest-priority pair whose heap entry is up to date.
    fn best(&mut self) -> Option<(u32, u32, u64)> {
        while let Some(c) = self.heap.pop() {
            let now = self.current(c.pair);
            match now.cmp(&c.count) {
                Ordering::Equal if now > 0 => return Some((c.pair.0, c.pair.1, now)),
                // A fresher entry with the higher count is already queued.
                Ordering::Greater => continue,
                Ordering::Less if now > 0 => self.push(c.pair, now),
                _ => {}
            }
        }
        None
    }

    fn dec(&mut self, pair: (u32, u32), by: u64) {
        if let Entry::Occupied(mut e) = self.counts.entry(pair) {
            *e.get_mut() -= by;
            if *e.get() == 0 {
                e.remove();
                self.where_.remove(&pair);
            }
        }
    }

    fn inc(&mut self, pair: (u32, u32), by: u64, at: (u32, u32), touched: &mut Vec<(u32, u32)>) {
        *self.counts.entry(pair).or_default() += by;
        self.where_.entry(pair).or_default().push(at);
        touched.push(pair);
    }

    /// Id of the concatenated token, plus whether it is new.
    fn intern(&mut self, a: u32, b: u32) -> (u32, bool) {
        let mut bytes = self.tokens[a as usize].to_vec();
        bytes.extend_from_slice(&self.tokens[b as usize]);
        let bytes: Rc<[u8]> = Rc::from(bytes);
        if let Some(&id) = self.by_bytes.get(&bytes) {
            return (id, false);
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(bytes.clone());
        self.by_bytes.insert(bytes, id);
        (id, true)
    }

    fn merge(&mut self, a: u32, b: u32, new: u32) {
        let mut sites = self.where_.remove(&(a, b)).unwrap_or_default();
        sites.sort_unstable();
        sites.dedup();
        let mut touched = Vec::new();
        for (wi, i) in sites {
            let w = &self.words[wi as usize];
            let (iu, weight) = (i as usize, w.weight);
            if !w.alive[iu] || w.sym[iu] != a {
                continue;
            }
            let j = w.next[iu];
            if j == NONE || w.sym[j as usize] != b {
                continue;
            }
            let (p, n) = (w.prev[iu], w.next[j as usize]);
            let (sym_p, sym_n) = (
                (p != NONE).then(|| w.sym[p as usize]),
                (n != NONE).then(|| w.sym[n as usize]),
            );
            {
                let w = &mut self.words[wi as usize];
                w.sym[iu] = new;
                w.alive[j as usize] = false;
                w.next[iu] = n;
                if n != NONE {
                    w.prev[n as usize] = i;
                }
            }
            self.dec((a, b), weight);
            if let Some(sp) = sym_p {
                self.dec((sp, a), weight);
                self.inc((sp, new), weight, (wi, p), &mut touched);
            }
            if let Some(sn) = sym_n {
                self.dec((b, sn), weight);
                self.inc((new, sn), weight, (wi, i), &mut touched);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for pair in touched {
            let c = self.current(pair);
            if c > 0 {
                self.push(pair, c);
            }
        }
    }
}

/// Learns merges over weighted raw-byte pieces. `max_new_tokens` bounds the
/// number of distinct tokens added on top of the byte alphabet (a merge that
/// recreates an existing token is recorded but adds nothing).
pub fn learn_merges(
    pieces: &[(Vec<u8>, u64)],
    max_new_tokens: usize,
    min_frequency: u64,
) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut st = MergeState::new(pieces);
    let mut merges = Vec::new();
    let mut added = 0usize;
    while added < max_new_tokens {
        let Some((a, b, count)) = st.best() else { break };
        if count < min_frequency.max(1) {
            break;
        }
        let (new, fresh) = st.intern(a, b);
        merges.push((st.tokens[a as usize].to_vec(), st.tokens[b as usize].to_vec()));
        if fresh {
            added += 1;
        }
        st.merge(a, b, new);
    }
    merges
}

/// Current adjacent-pair counts of weighted pieces, highest count first
/// (ties as in training).
pub fn pair_counts(pieces: &[(Vec<u8>, u64)]) -> Vec<PairCount> {
    let mut counts: HashMap<(u8, u8), u64> = HashMap::new();
    for (p, w) in pieces {
        for win in p.windows(2) {
            *counts.entry((win[0], win[1])).or_default() += w;
        }
    }
    let mut out: Vec<PairCount> = counts
        .into_iter()
        .map(|((a, b), count)| PairCount { pair: (vec![a], vec![b]), count })
        .collect();
    out.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.pair.cmp(&y.pair)));
    out
}

/// Builds a model from learned merges: specials, then the 256 bytes in byte
/// order, then merged tokens in creation order.
pub fn model_from_merges(
    merges: &[(Vec<u8>, Vec<u8>)],
    config: &BpeTrainerConfig,
) -> Result<TokenizerModel> {
    let mut tokens: Vec<String> = config.specials.ordered().into_iter().map(str::to_string).collect();
    tokens.extend((0..=255u8).map(|b| bytelevel::byte_to_char(b).to_string()));
    let mut seen: std::collections::HashSet<String> = tokens.iter().cloned().collect();
    let mut mapped = Vec::with_capacity(merges.len());
    for (a, b) in merges {
        let (ma, mb) = (bytelevel::encode_bytes(a), bytelevel::encode_bytes(b));
        let joined = format!("{ma}{mb}");
        if seen.insert(joined.clone()) {
            tokens.push(joined);
        }
        mapped.push((ma, mb));
    }
    TokenizerModel::new(
        Vocabulary::from_tokens(tokens)?,
        config.specials.clone(),
        config.normalizer,
        config.pretokenizer,
        ModelState::Bpe { merges: mapped },
    )
}

pub fn train_bpe_on_pieces(
    pieces: &[(Vec<u8>, u64)],
    config: &BpeTrainerConfig,
) -> Result<TokenizerModel> {
    let floor = config.floor();
    if config.vocab_size < floor {
        return Err(Error::VocabTooSmall {
            requested: config.vocab_size,
            floor,
        });
    }
    let merges = learn_merges(pieces, config.vocab_size - floor, config.min_frequency);
    log::debug!("bpe: learned {} merges", merges.len());
    model_from_merges(&merges, config)
}

pub fn train_bpe(corpus: &Corpus, config: &BpeTrainerConfig) -> Result<TokenizerModel> {
    let pieces = corpus_byte_pieces(corpus, &config.normalizer, &config.pretokenizer);
    train_bpe_on_pieces(&pieces, config)
}

/// Compiled BPE segmenter.
#[derive(Clone, Debug)]
pub struct BpeEncoder {
    byte_ids: [u32; 256],
    ranks: HashMap<(u32, u32), (u32, u32)>,
}

impl BpeEncoder {
    pub fn new(vocab: &Vocabulary, merges: &[(String, String)]) -> Result<Self> {
        let mut byte_ids = [0u32; 256];
        for b in 0..=255u8 {
            let c = bytelevel::byte_to_char(b).to_string();
            byte_ids[b as usize] = vocab
                .id(&c)
                .ok_or_else(|| Error::SchemaViolation(format!("byte token {c:?} missing")))?;
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (a, b)) in merges.iter().enumerate() {
            let lookup = |t: &str| {
                vocab.id(t).ok_or_else(|| {
                    Error::SchemaViolation(format!("merge ({a:?}, {b:?}) references absent token {t:?}"))
                })
            };
            let (ia, ib) = (lookup(a)?, lookup(b)?);
            let joined = format!("{a}{b}");
            let ij = lookup(&joined)?;
            ranks.entry((ia, ib)).or_insert((rank as u32, ij));
        }
        Ok(Self { byte_ids, ranks })
    }

    /// Applies merges lowest rank first (leftmost on equal rank) until none applies.
    pub fn segment_ids(&self, bytes: &[u8], out: &mut Vec<u32>) {
        let n = bytes.len();
        if n == 0 {
            return;
        }
        let mut sym: Vec<u32> = bytes.iter().map(|&b| self.byte_ids[b as usize]).collect();
        if n == 1 {
            out.push(sym[0]);
            return;
        }
        let mut next: Vec<u32> = (1..=n as u32).collect();
        next[n - 1] = NONE;
        let mut prev: Vec<u32> = (0..n as u32).map(|i| i.wrapping_sub(1)).collect();
        prev[0] = NONE;
        let mut alive = vec![true; n];
        let mut heap = BinaryHeap::new();
        for i in 0..n - 1 {
            if let Some(&(rank, _)) = self.ranks.get(&(sym[i], sym[i + 1])) {
                heap.push(Reverse((rank, i as u32, sym[i], sym[i + 1])));
            }
        }
        while let Some(Reverse((_, i, a, b))) = heap.pop() {
            let iu = i as usize;
            if !alive[iu] || sym[iu] != a {
                continue;
            }
            let j = next[iu];
            if j == NONE || sym[j as usize] != b {
                continue;
            }
            let (_, new) = self.ranks[&(a, b)];
            sym[iu] = new;
            alive[j as usize] = false;
            let n2 = next[j as usize];
            next[iu] = n2;
            if n2 != NONE {
                prev[n2 as usize] = i;
                if let Some(&(r, _)) = self.ranks.get(&(new, sym[n2 as usize])) {
                    heap.push(Reverse((r, i, new, sym[n2 as usize])));
                }
            }
            let p = prev[iu];
            if p != NONE {
                if let Some(&(r, _)) = self.ranks.get(&(sym[p as usize], new)) {
                    heap.push(Reverse((r, p, sym[p as usize], new)));
                }
            }
        }
        let mut i = 0u32;
        while i != NONE {
            out.push(sym[i as usize]);
            i = next[i as usize];
        }
    }
}

/// Segments one raw piece, returning vocabulary token strings.
pub fn segment_bpe(model: &TokenizerModel, piece: &str) -> Result<Vec<String>> {
    if model.merges().is_none() {
        return Err(Error::InvalidConfig("segment_bpe needs a BPE model".into()));
    }
    let ids = model.encode_raw_bytes(piece.as_bytes())?;
    Ok(model.tokens(&ids)?.into_iter().map(str::to_string).collect())
}
