//! WordPiece: score-based merge trainer and greedy longest-match segmenter.
//!
//! Words come from the BERT-style pre-tokenizer. The initial alphabet holds
//! every word-initial character and every other character with the `##`
//! continuation prefix. Each iteration merges the adjacent pair maximizing
//! `count(pair) / (count(first) * count(second))`, with counts weighted by
//! word frequency. Scores are compared exactly; equal scores go to the
//! lexicographically smallest `(first, second)` token strings.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tokcore::{
    corpus_words, ModelState, NormalizerConfig, PreTokenizerConfig, SpecialTokenSet,
    TokenizerModel, Vocabulary,
};

pub const DEFAULT_PREFIX: &str = "##";

/// Words longer than this many characters are emitted as a single unknown token.
pub const MAX_WORD_CHARS: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordPieceTrainerConfig {
    pub vocab_size: usize,
    pub prefix: String,
    pub specials: SpecialTokenSet,
    pub normalizer: NormalizerConfig,
    pub pretokenizer: PreTokenizerConfig,
}

impl WordPieceTrainerConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            prefix: DEFAULT_PREFIX.into(),
            specials: SpecialTokenSet::wordpiece(),
            normalizer: NormalizerConfig::default(),
            pretokenizer: PreTokenizerConfig::bert_style(),
        }
    }
}

/// A candidate merge with its exact score.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoredPair {
    pub pair: (String, String),
    pub pair_count: u64,
    pub first_count: u64,
    pub second_count: u64,
}

impl ScoredPair {
    /// Exact score as a ratio of 128-bit integers.
    pub fn score(&self) -> num_rational::Ratio<u128> {
        num_rational::Ratio::new(
            self.pair_count as u128,
            self.first_count as u128 * self.second_count as u128,
        )
    }

    pub fn score_f64(&self) -> f64 {
        self.pair_count as f64 / (self.first_count as f64 * self.second_count as f64)
    }

    /// Higher score first, then smaller pair.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        cmp_score(
            (self.pair_count, self.first_count, self.second_count),
            (other.pair_count, other.first_count, other.second_count),
        )
        .reverse()
        .then_with(|| self.pair.cmp(&other.pair))
    }
}

/// Compares `c1 / (a1 * b1)` with `c2 / (a2 * b2)` by cross-multiplication.
fn cmp_score((c1, a1, b1): (u64, u64, u64), (c2, a2, b2): (u64, u64, u64)) -> Ordering {
    let lhs = c1 as u128 * (a2 as u128 * b2 as u128);
    let rhs = c2 as u128 * (a1 as u128 * b1 as u128);
    lhs.cmp(&rhs)
}

/// Splits a word into its initial units.
pub fn initial_units(word: &str, prefix: &str) -> Vec<String> {
    word.chars()
        .enumerate()
        .map(|(i, c)| if i == 0 { c.to_string() } else { format!("{prefix}{c}") })
        .collect()
}

/// The token produced by merging `a` and `b`.
pub fn merged_token(a: &str, b: &str, prefix: &str) -> String {
    format!("{a}{}", b.strip_prefix(prefix).unwrap_or(b))
}

/// Initial alphabet of weighted words, sorted.
pub fn alphabet(words: &[(String, u64)], prefix: &str) -> Vec<String> {
    let set: BTreeSet<String> = words.iter().flat_map(|(w, _)| initial_units(w, prefix)).collect();
    set.into_iter().collect()
}

struct State {
    tokens: Vec<String>,
    by_str: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    unit: Vec<u64>,
    pairs: HashMap<(u32, u32), u64>,
    where_: HashMap<(u32, u32), HashSet<u32>>,
}

impl State {
    fn new(words: &[(String, u64)], prefix: &str) -> Self {
        let mut st = State {
            tokens: Vec::new(),
            by_str: HashMap::new(),
            words: Vec::with_capacity(words.len()),
            unit: Vec::new(),
            pairs: HashMap::new(),
            where_: HashMap::new(),
        };
        for t in alphabet(words, prefix) {
            st.intern(t);
        }
        for (wi, (w, weight)) in words.iter().enumerate() {
            let ids: Vec<u32> = initial_units(w, prefix).iter().map(|u| st.by_str[u]).collect();
            st.add_word(wi as u32, &ids, *weight);
            st.words.push((ids, *weight));
        }
        st
    }

    fn intern(&mut self, t: String) -> (u32, bool) {
        if let Some(&id) = self.by_str.get(&t) {
            return (id, false);
        }
        let id = self.tokens.len() as u32;
        self.by_str.insert(t.clone(), id);
        self.tokens.push(t);
        self.unit.push(0);
        (id, true)
    }

    fn add_word(&mut self, wi: u32, ids: &[u32], weight: u64) {
        for &u in ids {
            self.unit[u as usize] += weight;
        }
        for w in ids.windows(2) {
            *self.pairs.entry((w[0], w[1])).or_default() += weight;
            self.where_.entry((w[0], w[1])).or_default().insert(wi);
        }
    }

    fn remove_word(&mut self, wi: u32, ids: &[u32], weight: u64) {
        for &u in ids {
            self.unit[u as usize] -= weight;
        }
        for w in ids.windows(2) {
            let key = (w[0], w[1]);
            let c = self.pairs.get_mut(&key).expect("pair counted");
            *c -= weight;
            if *c == 0 {
                self.pairs.remove(&key);
                self.where_.remove(&key);
            } else if let Some(s) = self.where_.get_mut(&key) {
                s.remove(&wi);
            }
        }
    }

    fn scored(&self, (a, b): (u32, u32), count: u64) -> ScoredPair {
        ScoredPair {
            pair: (self.tokens[a as usize].clone(), self.tokens[b as usize].clone()),
            pair_count: count,
            first_count: self.unit[a as usize],
            second_count: self.unit[b as usize],
        }
    }

    fn best(&self) -> Option<(u32, u32)> {
        let mut best: Option<((u32, u32), u64)> = None;
        for (&p, &c) in &self.pairs {
            let better = match best {
                None => true,
                Some((bp, bc)) => {
                    let key = |p: (u32, u32), c: u64| (c, self.unit[p.0 as usize], self.unit[p.1 as usize]);
                    match cmp_score(key(p, c), key(bp, bc)) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => {
                            let s = |p: (u32, u32)| (&self.tokens[p.0 as usize], &self.tokens[p.1 as usize]);
                            s(p) < s(bp)
                        }
                    }
                }
            };
            if better {
                best = Some((p, c));
            }
        }
        best.map(|(p, _)| p)
    }

    fn merge(&mut self, a: u32, b: u32, new: u32) {
        let mut sites: Vec<u32> = self.where_.get(&(a, b)).map(|s| s.iter().copied().collect()).unwrap_or_default();
        sites.sort_unstable();
        for wi in sites {
            let (ids, weight) = std::mem::take(&mut self.words[wi as usize]);
            self.remove_word(wi, &ids, weight);
            let mut out = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == a && ids[i + 1] == b {
                    out.push(new);
                    i += 2;
                } else {
                    out.push(ids[i]);
                    i += 1;
                }
            }
            self.add_word(wi, &out, weight);
            self.words[wi as usize] = (out, weight);
        }
    }
}

/// All current pairs ranked best first.
pub fn scored_pairs(words: &[(String, u64)], prefix: &str) -> Vec<ScoredPair> {
    let st = State::new(words, prefix);
    let mut out: Vec<ScoredPair> = st.pairs.iter().map(|(&p, &c)| st.scored(p, c)).collect();
    out.sort_by(ScoredPair::rank_cmp);
    out
}

/// Learns up to `max_new_tokens` new tokens; returns the merges in order.
pub fn learn_wordpiece_merges(
    words: &[(String, u64)],
    prefix: &str,
    max_new_tokens: usize,
) -> Vec<(String, String)> {
    let mut st = State::new(words, prefix);
    let mut merges = Vec::new();
    let mut added = 0;
    while added < max_new_tokens {
        let Some((a, b)) = st.best() else { break };
        let joined = merged_token(&st.tokens[a as usize], &st.tokens[b as usize], prefix);
        let (new, fresh) = st.intern(joined);
        if fresh {
            added += 1;
        }
        merges.push((st.tokens[a as usize].clone(), st.tokens[b as usize].clone()));
        st.merge(a, b, new);
    }
    merges
}

/// Builds a model: specials, the sorted alphabet, then merge results in order.
pub fn model_from_merges(
    words: &[(String, u64)],
    merges: &[(String, String)],
    config: &WordPieceTrainerConfig,
) -> Result<TokenizerModel> {
    let mut tokens: Vec<String> = config.specials.ordered().into_iter().map(str::to_string).collect();
    let mut seen: HashSet<String> = tokens.iter().cloned().collect();
    for t in alphabet(words, &config.prefix)
        .into_iter()
        .chain(merges.iter().map(|(a, b)| merged_token(a, b, &config.prefix)))
    {
        if seen.insert(t.clone()) {
            tokens.push(t);
        }
    }
    TokenizerModel::new(
        Vocabulary::from_tokens(tokens)?,
        config.specials.clone(),
        config.normalizer,
        config.pretokenizer,
        ModelState::WordPiece {
            prefix: config.prefix.clone(),
        },
    )
}

pub fn train_wordpiece_on_words(
    words: &[(String, u64)],
    config: &WordPieceTrainerConfig,
) -> Result<TokenizerModel> {
    if config.prefix.is_empty() {
        return Err(Error::InvalidConfig("wordpiece prefix must be non-empty".into()));
    }
    let floor = config.specials.len() + alphabet(words, &config.prefix).len();
    if config.vocab_size < floor {
        return Err(Error::VocabTooSmall {
            requested: config.vocab_size,
            floor,
        });
    }
    let merges = learn_wordpiece_merges(words, &config.prefix, config.vocab_size - floor);
    log::debug!("wordpiece: learned {} merges", merges.len());
    model_from_merges(words, &merges, config)
}

pub fn train_wordpiece(corpus: &Corpus, config: &WordPieceTrainerConfig) -> Result<TokenizerModel> {
    let words = corpus_words(corpus, &config.normalizer);
    train_wordpiece_on_words(&words, config)
}

/// Compiled greedy longest-match segmenter.
#[derive(Clone, Debug)]
pub struct WordPieceEncoder {
    prefix: String,
    unk: u32,
}

impl WordPieceEncoder {
    pub fn new(prefix: &str, unk: u32) -> Result<Self> {
        if prefix.is_empty() {
            return Err(Error::SchemaViolation("wordpiece_prefix must be non-empty".into()));
        }
        Ok(Self {
            prefix: prefix.into(),
            unk,
        })
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn segment_ids(&self, vocab: &Vocabulary, word: &str, out: &mut Vec<u32>) {
        if word.is_empty() {
            return;
        }
        let bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).chain([word.len()]).collect();
        if bounds.len() - 1 > MAX_WORD_CHARS {
            out.push(self.unk);
            return;
        }
        let start_len = out.len();
        let mut candidate = String::new();
        let mut start = 0;
        while start + 1 < bounds.len() {
            let mut hit = None;
            for end in (start + 1..bounds.len()).rev() {
                candidate.clear();
                if start > 0 {
                    candidate.push_str(&self.prefix);
                }
                candidate.push_str(&word[bounds[start]..bounds[end]]);
                if let Some(id) = vocab.id(&candidate) {
                    hit = Some((id, end));
                    break;
                }
            }
            match hit {
                Some((id, end)) => {
                    out.push(id);
                    start = end;
                }
                None => {
                    out.truncate(start_len);
                    out.push(self.unk);
                    return;
                }
            }
        }
    }

    /// Continuation pieces attach to the previous token (prefix stripped);
    /// other tokens are separated by one space.
    pub fn join(&self, tokens: &[&str]) -> String {
        let mut out = String::new();
        for (i, t) in tokens.iter().enumerate() {
            match t.strip_prefix(self.prefix.as_str()) {
                Some(rest) if i > 0 => out.push_str(rest),
                _ => {
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push_str(t);
                }
            }
        }
        out
    }
}

/// Segments one pre-tokenized word into token strings.
pub fn segment_wordpiece(model: &TokenizerModel, word: &str) -> Result<Vec<String>> {
    let prefix = model
        .wordpiece_prefix()
        .ok_or_else(|| Error::InvalidConfig("segment_wordpiece needs a WordPiece model".into()))?;
    let enc = WordPieceEncoder::new(prefix, model.unk_id())?;
    let mut ids = Vec::new();
    enc.segment_ids(model.vocabulary(), word, &mut ids);
    Ok(model.tokens(&ids)?.into_iter().map(str::to_string).collect())
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(spec: &[(&str, u64)]) -> Vec<(String, u64)> {
        let mut v: Vec<_> = spec.iter().map(|(w, c)| (w.to_string(), *c)).collect();
        v.sort();
        v
    }

    fn config_for(ws: &[(String, u64)], extra: usize) -> WordPieceTrainerConfig {
        let mut c = WordPieceTrainerConfig::new(0);
        c.vocab_size = c.specials.len() + alphabet(ws, "##").len() + extra;
        c
    }

    #[test]
    fn initial_alphabet_marks_continuations() {
        assert_eq!(initial_units("one", "##"), ["o", "##n", "##e"]);
    }

    #[test]
    fn tied_scores_break_lexicographically() {
        let ws = words(&[("aa", 5), ("ab", 5)]);
        let ranked = scored_pairs(&ws, "##");
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].score(), num_rational::Ratio::new(1, 10));
        assert_eq!(ranked[1].score(), num_rational::Ratio::new(1, 10));
        assert_eq!(learn_wordpiece_merges(&ws, "##", 1), [("a".to_string(), "##a".to_string())]);
    }

    #[test]
    fn floor_vocab_has_no_merges() {
        let ws = words(&[("abc", 3)]);
        let m = train_wordpiece_on_words(&ws, &config_for(&ws, 0)).unwrap();
        assert_eq!(m.regular_tokens().count(), 3);
        let small = WordPieceTrainerConfig { vocab_size: 5, ..config_for(&ws, 0) };
        assert!(matches!(train_wordpiece_on_words(&ws, &small), Err(Error::VocabTooSmall { .. })));
    }

    fn hand_model(tokens: &[&str]) -> TokenizerModel {
        let specials = SpecialTokenSet::wordpiece();
        let mut all: Vec<String> = specials.ordered().into_iter().map(str::to_string).collect();
        all.extend(tokens.iter().map(|t| t.to_string()));
        TokenizerModel::new(
            Vocabulary::from_tokens(all).unwrap(),
            specials,
            NormalizerConfig::default(),
            PreTokenizerConfig::bert_style(),
            ModelState::WordPiece { prefix: "##".into() },
        )
        .unwrap()
    }

    #[test]
    fn greedy_longest_match() {
        let m = hand_model(&["c", "cat", "ca", "##s", "##t", "##a"]);
        assert_eq!(segment_wordpiece(&m, "cats").unwrap(), ["cat", "##s"]);
        assert_eq!(segment_wordpiece(&m, "cat").unwrap(), ["cat"]);
        assert_eq!(segment_wordpiece(&m, "dog").unwrap(), ["[UNK]"]);
        // Failure midway turns the whole word into one unknown token.
        assert_eq!(segment_wordpiece(&m, "catx").unwrap(), ["[UNK]"]);
        let ids = m.encode("cats").unwrap();
        assert_eq!(m.decode(&ids).unwrap(), "cats");
        assert_eq!(m.tokens(&ids).unwrap(), ["cat", "##s"]);
    }

    #[test]
    fn overlong_words_are_unknown() {
        let m = hand_model(&["a", "##a"]);
        let long = "a".repeat(MAX_WORD_CHARS + 1);
        assert_eq!(segment_wordpiece(&m, &long).unwrap(), ["[UNK]"]);
    }

    #[test]
    fn join_attaches_continuations() {
        let enc = WordPieceEncoder::new("##", 0).unwrap();
        assert_eq!(enc.join(&["cmp", "edi", ",", "es", "##i"]), "cmp edi , esi");
        assert_eq!(enc.join(&[]), "");
    }

    #[test]
    fn duplicate_merge_results_are_not_counted_twice() {
        let ws = words(&[("abx", 3), ("bcy", 3), ("abc", 4)]);
        let merges = learn_wordpiece_merges(&ws, "##", 12);
        assert_eq!(merges, oracle::brute_force_merges(&ws, "##", 12));
        let cfg = config_for(&ws, 12);
        let m = model_from_merges(&ws, &merges, &cfg).unwrap();
        assert!(m.vocab_size() <= cfg.vocab_size);
    }

    fn micro() -> impl Strategy<Value = Vec<(String, u64)>> {
        prop::collection::btree_map("[abcd]{1,6}", 1u64..6, 1..30)
            .prop_map(|m| m.into_iter().collect())
    }

    proptest! {
        #[test]
        fn matches_brute_force(ws in micro(), budget in 0usize..15) {
            prop_assert_eq!(
                learn_wordpiece_merges(&ws, "##", budget),
                oracle::brute_force_merges(&ws, "##", budget)
            );
        }

        #[test]
        fn segmentation_invariants(ws in micro(), word in "[abcde]{1,8}") {
            let m = train_wordpiece_on_words(&ws, &config_for(&ws, 10)).unwrap();
            let toks = segment_wordpiece(&m, &word).unwrap();
            if toks != ["[UNK]"] {
                prop_assert!(!toks[0].starts_with("##"));
                prop_assert!(toks[1..].iter().all(|t| t.starts_with("##")));
                let rebuilt: String = toks.iter().map(|t| t.trim_start_matches("##")).collect();
                prop_assert_eq!(&rebuilt, &word);
                // No longer vocabulary entry matches where each token starts.
                let chars: Vec<char> = word.chars().collect();
                let mut pos = 0;
                for t in &toks {
                    let len = t.trim_start_matches("##").chars().count();
                    for longer in pos + len + 1..=chars.len() {
                        let s: String = chars[pos..longer].iter().collect();
                        let cand = if pos == 0 { s } else { format!("##{s}") };
                        prop_assert!(!m.vocabulary().contains(&cand));
                    }
                    pos += len;
                }
            } else {
                // Some character has no unit in the vocabulary at its position.
                let uncovered = !m.vocabulary().contains(&word[..1])
                    || word.chars().skip(1).any(|c| !m.vocabulary().contains(&format!("##{c}")));
                prop_assert!(uncovered);
            }
        }
    }
}
