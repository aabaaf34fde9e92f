//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.
//!
//! Run with `cargo test -p asmtok-core --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use asmtok::corpus::{dedup, filter_by_length, parse_function, split};
use asmtok::eval::{fertility, oov_rate, oov_rate_on_bytes, random_byte_strings, vocab_overlap};
use asmtok::masking::{mask_count, mask_function, record_seed, IGNORE_LABEL};
use asmtok::matrix::{run_matrix, MatrixConfig};
use asmtok::preprocess::{normalize_function, preprocess_corpus, PreprocessConfig};
use asmtok::tokcore::normalize;
use asmtok::{
    bpe, train, wordpiece, Algorithm, Corpus, Fraction, FunctionRecord, SpecialTokenSet, TokenizerModel,
    TrainOptions, UnigramEncoder, Variant, Vocabulary,
};
use num_bigint::BigUint;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

struct Data {
    train: Corpus,
    test: Corpus,
    train_pre: Corpus,
    test_pre: Corpus,
}

impl Data {
    fn load() -> Data {
        let raw = Corpus::load(root().join("fixtures/functions.jsonl")).expect("fixture loads");
        let kept = dedup(&filter_by_length(&raw, 30, 100).expect("filter"));
        let (train, test) = split(&kept, Fraction::new(4, 5), 42).expect("split");
        let cfg = PreprocessConfig::default();
        let train_pre = preprocess_corpus(&train, &cfg).expect("preprocess train");
        let test_pre = preprocess_corpus(&test, &cfg).expect("preprocess test");
        Data {
            train,
            test,
            train_pre,
            test_pre,
        }
    }

    fn train_split(&self, v: Variant) -> &Corpus {
        match v {
            Variant::Default => &self.train,
            Variant::Preprocessed => &self.train_pre,
        }
    }

    fn test_split(&self, v: Variant) -> &Corpus {
        match v {
            Variant::Default => &self.test,
            Variant::Preprocessed => &self.test_pre,
        }
    }
}

/// Trained models keyed by (algorithm, vocab size, variant), trained on demand.
struct Models<'a> {
    data: &'a Data,
    cache: BTreeMap<(String, usize, &'static str), (TokenizerModel, Variant)>,
}

impl<'a> Models<'a> {
    fn get(&mut self, alg: Algorithm, size: usize, v: Variant) -> &TokenizerModel {
        let key = (alg.to_string(), size, v.as_str());
        let data = self.data;
        &self
            .cache
            .entry(key)
            .or_insert_with(|| {
                let m = train(data.train_split(v), &TrainOptions::new(alg, size)).expect("training succeeds");
                (m, v)
            })
            .0
    }

    fn fert(&mut self, alg: Algorithm, size: usize, v: Variant) -> f64 {
        let data = self.data;
        let test = data.test_split(v);
        fertility(self.get(alg, size, v), test).expect("fertility").fertility
    }
}

fn criterion_1(models: &mut Models) -> Outcome {
    let start = Instant::now();
    let wp = models.fert(Algorithm::WordPiece, 3000, Variant::Default);
    let bpe = models.fert(Algorithm::Bpe, 3000, Variant::Default);
    let uni = models.fert(Algorithm::Unigram, 3000, Variant::Default);
    let elapsed = start.elapsed();
    let detail = format!("wordpiece {wp:.4}, bpe {bpe:.4}, unigram {uni:.4}, {:.1}s", elapsed.as_secs_f64());
    ensure(elapsed < Duration::from_secs(300), || format!("too slow: {detail}"))?;
    ensure(wp - bpe >= 0.2 && bpe - uni >= 0.2, || {
        format!("expected wordpiece > bpe > unigram with gaps >= 0.2: {detail}")
    })?;
    Ok(detail)
}

fn criterion_2(models: &mut Models) -> Outcome {
    let f: Vec<f64> = [3000, 8000, 12000]
        .iter()
        .map(|&n| models.fert(Algorithm::Bpe, n, Variant::Default))
        .collect();
    let detail = format!("3K {:.4}, 8K {:.4}, 12K {:.4}", f[0], f[1], f[2]);
    ensure(f.windows(2).all(|w| w[1] <= w[0] + 1e-9), || format!("not non-increasing: {detail}"))?;
    Ok(detail)
}

fn criterion_3(models: &mut Models) -> Outcome {
    let mut parts = Vec::new();
    let mut bad = Vec::new();
    for alg in [Algorithm::Bpe, Algorithm::WordPiece, Algorithm::Unigram] {
        let d = models.fert(alg, 3000, Variant::Default);
        let p = models.fert(alg, 3000, Variant::Preprocessed);
        parts.push(format!("{alg} {d:.4} -> {p:.4}"));
        if p > d {
            bad.push(alg.to_string());
        }
    }
    let detail = parts.join(", ");
    ensure(bad.is_empty(), || format!("preprocessed above default for {bad:?}: {detail}"))?;
    Ok(detail)
}

fn triple_overlap(models: &mut Models, size: usize, v: Variant) -> (f64, usize, usize) {
    for alg in [Algorithm::Bpe, Algorithm::Unigram, Algorithm::WordPiece] {
        models.get(alg, size, v);
    }
    let key = |alg: Algorithm| (alg.to_string(), size, v.as_str());
    let view: Vec<(String, &TokenizerModel)> = [Algorithm::Bpe, Algorithm::Unigram, Algorithm::WordPiece]
        .iter()
        .map(|&a| (a.to_string(), &models.cache[&key(a)].0))
        .collect();
    let r = vocab_overlap(&view).expect("overlap");
    (r.jaccard_percent, r.intersection_size, r.union_size)
}

fn criterion_4(models: &mut Models) -> Outcome {
    let sizes = [1000, 4000, 8000];
    let mut by_variant: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut parts = Vec::new();
    for v in [Variant::Default, Variant::Preprocessed] {
        for &n in &sizes {
            let (j, i, u) = triple_overlap(models, n, v);
            parts.push(format!("{} {}K {j:.3}% ({i}/{u})", v.as_str(), n / 1000));
            by_variant.entry(v.as_str()).or_default().push(j);
        }
    }
    let detail = parts.join(", ");
    for (v, js) in &by_variant {
        ensure(js.windows(2).all(|w| w[1] < w[0]), || format!("{v} overlap not strictly decreasing: {detail}"))?;
    }
    let (d, p) = (&by_variant["default"], &by_variant["preprocessed"]);
    ensure(d.iter().zip(p).all(|(d, p)| p >= d), || format!("preprocessed overlap below default: {detail}"))?;
    Ok(detail)
}

fn byte_level_models<'m>(models: &'m Models) -> Vec<(String, &'m TokenizerModel, Variant)> {
    models
        .cache
        .iter()
        .filter(|(_, (m, _))| m.is_byte_level())
        .map(|((a, n, v), (m, var))| (format!("{a}-{n}-{v}"), m, *var))
        .collect()
}

fn criterion_5(models: &mut Models) -> Outcome {
    let inputs = random_byte_strings(100_000, 64, 5);
    let listed = byte_level_models(models);
    ensure(!listed.is_empty(), || "no byte-level models were trained".into())?;
    let mut total = 0u64;
    for (label, m, v) in &listed {
        let r = oov_rate_on_bytes(m, &inputs).map_err(|e| format!("{label}: {e}"))?;
        let h = oov_rate(m, models.data.test_split(*v)).map_err(|e| format!("{label}: {e}"))?;
        ensure(r.unk_token_count == 0 && h.unk_token_count == 0, || {
            format!(
                "{label}: {} unk on random bytes, {} unk on held-out",
                r.unk_token_count, h.unk_token_count
            )
        })?;
        total += r.total_token_count + h.total_token_count;
    }
    Ok(format!("{} models, {total} tokens, 0 unk", listed.len()))
}

// Reference merge learners used by criterion 6. They recount everything after
// each merge and keep segmentations as explicit token lists.

fn reference_bpe(pieces: &[(Vec<u8>, u64)], max_new: usize, min_freq: u64) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut segs: Vec<(Vec<Vec<u8>>, u64)> =
        pieces.iter().map(|(p, w)| (p.chunks(1).map(<[u8]>::to_vec).collect(), *w)).collect();
    let mut vocab: BTreeSet<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut out = Vec::new();
    while vocab.len() - 256 < max_new {
        let mut counts: BTreeMap<(Vec<u8>, Vec<u8>), u64> = BTreeMap::new();
        for (s, w) in &segs {
            for i in 1..s.len() {
                *counts.entry((s[i - 1].clone(), s[i].clone())).or_insert(0) += w;
            }
        }
        let top = counts.values().copied().max().unwrap_or(0);
        if top < min_freq.max(1) {
            break;
        }
        let pair = counts.into_iter().find(|(_, c)| *c == top).expect("maximum exists").0;
        let joined: Vec<u8> = pair.0.iter().chain(&pair.1).copied().collect();
        vocab.insert(joined.clone());
        for (s, _) in &mut segs {
            *s = merge_adjacent(s, &pair.0, &pair.1, &joined);
        }
        out.push(pair);
    }
    out
}

fn merge_adjacent<T: PartialEq + Clone>(seq: &[T], a: &T, b: &T, joined: &T) -> Vec<T> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == *a && seq[i + 1] == *b {
            out.push(joined.clone());
            i += 2;
        } else {
            out.push(seq[i].clone());
            i += 1;
        }
    }
    out
}

fn reference_wordpiece(words: &[(String, u64)], max_new: usize) -> Vec<(String, String)> {
    const P: &str = "##";
    let mut segs: Vec<(Vec<String>, u64)> = words
        .iter()
        .map(|(w, c)| {
            let units = w
                .chars()
                .enumerate()
                .map(|(i, ch)| if i == 0 { ch.to_string() } else { format!("{P}{ch}") })
                .collect();
            (units, *c)
        })
        .collect();
    let mut vocab: BTreeSet<String> = segs.iter().flat_map(|(s, _)| s.clone()).collect();
    let base = vocab.len();
    let mut out = Vec::new();
    while vocab.len() - base < max_new {
        let mut unit: BTreeMap<String, u64> = BTreeMap::new();
        let mut pairs: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (s, c) in &segs {
            for (i, u) in s.iter().enumerate() {
                *unit.entry(u.clone()).or_insert(0) += c;
                if i > 0 {
                    *pairs.entry((s[i - 1].clone(), u.clone())).or_insert(0) += c;
                }
            }
        }
        let score = |(a, b): &(String, String), c: u64| {
            Ratio::new(BigUint::from(c), BigUint::from(unit[a]) * BigUint::from(unit[b]))
        };
        let Some(best) = pairs.iter().map(|(p, &c)| score(p, c)).max() else { break };
        let pair = pairs.iter().find(|(p, c)| score(p, **c) == best).expect("maximum exists").0.clone();
        let joined = format!("{}{}", pair.0, pair.1.strip_prefix(P).unwrap_or(&pair.1));
        vocab.insert(joined.clone());
        for (s, _) in &mut segs {
            *s = merge_adjacent(s, &pair.0, &pair.1, &joined);
        }
        out.push(pair);
    }
    out
}

fn micro_pieces(rng: &mut ChaCha8Rng) -> Vec<(Vec<u8>, u64)> {
    let alphabet = b"ab c\n";
    let n = rng.gen_range(1..=50);
    let mut m: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    for _ in 0..n {
        let len = rng.gen_range(1..=10);
        let p: Vec<u8> = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        *m.entry(p).or_insert(0) += rng.gen_range(1..=4);
    }
    m.into_iter().collect()
}

fn micro_words(rng: &mut ChaCha8Rng) -> Vec<(String, u64)> {
    let alphabet = ['a', 'b', 'c', 'd', 'é'];
    let n = rng.gen_range(1..=50);
    let mut m: BTreeMap<String, u64> = BTreeMap::new();
    for _ in 0..n {
        let len = rng.gen_range(1..=8);
        let w: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        *m.entry(w).or_insert(0) += rng.gen_range(1..=4);
    }
    m.into_iter().collect()
}

/// Best segmentation by enumerating every split of `word`: highest exact
/// probability, then fewer tokens, then the longer token where they first differ.
fn exhaustive_segmentation(word: &[u8], probs: &BTreeMap<Vec<u8>, Ratio<BigUint>>) -> Option<Vec<Vec<u8>>> {
    let n = word.len();
    let mut best: Option<(Ratio<BigUint>, Vec<Vec<u8>>)> = None;
    for cuts in 0u32..1 << (n - 1) {
        let mut seg = Vec::new();
        let mut start = 0;
        for end in 1..=n {
            if end == n || cuts >> (end - 1) & 1 == 1 {
                seg.push(word[start..end].to_vec());
                start = end;
            }
        }
        let Some(p) = seg
            .iter()
            .try_fold(Ratio::from_integer(BigUint::from(1u8)), |acc, t| probs.get(t).map(|q| acc * q))
        else {
            continue;
        };
        let wins = match &best {
            None => true,
            Some((bp, bs)) => {
                use std::cmp::Ordering::*;
                match p.cmp(bp) {
                    Greater => true,
                    Less => false,
                    Equal => {
                        let lens = |s: &[Vec<u8>]| s.iter().map(Vec::len).collect::<Vec<_>>();
                        seg.len() < bs.len() || (seg.len() == bs.len() && lens(&seg) > lens(bs))
                    }
                }
            }
        };
        if wins {
            best = Some((p, seg));
        }
    }
    best.map(|b| b.1)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut merges_checked = 0;
    for case in 0..25 {
        let pieces = micro_pieces(&mut rng);
        let max_new = rng.gen_range(1..=15);
        let got = bpe::learn_merges(&pieces, max_new, bpe::DEFAULT_MIN_FREQUENCY);
        let want = reference_bpe(&pieces, max_new, bpe::DEFAULT_MIN_FREQUENCY);
        ensure(got == want, || format!("bpe micro-corpus {case}: {got:?} != {want:?}"))?;
        merges_checked += got.len();

        let words = micro_words(&mut rng);
        let max_new = rng.gen_range(1..=15);
        let got = wordpiece::learn_wordpiece_merges(&words, "##", max_new);
        let want = reference_wordpiece(&words, max_new);
        ensure(got == want, || format!("wordpiece micro-corpus {case}: {got:?} != {want:?}"))?;
        merges_checked += got.len();
    }

    let specials = SpecialTokenSet::unigram();
    let mut words_checked = 0;
    let mut vocab_round = 0;
    while words_checked < 1000 {
        vocab_round += 1;
        let mut weights: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for b in b"abcd" {
            weights.insert(vec![*b], rng.gen_range(1..=12));
        }
        for _ in 0..rng.gen_range(3..=12) {
            let len = rng.gen_range(2..=4);
            let t: Vec<u8> = (0..len).map(|_| b"abcd"[rng.gen_range(0..4)]).collect();
            weights.insert(t, rng.gen_range(1..=12));
        }
        let total: u64 = weights.values().sum();
        let probs: BTreeMap<Vec<u8>, Ratio<BigUint>> = weights
            .iter()
            .map(|(t, &w)| (t.clone(), Ratio::new(BigUint::from(w), BigUint::from(total))))
            .collect();
        let mut tokens: Vec<String> = specials.ordered().into_iter().map(str::to_string).collect();
        let mut logprobs = Vec::new();
        for (t, &w) in &weights {
            let s = String::from_utf8(t.clone()).expect("ascii");
            tokens.push(s.clone());
            logprobs.push((s, (w as f64 / total as f64).ln()));
        }
        let vocab = Vocabulary::from_tokens(tokens).map_err(|e| e.to_string())?;
        let enc = UnigramEncoder::from_logprobs(&vocab, &specials, &logprobs).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let len = rng.gen_range(1..=12);
            let word: Vec<u8> = (0..len).map(|_| b"abcd"[rng.gen_range(0..4)]).collect();
            let mut ids = Vec::new();
            enc.segment_ids(&word, &mut ids).map_err(|e| e.to_string())?;
            let got: Vec<Vec<u8>> = ids.iter().map(|&i| vocab.token(i).expect("id").as_bytes().to_vec()).collect();
            let want = exhaustive_segmentation(&word, &probs).expect("single bytes always segment");
            ensure(got == want, || {
                format!(
                    "vocabulary {vocab_round}, word {:?}: viterbi {got:?} != exhaustive {want:?}",
                    String::from_utf8_lossy(&word)
                )
            })?;
            words_checked += 1;
        }
    }
    Ok(format!("25+25 micro-corpora ({merges_checked} merges), {words_checked} unigram words"))
}

fn random_utf8(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(0..=40);
    (0..len)
        .map(|_| match rng.gen_range(0..6) {
            0 => rng.gen_range(' '..='~'),
            1 => ['\n', '\t', ' ', '\r'][rng.gen_range(0..4)],
            2 => rng.gen_range('\u{a0}'..='\u{24f}'),
            3 => rng.gen_range('\u{300}'..='\u{36f}'),
            4 => rng.gen_range('\u{4e00}'..='\u{9fff}'),
            _ => rng.gen::<char>(),
        })
        .collect()
}

fn criterion_7(models: &mut Models) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inputs: Vec<String> = (0..10_000).map(|_| random_utf8(&mut rng)).collect();
    let listed = byte_level_models(models);
    ensure(!listed.is_empty(), || "no byte-level models were trained".into())?;
    for (label, m, _) in &listed {
        for x in &inputs {
            let ids = m.encode(x).map_err(|e| format!("{label}: encode {x:?}: {e}"))?;
            let back = m.decode(&ids).map_err(|e| format!("{label}: decode {x:?}: {e}"))?;
            let want = normalize(x, m.normalizer());
            ensure(back == want, || format!("{label}: {x:?} decoded to {back:?}, expected {want:?}"))?;
        }
    }
    Ok(format!("{} strings under {} models", inputs.len(), listed.len()))
}

fn criterion_8() -> Outcome {
    let raw = Corpus::load(root().join("fixtures/functions.jsonl")).map_err(|e| e.to_string())?;
    let f = raw
        .records
        .iter()
        .find(|r| r.name() == "FUN_00001189")
        .ok_or("context function missing from fixture")?;
    let cfg = PreprocessConfig::default();
    let p = normalize_function(f, &cfg).map_err(|e| e.to_string())?;
    ensure(p.len() == f.len(), || format!("instruction count {} -> {}", f.len(), p.len()))?;

    let default_snippet = ["ENDBR64", "CMP EDI,ESI", "JGE 0x000012ce", "PUSH R13", "MOV R8D,EDI"];
    let pre_snippet = ["ENDBR64", "CMP EDI,ESI", "JGE addr14", "PUSH R13", "MOV R8D,EDI"];
    let at = f
        .instructions()
        .windows(5)
        .position(|w| w == default_snippet)
        .ok_or("five-instruction snippet missing from the context function")?;
    let distinct_before = p.instructions()[..at]
        .iter()
        .flat_map(|i| i.match_indices("addr").map(move |(k, _)| &i[k..]))
        .map(|s| s.chars().take_while(|c| c.is_alphanumeric()).collect::<String>())
        .collect::<BTreeSet<_>>()
        .len();
    ensure(distinct_before == 14, || format!("{distinct_before} distinct addresses precede the snippet"))?;
    ensure(p.instructions()[at..at + 5] == pre_snippet, || {
        format!("preprocessed snippet is {:?}", &p.instructions()[at..at + 5])
    })?;

    // Both five-line forms pass through parsing, preprocessing and
    // a JSONL round trip with five instructions each.
    for text in [default_snippet.join("\n"), pre_snippet.join("\n")] {
        let rec = parse_function(&text, "snippet", None).map_err(|e| e.to_string())?;
        let pre = normalize_function(&rec, &cfg).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        Corpus::new(vec![pre.clone()], Variant::Preprocessed)
            .write_to(&mut buf)
            .map_err(|e| e.to_string())?;
        let back = Corpus::from_reader(&buf[..]).map_err(|e| e.to_string())?;
        ensure(rec.len() == 5 && pre.len() == 5 && back.records[0].instructions() == pre.instructions(), || {
            format!("snippet {text:?} does not round-trip with 5 instructions")
        })?;
    }
    Ok(format!("\"{}\" -> \"{}\"", default_snippet[2], pre_snippet[2]))
}

fn random_function(rng: &mut ChaCha8Rng, i: usize) -> FunctionRecord {
    const OPS: &[&str] = &["MOV", "ADD", "SUB", "XOR", "CMP", "LEA", "PUSH", "POP", "CALL", "JNZ", "TEST"];
    const REGS: &[&str] = &["RAX", "RBX", "RCX", "RDX", "RSI", "RDI", "RBP", "RSP", "R8D", "EAX"];
    let n = rng.gen_range(1..=120);
    let lines = (0..n)
        .map(|_| {
            let op = OPS[rng.gen_range(0..OPS.len())];
            match rng.gen_range(0..3) {
                0 => format!("{op} {}", REGS[rng.gen_range(0..REGS.len())]),
                1 => format!("{op} {},0x{:x}", REGS[rng.gen_range(0..REGS.len())], rng.gen::<u32>()),
                _ => format!("{op} qword ptr [RBP + -0x{:x}]", rng.gen_range(8..0x200)),
            }
        })
        .collect();
    FunctionRecord::new(format!("rand_{i}"), None, lines).expect("valid record")
}

fn criterion_9(models: &mut Models) -> Outcome {
    let rate = Fraction::new(15, 100);
    for n in 1..=400usize {
        // round(0.15 n) with halves rounded up, computed in integers.
        let want = ((15 * n + 50) / 100).max(1);
        let got = mask_count(n, rate);
        ensure(got == want, || format!("n = {n}: mask count {got}, expected {want}"))?;
    }
    let model = models.get(Algorithm::Bpe, 3000, Variant::Default);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..1000 {
        let f = random_function(&mut rng, i);
        let ids = model.encode(&f.text()).map_err(|e| e.to_string())?;
        let ex = mask_function(model, &f, rate, record_seed(9, i as u64)).map_err(|e| e.to_string())?;
        let masked: Vec<usize> = (0..ids.len()).filter(|&k| ex.labels[k] != IGNORE_LABEL).collect();
        ensure(masked == ex.mask_positions, || format!("function {i}: labels disagree with mask positions"))?;
        ensure(masked.len() == ((15 * ids.len() + 50) / 100).max(1), || {
            format!("function {i}: {} masked of {}", masked.len(), ids.len())
        })?;
        ensure(masked.iter().all(|&k| ex.input_ids[k] == model.mask_id()), || {
            format!("function {i}: masked position without the mask id")
        })?;
        ensure(ex.reconstruct() == ids, || format!("function {i}: reconstruction differs"))?;
    }
    Ok("lengths 1..=400, 1000 functions".into())
}

struct CsvRow(BTreeMap<String, String>);

impl CsvRow {
    fn get(&self, k: &str) -> &str {
        self.0.get(k).map_or("", String::as_str)
    }

    fn num(&self, k: &str) -> f64 {
        self.get(k).parse().unwrap_or(f64::NAN)
    }
}

fn parse_csv(text: &str) -> Vec<CsvRow> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    lines
        .map(|l| CsvRow(header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect()))
        .collect()
}

fn criterion_10() -> Outcome {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = MatrixConfig::load(root().join("paper-matrix.json")).map_err(|e| e.to_string())?;
    cfg.output_dir = out.path().to_path_buf();
    let start = Instant::now();
    let report = run_matrix(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1800), || format!("matrix took {:.0}s", elapsed.as_secs_f64()))?;
    ensure(report.failed_cells() == 0, || format!("{} cells failed", report.failed_cells()))?;
    let csv = std::fs::read_to_string(out.path().join("report.csv")).map_err(|e| e.to_string())?;
    let rows = parse_csv(&csv);

    let fert = |alg: &str, n: usize, v: &str| {
        rows.iter()
            .find(|r| {
                r.get("row_type") == "cell"
                    && r.get("algorithm") == alg
                    && r.get("vocab_size") == n.to_string()
                    && r.get("variant") == v
            })
            .map_or(f64::NAN, |r| r.num("fertility"))
    };
    let overlap = |n: usize, v: &str| {
        rows.iter()
            .find(|r| {
                r.get("row_type") == "overlap"
                    && r.get("algorithm") == "bpe+unigram+wordpiece"
                    && r.get("vocab_size") == n.to_string()
                    && r.get("variant") == v
            })
            .map_or(f64::NAN, |r| r.num("jaccard_percent"))
    };
    let sizes = [1000usize, 4000, 8000];
    let mut failures = Vec::new();
    for &n in &sizes {
        let (wp, b, u) = (fert("wordpiece", n, "default"), fert("bpe", n, "default"), fert("unigram", n, "default"));
        if !(wp - b >= 0.2 && b - u >= 0.2) {
            failures.push(format!("ordering at {n}: wordpiece {wp:.3}, bpe {b:.3}, unigram {u:.3}"));
        }
        for alg in ["bpe", "unigram", "wordpiece"] {
            let (d, p) = (fert(alg, n, "default"), fert(alg, n, "preprocessed"));
            if !(p <= d) {
                failures.push(format!("preprocessing at {n} for {alg}: {d:.3} -> {p:.3}"));
            }
        }
    }
    let bpe: Vec<f64> = sizes.iter().map(|&n| fert("bpe", n, "default")).collect();
    if !bpe.windows(2).all(|w| w[1] <= w[0] + 1e-9) {
        failures.push(format!("bpe monotonicity: {bpe:?}"));
    }
    for v in ["default", "preprocessed"] {
        let js: Vec<f64> = sizes.iter().map(|&n| overlap(n, v)).collect();
        if !js.windows(2).all(|w| w[1] < w[0]) {
            failures.push(format!("{v} overlap not strictly decreasing: {js:?}"));
        }
    }
    for &n in &sizes {
        let (d, p) = (overlap(n, "default"), overlap(n, "preprocessed"));
        if !(p >= d) {
            failures.push(format!("overlap at {n}: preprocessed {p:.3} < default {d:.3}"));
        }
    }
    let detail = format!("{} rows in {:.0}s", rows.len(), elapsed.as_secs_f64());
    ensure(failures.is_empty(), || format!("{detail}; {}", failures.join("; ")))?;
    Ok(detail)
}

fn main() -> ExitCode {
    let data = Data::load();
    let mut models = Models {
        data: &data,
        cache: BTreeMap::new(),
    };
    let start = Instant::now();
    let checks: Vec<(u32, Box<dyn FnOnce(&mut Models) -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(|_| criterion_6())),
        (7, Box::new(criterion_7)),
        (8, Box::new(|_| criterion_8())),
        (9, Box::new(criterion_9)),
        (10, Box::new(|_| criterion_10())),
    ];
    let mut failed = 0;
    for (n, check) in checks {
        match check(&mut models) {
            Ok(detail) => println!("PASS criterion {n}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n}: {detail}");
            }
        }
    }
    println!(
        "{} of 10 criteria passed ({} train / {} test functions, {:.0}s)",
        10 - failed,
        data.train.len(),
        data.test.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
