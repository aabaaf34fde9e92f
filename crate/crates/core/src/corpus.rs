//! Corpora of disassembled functions: JSONL ingestion, length filtering,
//! exact deduplication and seeded train/test splitting.
//!
//! Wire format, one JSON object per line:
//!
//! ```text
//! {"name":"f","signature":{"return_type":"int","param_types":["char*","int"]},"disassembly":"PUSH RBP\nRET","variant":"default"}
//! ```
//!
//! `signature` may be `null` and `variant` may be omitted (it then defaults
//! to `"default"`).
//!
//! Splits shuffle record indices with `rand_chacha::ChaCha8Rng::seed_from_u64(seed)`
//! driving `rand` 0.8's `SliceRandom::shuffle` (Fisher-Yates from the back),
//! then take the first `floor(fraction * n)` shuffled indices as the training
//! set. Both halves keep the original corpus order.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::{floor_scaled, Fraction};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignatureSpec {
    pub return_type: String,
    pub param_types: Vec<String>,
}

impl SignatureSpec {
    pub fn new(return_type: impl Into<String>, param_types: Vec<String>) -> Result<Self> {
        let return_type = return_type.into();
        if return_type.trim().is_empty() {
            return Err(Error::InvalidRecord("signature return type is empty".into()));
        }
        Ok(Self {
            return_type,
            param_types,
        })
    }

    /// Canonical `ret(p1, p2)` rendering.
    pub fn render(&self) -> String {
        format!("{}({})", self.return_type, self.param_types.join(", "))
    }
}

impl fmt::Display for SignatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for SignatureSpec {
    type Err = Error;

    /// Parses the canonical rendering back. The parameter list is the
    /// parenthesised group that closes the string, so return types that
    /// themselves contain parentheses survive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRecord(format!("not a canonical signature: {s:?}"));
        let s = s.trim();
        if !s.ends_with(')') {
            return Err(bad());
        }
        let bytes = s.as_bytes();
        let mut depth = 0i32;
        let mut open = None;
        for (i, &b) in bytes.iter().enumerate().rev() {
            match b {
                b')' => depth += 1,
                b'(' => {
                    depth -= 1;
                    if depth == 0 {
                        open = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let open = open.ok_or_else(bad)?;
        let inner = &s[open + 1..s.len() - 1];
        let mut params = Vec::new();
        if !inner.trim().is_empty() {
            let mut depth = 0i32;
            let mut start = 0;
            for (i, c) in inner.char_indices() {
                match c {
                    '(' | '[' | '<' => depth += 1,
                    ')' | ']' | '>' => depth -= 1,
                    ',' if depth == 0 => {
                        params.push(inner[start..i].trim().to_string());
                        start = i + 1;
                    }
                    _ => {}
                }
            }
            params.push(inner[start..].trim().to_string());
        }
        SignatureSpec::new(s[..open].trim(), params)
    }
}

/// One disassembled function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionRecord {
    name: String,
    signature: Option<SignatureSpec>,
    instructions: Vec<String>,
}

impl FunctionRecord {
    pub fn new(
        name: impl Into<String>,
        signature: Option<SignatureSpec>,
        instructions: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidRecord("function name is empty".into()));
        }
        if instructions.is_empty() {
            return Err(Error::EmptyFunction { name });
        }
        if let Some(bad) = instructions
            .iter()
            .find(|i| i.is_empty() || i.contains(['\n', '\r']))
        {
            return Err(Error::InvalidRecord(format!(
                "instruction {bad:?} is empty or spans lines"
            )));
        }
        Ok(Self {
            name,
            signature,
            instructions,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> Option<&SignatureSpec> {
        self.signature.as_ref()
    }

    pub fn instructions(&self) -> &[String] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Instructions joined with `"\n"`, no trailing newline. This is the
    /// `disassembly` field of the wire format.
    pub fn disassembly(&self) -> String {
        self.instructions.join("\n")
    }

    /// Text handed to tokenizers: every instruction terminated by `"\n"`.
    pub fn text(&self) -> String {
        let mut out = String::with_capacity(self.instructions.iter().map(|i| i.len() + 1).sum());
        for ins in &self.instructions {
            out.push_str(ins);
            out.push('\n');
        }
        out
    }

    pub(crate) fn with_instructions(&self, instructions: Vec<String>) -> Result<Self> {
        FunctionRecord::new(self.name.clone(), self.signature.clone(), instructions)
    }

    /// SHA-256 of the instructions with runs of spaces collapsed and text
    /// lowercased.
    pub fn dedup_key(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for (i, ins) in self.instructions.iter().enumerate() {
            if i > 0 {
                hasher.update(b"\n");
            }
            let mut prev_space = false;
            let mut buf = String::with_capacity(ins.len());
            for c in ins.chars() {
                if c == ' ' {
                    if prev_space {
                        continue;
                    }
                    prev_space = true;
                } else {
                    prev_space = false;
                }
                buf.extend(c.to_lowercase());
            }
            hasher.update(buf.as_bytes());
        }
        hasher.finalize().into()
    }
}

/// Splits raw disassembly into a record: one instruction per non-blank line,
/// trailing whitespace trimmed, internal spacing kept.
pub fn parse_function(
    raw_text: &str,
    name: &str,
    signature: Option<SignatureSpec>,
) -> Result<FunctionRecord> {
    let instructions: Vec<String> = raw_text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    if instructions.is_empty() {
        return Err(Error::EmptyFunction { name: name.into() });
    }
    FunctionRecord::new(name, signature, instructions)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Default,
    Preprocessed,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Default => "default",
            Variant::Preprocessed => "preprocessed",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Variant::Default),
            "preprocessed" => Ok(Variant::Preprocessed),
            other => Err(Error::InvalidConfig(format!("unknown dataset variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<FunctionRecord>,
    pub variant: Variant,
}

#[derive(Serialize, Deserialize)]
struct WireRecord {
    name: String,
    signature: Option<SignatureSpec>,
    disassembly: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variant: Option<Variant>,
}

impl Corpus {
    pub fn new(records: Vec<FunctionRecord>, variant: Variant) -> Self {
        Self { records, variant }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn instruction_count(&self) -> usize {
        self.records.iter().map(FunctionRecord::len).sum()
    }

    fn derive(&self, records: Vec<FunctionRecord>) -> Corpus {
        Corpus {
            records,
            variant: self.variant,
        }
    }

    /// Parses JSONL from a reader. Blank lines are skipped; line numbers in
    /// errors are 1-based.
    pub fn from_reader(reader: impl BufRead) -> Result<Corpus> {
        let mut records = Vec::new();
        let mut variant: Option<Variant> = None;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::MalformedLine {
                line: lineno,
                detail: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let wire: WireRecord =
                serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                    line: lineno,
                    detail: e.to_string(),
                })?;
            let v = wire.variant.unwrap_or_default();
            match variant {
                None => variant = Some(v),
                Some(prev) if prev != v => {
                    return Err(Error::MalformedLine {
                        line: lineno,
                        detail: Error::MixedVariants {
                            first: prev.to_string(),
                            second: v.to_string(),
                        }
                        .to_string(),
                    })
                }
                _ => {}
            }
            let rec = parse_function(&wire.disassembly, &wire.name, wire.signature).map_err(
                |e| Error::MalformedLine {
                    line: lineno,
                    detail: e.to_string(),
                },
            )?;
            records.push(rec);
        }
        Ok(Corpus::new(records, variant.unwrap_or_default()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Corpus> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Corpus::from_reader(BufReader::new(file))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        for rec in &self.records {
            let wire = WireRecord {
                name: rec.name.clone(),
                signature: rec.signature.clone(),
                disassembly: rec.disassembly(),
                variant: Some(self.variant),
            };
            serde_json::to_writer(&mut w, &wire)?;
            w.write_all(b"\n").map_err(|e| Error::io("<corpus>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Keeps records whose instruction count lies in `[min_instr, max_instr]`.
pub fn filter_by_length(corpus: &Corpus, min_instr: usize, max_instr: usize) -> Result<Corpus> {
    if min_instr < 1 || min_instr > max_instr {
        return Err(Error::InvalidConfig(format!(
            "length bounds must satisfy 1 <= min <= max, got ({min_instr}, {max_instr})"
        )));
    }
    Ok(corpus.derive(
        corpus
            .records
            .iter()
            .filter(|r| (min_instr..=max_instr).contains(&r.len()))
            .cloned()
            .collect(),
    ))
}

/// Drops every record whose [`FunctionRecord::dedup_key`] was already seen.
pub fn dedup(corpus: &Corpus) -> Corpus {
    let mut seen = HashSet::with_capacity(corpus.len());
    corpus.derive(
        corpus
            .records
            .iter()
            .filter(|r| seen.insert(r.dedup_key()))
            .cloned()
            .collect(),
    )
}

/// Seeded disjoint train/test partition with `|train| = floor(fraction * n)`.
pub fn split(corpus: &Corpus, train_fraction: Fraction, seed: u64) -> Result<(Corpus, Corpus)> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::CorpusTooSmall(n));
    }
    if *train_fraction.numer() == 0 || train_fraction >= Fraction::from_integer(1) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let n_train = floor_scaled(train_fraction, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (rec, keep) in corpus.records.iter().zip(in_train) {
        if keep {
            train.push(rec.clone());
        } else {
            test.push(rec.clone());
        }
    }
    Ok((corpus.derive(train), corpus.derive(test)))
}
