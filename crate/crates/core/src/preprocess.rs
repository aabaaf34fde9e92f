//! Address-to-identifier preprocessing.
//!
//! Within one function every memory address literal is replaced by a
//! sequential identifier (`addr0`, `addr1`, ...) assigned in first-occurrence
//! order, and every remaining hexadecimal literal is rewritten in decimal.
//!
//! A `0x`-prefixed literal is an address when it is the direct operand of a
//! control-flow mnemonic (`jmp`, `call`, any `j*`), or when it sits inside a
//! `[...]` memory reference and its value is at least the address threshold.
//! Everything else is numeric.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FunctionRecord, Variant};
use crate::error::{Error, Result};

pub const DEFAULT_ADDRESS_THRESHOLD: u64 = 0x1000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub id_prefix: String,
    pub id_base: u32,
    pub address_threshold: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            id_prefix: "addr".into(),
            id_base: 0,
            address_threshold: DEFAULT_ADDRESS_THRESHOLD,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.id_prefix.is_empty() || self.id_prefix.chars().any(|c| c.is_ascii_digit()) {
            return Err(Error::InvalidConfig(format!(
                "identifier prefix must be non-empty and digit-free, got {:?}",
                self.id_prefix
            )));
        }
        if self.id_prefix.contains("0x") {
            return Err(Error::InvalidConfig("identifier prefix may not contain `0x`".into()));
        }
        if self.id_base > 1 {
            return Err(Error::InvalidConfig(format!(
                "identifier base must be 0 or 1, got {}",
                self.id_base
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperandContext {
    ControlFlowTarget,
    MemoryReference,
    Immediate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiteralClass {
    Address,
    Numeric,
}

/// Per-function address table, dense indices in first-occurrence order.
/// Addresses are compared by value, so `0x12ce` and `0x000012ce` share an
/// identifier.
#[derive(Clone, Debug, Default)]
pub struct AddressMap {
    index: HashMap<u64, u32>,
    order: Vec<String>,
}

impl AddressMap {
    pub fn get_or_insert(&mut self, literal: &str, value: u64) -> u32 {
        let next = self.order.len() as u32;
        *self.index.entry(value).or_insert_with(|| {
            self.order.push(literal.to_string());
            next
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Literals as first seen, indexed by identifier offset.
    pub fn literals(&self) -> &[String] {
        &self.order
    }
}

const INSTRUCTION_PREFIXES: &[&str] = &["rep", "repe", "repz", "repne", "repnz", "lock", "bnd", "notrack"];

/// First mnemonic of an instruction, skipping `rep`/`lock`/`bnd` style prefixes.
pub fn mnemonic(instruction: &str) -> &str {
    let mut words = instruction.split_whitespace();
    let mut first = words.next().unwrap_or("");
    while INSTRUCTION_PREFIXES.contains(&first.to_ascii_lowercase().as_str()) {
        match words.next() {
            Some(w) => first = w,
            None => break,
        }
    }
    first
}

pub fn is_control_flow(mnemonic: &str) -> bool {
    let m = mnemonic.to_ascii_lowercase();
    m == "call" || m.starts_with('j')
}

fn parse_hex(literal: &str) -> Result<u64> {
    let digits = literal
        .strip_prefix("0x")
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_hexdigit()))
        .ok_or_else(|| Error::MalformedHexLiteral(literal.to_string()))?;
    u64::from_str_radix(digits, 16).map_err(|_| Error::Overflow(literal.to_string()))
}

pub fn hex_to_decimal(literal: &str) -> Result<String> {
    parse_hex(literal).map(|v| v.to_string())
}

pub fn classify_hex_literal(
    instruction_mnemonic: &str,
    operand_context: OperandContext,
    literal: &str,
    address_threshold: u64,
) -> Result<LiteralClass> {
    let value = parse_hex(literal)?;
    Ok(match operand_context {
        OperandContext::ControlFlowTarget => LiteralClass::Address,
        OperandContext::MemoryReference if value >= address_threshold => LiteralClass::Address,
        OperandContext::Immediate if is_control_flow(instruction_mnemonic) => LiteralClass::Address,
        _ => LiteralClass::Numeric,
    })
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn rewrite_instruction(
    instruction: &str,
    config: &PreprocessConfig,
    map: &mut AddressMap,
) -> Result<String> {
    let mnem = mnemonic(instruction);
    let control_flow = is_control_flow(mnem);
    let bytes = instruction.as_bytes();
    let mut out = String::with_capacity(instruction.len());
    let mut depth = 0usize;
    let mut last = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'[' => depth += 1,
            b']' => depth = depth.saturating_sub(1),
            b'0' if bytes.get(i + 1) == Some(&b'x')
                && bytes.get(i + 2).is_some_and(u8::is_ascii_hexdigit)
                && (i == 0 || !is_word_byte(bytes[i - 1])) =>
            {
                let mut end = i + 2;
                while end < bytes.len() && bytes[end].is_ascii_hexdigit() {
                    end += 1;
                }
                let literal = &instruction[i..end];
                if end < bytes.len() && is_word_byte(bytes[end]) {
                    return Err(Error::MalformedHexLiteral(
                        instruction[i..]
                            .split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
                            .next()
                            .unwrap_or(literal)
                            .to_string(),
                    ));
                }
                let context = if depth > 0 {
                    OperandContext::MemoryReference
                } else if control_flow {
                    OperandContext::ControlFlowTarget
                } else {
                    OperandContext::Immediate
                };
                let value = parse_hex(literal)
                    .map_err(|_| Error::MalformedHexLiteral(literal.to_string()))?;
                out.push_str(&instruction[last..i]);
                match classify_hex_literal(mnem, context, literal, config.address_threshold)? {
                    LiteralClass::Address => {
                        let idx = map.get_or_insert(literal, value) + config.id_base;
                        out.push_str(&config.id_prefix);
                        out.push_str(&idx.to_string());
                    }
                    LiteralClass::Numeric => out.push_str(&value.to_string()),
                }
                last = end;
                i = end;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    out.push_str(&instruction[last..]);
    Ok(out)
}

/// Rewrites one function. Returns the transformed record and its address table.
pub fn normalize_function_with_map(
    record: &FunctionRecord,
    config: &PreprocessConfig,
) -> Result<(FunctionRecord, AddressMap)> {
    config.validate()?;
    let mut map = AddressMap::default();
    let instructions = record
        .instructions()
        .iter()
        .map(|ins| rewrite_instruction(ins, config, &mut map))
        .collect::<Result<Vec<_>>>()?;
    Ok((record.with_instructions(instructions)?, map))
}

pub fn normalize_function(record: &FunctionRecord, config: &PreprocessConfig) -> Result<FunctionRecord> {
    normalize_function_with_map(record, config).map(|(r, _)| r)
}

/// Applies [`normalize_function`] to every record and marks the corpus
/// as preprocessed. Already-preprocessed corpora are passed through
/// (the transformation is idempotent).
pub fn preprocess_corpus(corpus: &Corpus, config: &PreprocessConfig) -> Result<Corpus> {
    use rayon::prelude::*;
    let records = corpus
        .records
        .par_iter()
        .map(|r| normalize_function(r, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(records, Variant::Preprocessed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_function;
    use proptest::prelude::*;

    fn norm(text: &str) -> Vec<String> {
        let r = parse_function(text, "f", None).unwrap();
        normalize_function(&r, &PreprocessConfig::default())
            .unwrap()
            .instructions()
            .to_vec()
    }

    #[test]
    fn first_occurrence_identifiers() {
        assert_eq!(
            norm("CALL 0x1FF0\nJMP 0x2000\nCALL 0x1FF0"),
            ["CALL addr0", "JMP addr1", "CALL addr0"]
        );
    }

    #[test]
    fn immediates_become_decimal() {
        assert_eq!(norm("MOV EAX,0x1F"), ["MOV EAX,31"]);
        assert_eq!(norm("SUB RSP,0x8\nCMP CL,0xa"), ["SUB RSP,8", "CMP CL,10"]);
        assert_eq!(
            norm("MOV dword ptr [RBP + -0x14],EDI"),
            ["MOV dword ptr [RBP + -20],EDI"]
        );
        assert_eq!(norm("LEA RDI,[RBX + RAX*1 + 0x1]"), ["LEA RDI,[RBX + RAX*1 + 1]"]);
    }

    #[test]
    fn bracketed_large_values_are_addresses() {
        assert_eq!(
            norm("MOVZX R9D,word ptr [0x202010]\nMOVZX R8D,word ptr [0x202012]\nJMP 0x1230"),
            ["MOVZX R9D,word ptr [addr0]", "MOVZX R8D,word ptr [addr1]", "JMP addr2"]
        );
    }

    #[test]
    fn base_one_identifiers() {
        let r = parse_function("JMP 0x1234\nCALL 0x5678\nJMP 0x1234", "f", None).unwrap();
        let cfg = PreprocessConfig { id_base: 1, ..Default::default() };
        let out = normalize_function(&r, &cfg).unwrap();
        assert_eq!(out.instructions(), ["JMP addr1", "CALL addr2", "JMP addr1"]);
    }

    #[test]
    fn classification_rules() {
        let t = DEFAULT_ADDRESS_THRESHOLD;
        assert_eq!(
            classify_hex_literal("JGE", OperandContext::ControlFlowTarget, "0x000012ce", t).unwrap(),
            LiteralClass::Address
        );
        assert_eq!(
            classify_hex_literal("MOV", OperandContext::Immediate, "0x2", t).unwrap(),
            LiteralClass::Numeric
        );
        assert_eq!(
            classify_hex_literal("MOVZX", OperandContext::MemoryReference, "0x202010", t).unwrap(),
            LiteralClass::Address
        );
        assert_eq!(
            classify_hex_literal("MOV", OperandContext::MemoryReference, "0x14", t).unwrap(),
            LiteralClass::Numeric
        );
    }

    #[test]
    fn hex_conversion() {
        assert_eq!(hex_to_decimal("0x0").unwrap(), "0");
        assert_eq!(hex_to_decimal("0x10").unwrap(), "16");
        assert_eq!(hex_to_decimal("0xFFFFFFFF").unwrap(), "4294967295");
        assert_eq!(hex_to_decimal("0xffffffffffffffff").unwrap(), u64::MAX.to_string());
        assert!(matches!(hex_to_decimal("0x1ffffffffffffffff"), Err(Error::Overflow(_))));
        assert!(matches!(hex_to_decimal("0x"), Err(Error::MalformedHexLiteral(_))));
        assert!(matches!(hex_to_decimal("12"), Err(Error::MalformedHexLiteral(_))));
    }

    #[test]
    fn malformed_literals_are_rejected() {
        let r = parse_function("MOV EAX,0x12zz", "f", None).unwrap();
        assert!(matches!(
            normalize_function(&r, &PreprocessConfig::default()),
            Err(Error::MalformedHexLiteral(_))
        ));
        let r = parse_function("MOV RAX,0x1ffffffffffffffff", "f", None).unwrap();
        assert!(matches!(
            normalize_function(&r, &PreprocessConfig::default()),
            Err(Error::MalformedHexLiteral(_))
        ));
    }

    #[test]
    fn bare_hex_and_embedded_text_untouched() {
        assert_eq!(norm("MOV EAX,ff\nCALL sub_0x10"), ["MOV EAX,ff", "CALL sub_0x10"]);
    }

    #[test]
    fn prefixed_control_flow() {
        assert_eq!(norm("BND JMP 0x4010"), ["BND JMP addr0"]);
        assert_eq!(mnemonic("REP MOVSB"), "MOVSB");
    }

    #[test]
    fn config_validation() {
        let bad = PreprocessConfig { id_prefix: "a1".into(), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PreprocessConfig { id_base: 2, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    fn instruction() -> impl Strategy<Value = String> {
        let mnem = prop::sample::select(vec!["MOV", "CALL", "JMP", "JNZ", "ADD", "LEA", "CMP"]);
        let operand = prop_oneof![
            (0u64..0x400000).prop_map(|v| format!("0x{v:x}")),
            (0u64..0x400000).prop_map(|v| format!("[0x{v:08x}]")),
            (0u64..0x100).prop_map(|v| format!("[RBP + -0x{v:x}]")),
            prop::sample::select(vec!["EAX", "RDI", "R8D"]).prop_map(String::from),
            (0u64..100).prop_map(|v| v.to_string()),
        ];
        (mnem, prop::collection::vec(operand, 1..3))
            .prop_map(|(m, ops)| format!("{m} {}", ops.join(",")))
    }

    proptest! {
        #[test]
        fn preprocessing_invariants(lines in prop::collection::vec(instruction(), 1..20), base in 0u32..2) {
            let rec = FunctionRecord::new("p", None, lines.clone()).unwrap();
            let cfg = PreprocessConfig { id_base: base, ..Default::default() };
            let (out, map) = normalize_function_with_map(&rec, &cfg).unwrap();
            prop_assert_eq!(out.len(), rec.len());
            // idempotent
            prop_assert_eq!(normalize_function(&out, &cfg).unwrap(), out.clone());
            // identifiers, in order of first appearance, are base, base+1, ...
            let mut seen: Vec<u32> = Vec::new();
            for ins in out.instructions() {
                let mut rest = ins.as_str();
                while let Some(p) = rest.find("addr") {
                    let digits: String = rest[p + 4..].chars().take_while(|c| c.is_ascii_digit()).collect();
                    let idx: u32 = digits.parse().unwrap();
                    if !seen.contains(&idx) { seen.push(idx); }
                    rest = &rest[p + 4 + digits.len()..];
                }
            }
            let expected: Vec<u32> = (base..base + map.len() as u32).collect();
            prop_assert_eq!(seen, expected);
            prop_assert!(out.instructions().iter().all(|i| !i.contains("0x")));
        }

        #[test]
        fn same_address_same_identifier(addr in 0x1000u64..0xffffff, n in 2usize..6) {
            let lines: Vec<String> = (0..n).map(|i| if i % 2 == 0 { format!("CALL 0x{addr:x}") } else { "NOP".into() }).collect();
            let rec = FunctionRecord::new("p", None, lines).unwrap();
            let out = normalize_function(&rec, &PreprocessConfig::default()).unwrap();
            for (i, ins) in out.instructions().iter().enumerate() {
                if i % 2 == 0 { prop_assert_eq!(ins, "CALL addr0"); }
            }
        }

        #[test]
        fn numeric_values_preserved(v: u64) {
            let rec = FunctionRecord::new("p", None, vec![format!("MOV RAX,0x{v:x}")]).unwrap();
            let out = normalize_function(&rec, &PreprocessConfig::default()).unwrap();
            prop_assert_eq!(out.instructions()[0].clone(), format!("MOV RAX,{v}"));
        }
    }
}
