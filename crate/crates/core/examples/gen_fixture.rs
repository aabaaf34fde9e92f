//! Generates the bundled fixture corpus of Ghidra-style x86-64 listings.
//!
//! ```text
//! cargo run --release -p asmtok-core --example gen_fixture -- fixtures/functions.jsonl
//! ```
//!
//! Most functions are synthesized from block templates modelled on GCC output
//! at -O0 and -O2 (frame setup, spills, loops, calls through the PLT, global
//! and string references, switch tables). A handful of hand-written listings
//! are appended verbatim. A few functions fall outside the 30..=100
//! instruction range and a few are duplicated (sometimes with different case
//! or spacing) so the filter and dedup stages have work to do.

use std::path::PathBuf;

use asmtok::{Corpus, FunctionRecord, SignatureSpec, Variant};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_a5a7;
const GENERATED: usize = 640;

const R64: [&str; 14] = [
    "RAX", "RBX", "RCX", "RDX", "RSI", "RDI", "R8", "R9", "R10", "R11", "R12", "R13", "R14", "R15",
];
const R32: [&str; 14] = [
    "EAX", "EBX", "ECX", "EDX", "ESI", "EDI", "R8D", "R9D", "R10D", "R11D", "R12D", "R13D", "R14D", "R15D",
];
const R8: [&str; 14] = [
    "AL", "BL", "CL", "DL", "SIL", "DIL", "R8B", "R9B", "R10B", "R11B", "R12B", "R13B", "R14B", "R15B",
];
const ARG64: [&str; 6] = ["RDI", "RSI", "RDX", "RCX", "R8", "R9"];
const ARG32: [&str; 6] = ["EDI", "ESI", "EDX", "ECX", "R8D", "R9D"];
const CALLEE_SAVED: [&str; 5] = ["RBX", "R12", "R13", "R14", "R15"];
const CALLEE_SAVED32: [&str; 5] = ["EBX", "R12D", "R13D", "R14D", "R15D"];
const JCC: [&str; 14] = [
    "JZ", "JNZ", "JLE", "JG", "JL", "JGE", "JA", "JBE", "JC", "JNC", "JS", "JNS", "JNC", "JBE",
];
const SETCC: [&str; 6] = ["SETZ", "SETNZ", "SETG", "SETLE", "SETA", "SETBE"];
const CMOV: [&str; 5] = ["CMOVGE", "CMOVL", "CMOVZ", "CMOVNZ", "CMOVA"];
const TYPES: [&str; 16] = [
    "int", "char *", "void", "long", "uint", "size_t", "double", "int *", "char", "void *",
    "undefined8", "undefined4", "byte", "float", "ulong", "FILE *",
];
const NAMES: [&str; 24] = [
    "parse", "read_line", "hash", "compare", "swap", "push", "pop", "lookup", "insert", "free_list",
    "print_usage", "init", "update", "checksum", "copy_buf", "find", "count", "encode", "decode",
    "sort", "merge", "reverse", "trim", "split",
];

/// One simulated binary: its own load layout and import stubs.
struct Binary {
    text: u64,
    plt: Vec<u64>,
    data: u64,
    rodata: u64,
    next_fn: u64,
}

impl Binary {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let base: u64 = if rng.gen_bool(0.8) { 0x0010_0000 } else { 0x0040_0000 };
        let plt_base = base + 0x1020 + 0x10 * rng.gen_range(0..4u64);
        let n_imports = rng.gen_range(6..48);
        let text_size = 0x1000 * rng.gen_range(2..64u64);
        let text = base + 0x1000 + 0x10 * (n_imports + 8);
        let rodata = (text + text_size + 0xfff) & !0xfff;
        let data = rodata + 0x1000 * rng.gen_range(2..16u64) + 0x10;
        Binary {
            text,
            plt: (0..n_imports).map(|i| plt_base + 0x10 * i).collect(),
            data,
            rodata: rodata + 4,
            next_fn: 0,
        }
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    bin: &'a Binary,
    start: u64,
    out: Vec<String>,
    /// Local stack slots in use, as positive offsets below RBP.
    slots: Vec<u32>,
    labels: Vec<u64>,
    internal: Vec<u64>,
}

fn hex(v: u64) -> String {
    format!("0x{v:x}")
}

fn addr(v: u64) -> String {
    format!("0x{v:08x}")
}

impl Gen<'_> {
    fn emit(&mut self, s: impl Into<String>) {
        self.out.push(s.into());
    }

    fn pick<'s>(&mut self, xs: &[&'s str]) -> &'s str {
        xs.choose(self.rng).copied().expect("non-empty")
    }

    fn slot(&mut self) -> u32 {
        *self.slots.choose(self.rng).expect("slots")
    }

    fn local(&mut self, width: &str) -> String {
        let s = self.slot();
        format!("{width} ptr [RBP + -{}]", hex(s as u64))
    }

    /// A branch target inside the current function.
    fn target(&mut self) -> String {
        if self.labels.is_empty() || self.rng.gen_bool(0.5) {
            let off = self.rng.gen_range(0x8..0x800u64);
            self.labels.push(self.start + off);
        }
        let t = *self.labels.choose(self.rng).expect("labels");
        addr(t)
    }

    fn callee(&mut self) -> String {
        if self.rng.gen_bool(0.7) || self.internal.is_empty() {
            addr(*self.bin.plt.choose(self.rng).expect("plt"))
        } else {
            addr(*self.internal.choose(self.rng).expect("internal"))
        }
    }

    fn global(&mut self) -> String {
        addr(self.bin.data + 4 * self.rng.gen_range(0..0x400u64))
    }

    fn string(&mut self) -> String {
        addr(self.bin.rodata + self.rng.gen_range(0..0x800u64) * 4)
    }

    fn small_imm(&mut self) -> String {
        let v: u64 = match self.rng.gen_range(0..10) {
            0..=3 => self.rng.gen_range(0..4),
            4..=6 => self.rng.gen_range(4..64),
            7..=8 => self.rng.gen_range(64..0x1000),
            _ => self.rng.gen_range(0x1000..0x1_0000_0000),
        };
        hex(v)
    }

    fn disp(&mut self) -> u64 {
        match self.rng.gen_range(0..4) {
            0 => 0,
            1 => 8 * self.rng.gen_range(1..8u64),
            2 => 4 * self.rng.gen_range(1..64u64),
            _ => self.rng.gen_range(1..0x400u64),
        }
    }

    /// A memory operand in one of the forms the decompiler prints.
    fn mem(&mut self, width: &str) -> String {
        let base = self.pick(&R64);
        let d = self.disp();
        let inner = match self.rng.gen_range(0..5) {
            0 | 1 if d == 0 => base.to_string(),
            0 | 1 => format!("{base} + {}", hex(d)),
            2 => format!("{base} + -{}", hex(d.max(1))),
            3 => {
                let idx = self.pick(&R64);
                let sc = self.pick(&["0x1", "0x2", "0x4", "0x8"]);
                if d == 0 {
                    format!("{base} + {idx}*{sc}")
                } else {
                    format!("{base} + {idx}*{sc} + {}", hex(d))
                }
            }
            _ => {
                let s = if self.slots.is_empty() { 8 * self.rng.gen_range(1..16) } else { self.slot() };
                let r = if self.rng.gen_bool(0.5) { "RBP" } else { "RSP" };
                if r == "RBP" {
                    format!("RBP + -{}", hex(s as u64))
                } else {
                    format!("RSP + {}", hex(s as u64))
                }
            }
        };
        format!("{width} ptr [{inner}]")
    }

    /// A generic ALU or data-movement instruction with random operands.
    fn alu(&mut self) {
        const OPS: [&str; 22] = [
            "MOV", "MOV", "MOV", "ADD", "SUB", "AND", "OR", "XOR", "CMP", "TEST", "IMUL", "LEA",
            "MOVZX", "MOVSX", "SHL", "SHR", "SAR", "ROL", "SBB", "ADC", "BT", "XCHG",
        ];
        let op = self.pick(&OPS);
        let wide = self.rng.gen_bool(0.5);
        let ri = self.rng.gen_range(0..R32.len());
        let r = if wide { R64[ri] } else { R32[ri] };
        let w = if wide { "qword" } else { "dword" };
        let line = match op {
            "LEA" => {
                let m = self.mem("x");
                format!("LEA {r},{}", &m[6..])
            }
            "MOVZX" | "MOVSX" => {
                let bw = self.pick(&["byte", "word"]);
                let m = self.mem(bw);
                format!("{op} {},{m}", R32[ri])
            }
            "SHL" | "SHR" | "SAR" | "ROL" => {
                let n = self.rng.gen_range(1..32u64);
                if self.rng.gen_bool(0.2) {
                    format!("{op} {r},CL")
                } else {
                    format!("{op} {r},{}", hex(n))
                }
            }
            _ => match self.rng.gen_range(0..4) {
                0 => {
                    let j = self.rng.gen_range(0..R32.len());
                    let r2 = if wide { R64[j] } else { R32[j] };
                    format!("{op} {r},{r2}")
                }
                1 => {
                    let v = self.small_imm();
                    format!("{op} {r},{v}")
                }
                2 => {
                    let m = self.mem(w);
                    format!("{op} {r},{m}")
                }
                _ => {
                    let m = self.mem(w);
                    if self.rng.gen_bool(0.5) {
                        format!("{op} {m},{r}")
                    } else {
                        let v = self.small_imm();
                        format!("{op} {m},{v}")
                    }
                }
            },
        };
        self.emit(line);
    }

    fn o0_prologue(&mut self, nargs: usize) {
        self.emit("PUSH RBP");
        self.emit("MOV RBP,RSP");
        let frame = 0x10 * self.rng.gen_range(1..6u64);
        if self.rng.gen_bool(0.6) {
            self.emit(format!("SUB RSP,{}", hex(frame)));
        }
        let mut off = 0x4u32;
        for i in 0..nargs {
            if self.rng.gen_bool(0.5) {
                off += 4;
                self.slots.push(off);
                self.emit(format!("MOV dword ptr [RBP + -{}],{}", hex(off as u64), ARG32[i]));
            } else {
                off = (off + 8 + 7) & !7;
                self.slots.push(off);
                self.emit(format!("MOV qword ptr [RBP + -{}],{}", hex(off as u64), ARG64[i]));
            }
        }
        for _ in 0..self.rng.gen_range(2..8) {
            off += 4 * self.rng.gen_range(1..24);
            self.slots.push(off);
        }
    }

    fn o0_block(&mut self) {
        match self.rng.gen_range(0..34) {
            17..=33 => self.alu(),
            0 => {
                let l = self.local("dword");
                let v = self.small_imm();
                self.emit(format!("MOV {l},{v}"));
            }
            1 => {
                let (a, c) = (self.local("dword"), self.local("dword"));
                self.emit(format!("MOV EAX,{a}"));
                match self.rng.gen_range(0..4) {
                    0 => {
                        let b = self.local("dword");
                        self.emit(format!("ADD EAX,{b}"));
                    }
                    1 => {
                        let v = self.small_imm();
                        self.emit(format!("SUB EAX,{v}"));
                    }
                    2 => {
                        let b = self.local("dword");
                        self.emit(format!("IMUL EAX,{b}"));
                    }
                    _ => {
                        let b = self.local("dword");
                        self.emit(format!("MOV EDX,{b}"));
                        self.emit("ADD EAX,EDX");
                    }
                }
                self.emit(format!("MOV {c},EAX"));
            }
            2 => {
                let a = self.local("dword");
                if self.rng.gen_bool(0.5) {
                    let v = self.small_imm();
                    self.emit(format!("CMP {a},{v}"));
                } else {
                    let b = self.local("dword");
                    self.emit(format!("MOV EAX,{a}"));
                    self.emit(format!("CMP EAX,{b}"));
                }
                let j = self.pick(&JCC);
                let t = self.target();
                self.emit(format!("{j} {t}"));
            }
            3 => {
                let nargs = self.rng.gen_range(0..4);
                for i in (0..nargs).rev() {
                    if self.rng.gen_bool(0.5) {
                        let l = self.local("dword");
                        self.emit(format!("MOV EAX,{l}"));
                        self.emit(format!("MOV {},EAX", ARG32[i]));
                    } else {
                        let l = self.local("qword");
                        self.emit(format!("MOV RAX,{l}"));
                        self.emit(format!("MOV {},RAX", ARG64[i]));
                    }
                }
                let c = self.callee();
                self.emit(format!("CALL {c}"));
                if self.rng.gen_bool(0.6) {
                    let l = self.local("dword");
                    self.emit(format!("MOV {l},EAX"));
                }
            }
            4 => {
                let s = self.string();
                self.emit(format!("LEA RAX,[{s}]"));
                self.emit("MOV RDI,RAX");
                if self.rng.gen_bool(0.5) {
                    self.emit("MOV EAX,0x0");
                }
                let c = self.callee();
                self.emit(format!("CALL {c}"));
            }
            5 => {
                let (i, arr) = (self.local("dword"), self.local("qword"));
                self.emit(format!("MOV EAX,{i}"));
                self.emit("CDQE");
                let scale = self.pick(&["0x4", "0x8", "0x1"]);
                self.emit(format!("LEA RDX,[RAX*{scale}]"));
                self.emit(format!("MOV RAX,{arr}"));
                self.emit("ADD RAX,RDX");
                self.emit(if scale == "0x8" { "MOV RAX,qword ptr [RAX]" } else { "MOV EAX,dword ptr [RAX]" });
            }
            6 => {
                let p = self.local("qword");
                self.emit(format!("MOV RAX,{p}"));
                self.emit("MOVZX EAX,byte ptr [RAX]");
                if self.rng.gen_bool(0.5) {
                    self.emit("MOVSX EAX,AL");
                    let v = self.small_imm();
                    self.emit(format!("CMP EAX,{v}"));
                } else {
                    self.emit("TEST AL,AL");
                }
                let j = self.pick(&["JZ", "JNZ"]);
                let t = self.target();
                self.emit(format!("{j} {t}"));
            }
            7 => {
                let g = self.global();
                self.emit(format!("MOV EAX,dword ptr [{g}]"));
                let v = self.small_imm();
                self.emit(format!("ADD EAX,{v}"));
                self.emit(format!("MOV dword ptr [{g}],EAX"));
            }
            8 => {
                let i = self.local("dword");
                self.emit(format!("ADD {i},0x1"));
                if self.rng.gen_bool(0.5) {
                    let t = self.target();
                    self.emit(format!("JMP {t}"));
                }
            }
            9 => {
                let (a, b, c) = (self.local("dword"), self.local("dword"), self.local("dword"));
                self.emit(format!("MOV EAX,{a}"));
                self.emit("CDQ");
                self.emit(format!("IDIV {b}"));
                let r = self.pick(&["EDX", "EAX"]);
                self.emit(format!("MOV {c},{r}"));
            }
            10 => {
                let a = self.local("dword");
                self.emit(format!("MOV EAX,{a}"));
                match self.rng.gen_range(0..3) {
                    0 => {
                        self.emit("SHL EAX,0x2");
                    }
                    1 => {
                        self.emit("MOV EDX,EAX");
                        self.emit("SHR EDX,0x1f");
                        self.emit("ADD EAX,EDX");
                        self.emit("SAR EAX,1");
                    }
                    _ => {
                        self.emit("LEA EDX,[RAX + RAX*0x1]");
                        self.emit("MOV EAX,EDX");
                    }
                }
                let c = self.local("dword");
                self.emit(format!("MOV {c},EAX"));
            }
            11 => {
                let (p, v) = (self.local("qword"), self.local("dword"));
                self.emit(format!("MOV RAX,{p}"));
                self.emit(format!("MOV EDX,{v}"));
                let disp = 4 * self.rng.gen_range(0..8u64);
                if disp == 0 {
                    self.emit("MOV dword ptr [RAX],EDX");
                } else {
                    self.emit(format!("MOV dword ptr [RAX + {}],EDX", hex(disp)));
                }
            }
            12 => {
                let (a, b) = (self.local("dword"), self.local("dword"));
                if self.rng.gen_bool(0.5) {
                    self.emit(format!("MOVSS XMM0,{a}"));
                    let c = self.string();
                    self.emit(format!("MOVSS XMM1,dword ptr [{c}]"));
                    let op = self.pick(&["ADDSS", "MULSS", "DIVSS", "SUBSS"]);
                    self.emit(format!("{op} XMM0,XMM1"));
                    self.emit(format!("MOVSS {b},XMM0"));
                } else {
                    self.emit("PXOR XMM0,XMM0");
                    self.emit(format!("CVTSI2SD XMM0,{a}"));
                    let q = self.local("qword");
                    self.emit(format!("MOVSD {q},XMM0"));
                }
            }
            13 => {
                let (a, b) = (self.local("dword"), self.local("dword"));
                self.emit(format!("MOV EAX,{a}"));
                self.emit(format!("CMP EAX,{b}"));
                let s = self.pick(&SETCC);
                self.emit(format!("{s} AL"));
                self.emit("MOVZX EAX,AL");
            }
            14 => {
                let v = self.local("dword");
                let n = self.rng.gen_range(3..9u64);
                self.emit(format!("CMP {v},{}", hex(n)));
                let t = self.target();
                self.emit(format!("JA {t}"));
                self.emit(format!("MOV EAX,{v}"));
                self.emit("LEA RDX,[RAX*0x4]");
                let tab = self.string();
                self.emit(format!("LEA RAX,[{tab}]"));
                self.emit("MOV EAX,dword ptr [RDX + RAX*0x1]");
                self.emit("CDQE");
                self.emit(format!("LEA RDX,[{tab}]"));
                self.emit("ADD RAX,RDX");
                self.emit("JMP RAX");
            }
            15 => {
                let (n, p) = (self.local("qword"), self.local("qword"));
                self.emit(format!("MOV RDX,{n}"));
                self.emit(format!("MOV RAX,{p}"));
                self.emit("MOV ESI,0x0");
                self.emit("MOV RDI,RAX");
                let c = self.callee();
                self.emit(format!("CALL {c}"));
            }
            _ => {
                let p = self.local("qword");
                self.emit(format!("MOV RAX,{p}"));
                let d = 8 * self.rng.gen_range(1..4u64);
                self.emit(format!("MOV RAX,qword ptr [RAX + {}]", hex(d)));
                self.emit(format!("MOV {p},RAX"));
                self.emit(format!("CMP {p},0x0"));
                let t = self.target();
                self.emit(format!("JNZ {t}"));
            }
        }
    }

    fn o0_epilogue(&mut self, leave: bool) {
        if self.rng.gen_bool(0.5) {
            let l = self.local("dword");
            self.emit(format!("MOV EAX,{l}"));
        }
        if leave {
            self.emit("LEAVE");
        } else {
            self.emit("POP RBP");
        }
        self.emit("RET");
    }

    fn o2_prologue(&mut self) -> Vec<&'static str> {
        let n = self.rng.gen_range(0..5);
        let mut saved: Vec<&'static str> = Vec::new();
        for r in ["R15", "R14", "R13", "R12", "RBP", "RBX"].iter().skip(6 - n) {
            self.emit(format!("PUSH {r}"));
            saved.push(r);
        }
        if self.rng.gen_bool(0.5) {
            let f = 8 + 0x10 * self.rng.gen_range(0..4u64);
            self.emit(format!("SUB RSP,{}", hex(f)));
            saved.push("frame");
            self.slots.push(f as u32);
        }
        saved
    }

    fn reg32(&mut self) -> &'static str {
        let i = self.rng.gen_range(0..R32.len());
        R32[i]
    }

    fn o2_block(&mut self) {
        match self.rng.gen_range(0..36) {
            14..=35 => self.alu(),
            0 => {
                let (a, b) = (self.pick(&R64), self.pick(&ARG64));
                self.emit(format!("MOV {a},{b}"));
                let v = self.small_imm();
                self.emit(format!("ADD {a},{v}"));
            }
            1 => {
                let r = self.reg32();
                self.emit(format!("TEST {r},{r}"));
                let j = self.pick(&["JZ", "JNZ", "JLE", "JS", "JG"]);
                let t = self.target();
                self.emit(format!("{j} {t}"));
            }
            2 => {
                let r = self.reg32();
                let v = self.small_imm();
                self.emit(format!("CMP {r},{v}"));
                let j = self.pick(&JCC);
                let t = self.target();
                self.emit(format!("{j} {t}"));
            }
            3 => {
                let (d, b) = (self.reg32(), self.pick(&R64));
                let disp = self.rng.gen_range(0..16u64);
                if disp == 0 {
                    self.emit(format!("MOVZX {d},byte ptr [{b}]"));
                } else {
                    self.emit(format!("MOVZX {d},byte ptr [{b} + {}]", hex(disp)));
                }
                if self.rng.gen_bool(0.4) {
                    self.emit(format!("MOVSXD RAX,{d}"));
                }
            }
            4 => {
                let i = self.rng.gen_range(0..CALLEE_SAVED.len());
                self.emit(format!("MOV RDI,{}", CALLEE_SAVED[i]));
                if self.rng.gen_bool(0.5) {
                    let s = self.string();
                    self.emit(format!("LEA RSI,[{s}]"));
                }
                let c = self.callee();
                self.emit(format!("CALL {c}"));
                let j = self.rng.gen_range(0..CALLEE_SAVED32.len());
                self.emit(format!("MOV {},EAX", CALLEE_SAVED32[j]));
            }
            5 => {
                let i = self.rng.gen_range(0..CALLEE_SAVED.len());
                self.emit(format!("ADD {},0x1", CALLEE_SAVED[i]));
                self.emit(format!("CMP {},RBP", CALLEE_SAVED[i]));
                let t = self.target();
                self.emit(format!("JNZ {t}"));
            }
            6 => {
                self.emit("XOR EAX,EAX");
                if self.rng.gen_bool(0.5) {
                    self.emit("XOR EDX,EDX");
                }
            }
            7 => {
                let g = self.global();
                let r = self.pick(&["RAX", "RDX", "RBX"]);
                self.emit(format!("MOV {r},qword ptr [{g}]"));
                if self.rng.gen_bool(0.5) {
                    self.emit(format!("TEST {r},{r}"));
                    let t = self.target();
                    self.emit(format!("JZ {t}"));
                }
            }
            8 => {
                let (a, b) = (self.reg32(), self.reg32());
                self.emit(format!("CMP {a},{b}"));
                let c = self.pick(&CMOV);
                self.emit(format!("{c} {a},{b}"));
            }
            9 => {
                let s = self.string();
                self.emit(format!("LEA RSI,[{s}]"));
                self.emit("MOV EDI,0x1");
                self.emit("XOR EAX,EAX");
                let c = self.callee();
                self.emit(format!("CALL {c}"));
            }
            10 => {
                let v = self.pick(&["NOP dword ptr [RAX]", "NOP word ptr [RAX + RAX*0x1]", "NOP"]);
                self.emit(v);
            }
            11 => {
                let (d, a, b) = (self.reg32(), self.pick(&R64), self.pick(&R64));
                let s = self.pick(&["0x1", "0x2", "0x4", "0x8"]);
                let disp = self.rng.gen_range(0..5u64);
                if disp == 0 {
                    self.emit(format!("LEA {d},[{a} + {b}*{s}]"));
                } else {
                    self.emit(format!("LEA {d},[{a} + {b}*{s} + {}]", hex(disp)));
                }
            }
            12 => {
                let i = self.rng.gen_range(0..R8.len());
                let r = R8[i];
                let v = hex(self.rng.gen_range(9..0x7f));
                self.emit(format!("CMP {r},{v}"));
                let t = self.target();
                self.emit(format!("JZ {t}"));
            }
            _ => {
                let f = *self.slots.first().unwrap_or(&0x10);
                self.emit("PXOR XMM0,XMM0");
                self.emit(format!("MOVUPS xmmword ptr [RSP + {}],XMM0", hex((f as u64) & !0xf)));
                let r = self.pick(&CALLEE_SAVED);
                self.emit(format!("MOV qword ptr [RSP],{r}"));
            }
        }
    }

    fn o2_epilogue(&mut self, saved: &[&str]) {
        for r in saved.iter().rev() {
            if *r == "frame" {
                let f = self.slots[0];
                self.emit(format!("ADD RSP,{}", hex(f as u64)));
            } else {
                self.emit(format!("POP {r}"));
            }
        }
        if self.rng.gen_bool(0.15) {
            let c = self.callee();
            self.emit(format!("JMP {c}"));
        } else {
            self.emit("RET");
        }
    }
}

fn signature(rng: &mut ChaCha8Rng, nargs: usize) -> SignatureSpec {
    let ret = TYPES[rng.gen_range(0..TYPES.len())];
    let params = (0..nargs)
        .map(|_| TYPES[rng.gen_range(0..TYPES.len())])
        .filter(|t| *t != "void")
        .map(str::to_string)
        .collect();
    SignatureSpec::new(ret, params).expect("non-empty return type")
}

fn synth(rng: &mut ChaCha8Rng, bin: &mut Binary, internal: &[u64]) -> FunctionRecord {
    let start = bin.text + bin.next_fn;
    bin.next_fn += 0x40 + rng.gen_range(0..0x80) * 0x10;
    let target_len = match rng.gen_range(0..100) {
        0..=2 => rng.gen_range(12..30),
        3..=5 => rng.gen_range(101..130),
        _ => rng.gen_range(30..=100),
    };
    let nargs = rng.gen_range(0..5);
    let o0 = rng.gen_bool(0.6);
    let canary = rng.gen_bool(0.2);
    let endbr = rng.gen_bool(0.85);
    let mut g = Gen {
        rng,
        bin,
        start,
        out: Vec::new(),
        slots: Vec::new(),
        labels: Vec::new(),
        internal: internal.to_vec(),
    };
    if endbr {
        g.emit("ENDBR64");
    }
    if o0 {
        g.o0_prologue(nargs);
        if canary {
            g.emit("MOV RAX,qword ptr FS:[0x28]");
            g.emit("MOV qword ptr [RBP + -0x8],RAX");
            g.emit("XOR EAX,EAX");
        }
        let tail = if canary { 7 } else { 3 };
        while g.out.len() + tail < target_len {
            g.o0_block();
        }
        if canary {
            g.emit("MOV RDX,qword ptr [RBP + -0x8]");
            g.emit("SUB RDX,qword ptr FS:[0x28]");
            let t = g.target();
            g.emit(format!("JZ {t}"));
            let c = g.callee();
            g.emit(format!("CALL {c}"));
        }
        let leave = g.rng.gen_bool(0.6);
        g.o0_epilogue(leave);
    } else {
        let saved = g.o2_prologue();
        while g.out.len() + saved.len() + 1 < target_len {
            g.o2_block();
        }
        g.o2_epilogue(&saved);
    }
    let name = if g.rng.gen_bool(0.55) {
        format!("FUN_{start:08x}")
    } else {
        let n = NAMES[g.rng.gen_range(0..NAMES.len())];
        format!("{n}_{:x}", start & 0xffff)
    };
    let out = std::mem::take(&mut g.out);
    let sig = rng.gen_bool(0.85).then(|| signature(rng, nargs));
    FunctionRecord::new(name, sig, out).expect("generated function is valid")
}

/// Listings written by hand in the same syntax.
const HANDWRITTEN: &[(&str, Option<(&str, &[&str])>, &str)] = &[
    (
        "FUN_00101289",
        Some(("void", &["char *", "char *"])),
        "ENDBR64
PUSH RBP
MOV RBP,RDI
MOV RDI,RSI
PUSH RBX
MOV RBX,RSI
SUB RSP,0x8
CALL 0x001010c0
TEST EAX,EAX
JLE 0x00101330
SUB EAX,0x1
MOVZX R9D,word ptr [0x00102012]
MOV RSI,RBX
XOR EDX,EDX
MOVZX R8D,word ptr [0x00102010]
LEA RDI,[RBX + RAX*0x1 + 0x1]
JMP 0x001012f1
CMP CL,0xa
JNZ 0x00101340
MOV word ptr [RAX],R8W
ADD EDX,0x2
ADD RSI,0x1
CMP RDI,RSI
JZ 0x0010132a
MOVZX ECX,byte ptr [RSI]
MOVSXD RAX,EDX
ADD RAX,RBP
CMP CL,0x9
JNZ 0x001012d8
ADD RSI,0x1
MOV word ptr [RAX],R9W
ADD EDX,0x2
CMP RDI,RSI
JNZ 0x001012f1
MOVSXD RDX,EDX
ADD RBP,RDX
MOV byte ptr [RBP],0x0
ADD RSP,0x8
POP RBX
POP RBP
RET
MOV byte ptr [RAX],CL
ADD EDX,0x1
JMP 0x001012e6",
    ),
    (
        "FUN_00001189",
        Some(("int", &["int", "int", "long *"])),
        "MOV RAX,qword ptr [0x00004010]
MOV RCX,qword ptr [0x00004018]
TEST RAX,RAX
JZ 0x000011b0
CALL 0x00001060
MOV EDX,dword ptr [0x00004020]
CMP EDX,0x3
JG 0x000011c8
LEA RSI,[0x00002004]
CALL 0x00001070
MOV R9D,dword ptr [0x00004024]
JMP 0x000011d4
LEA RDI,[0x00002010]
CALL 0x00001080
TEST EAX,EAX
JNZ 0x000011f0
MOV qword ptr [0x00004028],RAX
XOR EAX,EAX
RET
ENDBR64
CMP EDI,ESI
JGE 0x000012ce
PUSH R13
MOV R8D,EDI
PUSH R12
MOV R12,RDX
PUSH RBP
MOV EBP,ESI
PUSH RBX
MOV EBX,EDI
SUB RSP,0x8
MOVSXD RAX,EBX
MOV RDX,qword ptr [R12 + RAX*0x8]
ADD EBX,0x1
ADD R13,RDX
CMP EBX,EBP
JL 0x000012a0
ADD RSP,0x8
MOV RAX,R13
POP RBX
POP RBP
POP R12
POP R13
RET",
    ),
    (
        "main",
        Some(("int", &["int", "char * *"])),
        "ENDBR64
PUSH RBP
MOV RBP,RSP
SUB RSP,0x20
MOV dword ptr [RBP + -0x14],EDI
MOV qword ptr [RBP + -0x20],RSI
MOV RAX,qword ptr FS:[0x28]
MOV qword ptr [RBP + -0x8],RAX
XOR EAX,EAX
CMP dword ptr [RBP + -0x14],0x1
JG 0x001011d6
LEA RAX,[0x00102004]
MOV RDI,RAX
CALL 0x00101070
MOV EAX,0x1
JMP 0x0010122c
MOV RAX,qword ptr [RBP + -0x20]
ADD RAX,0x8
MOV RAX,qword ptr [RAX]
MOV RDI,RAX
CALL 0x00101090
MOV dword ptr [RBP + -0x10],EAX
MOV dword ptr [RBP + -0xc],0x0
JMP 0x0010121c
MOV EAX,dword ptr [RBP + -0xc]
MOV ESI,EAX
LEA RAX,[0x00102013]
MOV RDI,RAX
MOV EAX,0x0
CALL 0x00101080
ADD dword ptr [RBP + -0xc],0x1
MOV EAX,dword ptr [RBP + -0xc]
CMP EAX,dword ptr [RBP + -0x10]
JL 0x001011fb
MOV EAX,0x0
MOV RDX,qword ptr [RBP + -0x8]
SUB RDX,qword ptr FS:[0x28]
JZ 0x00101240
CALL 0x00101060
LEAVE
RET",
    ),
    (
        "bubble_sort",
        Some(("void", &["int *", "int"])),
        "ENDBR64
PUSH RBP
MOV RBP,RSP
MOV qword ptr [RBP + -0x18],RDI
MOV dword ptr [RBP + -0x1c],ESI
MOV dword ptr [RBP + -0xc],0x0
JMP 0x00101246
MOV dword ptr [RBP + -0x8],0x0
JMP 0x00101230
MOV EAX,dword ptr [RBP + -0x8]
CDQE
LEA RDX,[RAX*0x4]
MOV RAX,qword ptr [RBP + -0x18]
ADD RAX,RDX
MOV EDX,dword ptr [RAX]
MOV EAX,dword ptr [RBP + -0x8]
CDQE
ADD RAX,0x1
LEA RCX,[RAX*0x4]
MOV RAX,qword ptr [RBP + -0x18]
ADD RAX,RCX
MOV EAX,dword ptr [RAX]
CMP EDX,EAX
JLE 0x0010122c
MOV EAX,dword ptr [RBP + -0x8]
CDQE
LEA RDX,[RAX*0x4]
MOV RAX,qword ptr [RBP + -0x18]
ADD RAX,RDX
MOV EAX,dword ptr [RAX]
MOV dword ptr [RBP + -0x4],EAX
MOV EAX,dword ptr [RBP + -0x8]
CDQE
ADD RAX,0x1
LEA RDX,[RAX*0x4]
MOV RAX,qword ptr [RBP + -0x18]
ADD RAX,RDX
MOV EDX,dword ptr [RBP + -0x8]
MOVSXD RDX,EDX
LEA RCX,[RDX*0x4]
MOV RDX,qword ptr [RBP + -0x18]
ADD RDX,RCX
MOV EAX,dword ptr [RAX]
MOV dword ptr [RDX],EAX
MOV EAX,dword ptr [RBP + -0x8]
CDQE
ADD RAX,0x1
LEA RDX,[RAX*0x4]
MOV RAX,qword ptr [RBP + -0x18]
ADD RDX,RAX
MOV EAX,dword ptr [RBP + -0x4]
MOV dword ptr [RDX],EAX
ADD dword ptr [RBP + -0x8],0x1
MOV EAX,dword ptr [RBP + -0x1c]
SUB EAX,dword ptr [RBP + -0xc]
SUB EAX,0x1
CMP dword ptr [RBP + -0x8],EAX
JL 0x00101197
ADD dword ptr [RBP + -0xc],0x1
MOV EAX,dword ptr [RBP + -0x1c]
SUB EAX,0x1
CMP dword ptr [RBP + -0xc],EAX
JL 0x0010118b
NOP
NOP
POP RBP
RET",
    ),
    (
        "str_len",
        Some(("size_t", &["char *"])),
        "ENDBR64
PUSH RBP
MOV RBP,RSP
MOV qword ptr [RBP + -0x18],RDI
MOV qword ptr [RBP + -0x8],0x0
JMP 0x00101146
ADD qword ptr [RBP + -0x8],0x1
MOV RDX,qword ptr [RBP + -0x18]
MOV RAX,qword ptr [RBP + -0x8]
ADD RAX,RDX
MOVZX EAX,byte ptr [RAX]
TEST AL,AL
JNZ 0x00101141
MOV RAX,qword ptr [RBP + -0x8]
POP RBP
RET",
    ),
];

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures/functions.jsonl".into())
        .into();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut records: Vec<FunctionRecord> = Vec::new();
    let mut bin = Binary::new(&mut rng);
    let mut internal: Vec<u64> = Vec::new();
    while records.len() < GENERATED {
        if rng.gen_bool(0.08) {
            bin = Binary::new(&mut rng);
            internal.clear();
        }
        let r = synth(&mut rng, &mut bin, &internal);
        internal.push(bin.text + bin.next_fn);
        records.push(r);
        // Occasional duplicates, some with different case and spacing.
        if rng.gen_bool(0.04) {
            let src = records.choose(&mut rng).expect("non-empty").clone();
            let dup = if rng.gen_bool(0.5) {
                src
            } else {
                let lines = src
                    .instructions()
                    .iter()
                    .map(|l| l.to_lowercase().replacen(' ', "  ", 1))
                    .collect();
                FunctionRecord::new(format!("{}_copy", src.name()), src.signature().cloned(), lines)
                    .expect("valid")
            };
            records.push(dup);
        }
    }
    for (name, sig, text) in HANDWRITTEN {
        let sig = sig.map(|(r, ps)| {
            SignatureSpec::new(r.to_string(), ps.iter().map(|p| p.to_string()).collect()).expect("valid")
        });
        records.push(asmtok::corpus::parse_function(text, name, sig).expect("valid listing"));
    }
    let corpus = Corpus::new(records, Variant::Default);
    if let Some(dir) = out.parent() {
        std::fs::create_dir_all(dir).expect("create output directory");
    }
    corpus.save(&out).expect("write corpus");
    eprintln!("wrote {} functions to {}", corpus.len(), out.display());
}
