use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asmtok::corpus::{dedup, filter_by_length, split};
use asmtok::eval::{self, Report, ReportFormat};
use asmtok::masking::{emit_mlm_dataset, emit_signature_dataset};
use asmtok::matrix::{run_matrix, MatrixConfig};
use asmtok::preprocess::{preprocess_corpus, PreprocessConfig};
use asmtok::scalar::fraction_from_f64;
use asmtok::{Algorithm, Corpus, Fraction, TokenizerModel, TrainOptions};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

/// Subword tokenizers for disassembled binary code.
#[derive(Debug, Parser)]
#[command(name = "asmtok", version, propagate_version = true)]
struct Cli {
    /// Seed for every randomized step (split, masking, random OOV inputs).
    /// For `matrix` it overrides the config file's seed; otherwise the
    /// default is 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log level (error, warn, info, debug, trace). Falls back to the
    /// ASMTOK_LOG environment variable, then to `warn`.
    #[arg(long, global = true)]
    log_level: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus maintenance: length filter, deduplication, train/test split.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Replace addresses with sequential identifiers and hex with decimal.
    Preprocess(PreprocessArgs),
    /// Train a tokenizer on a corpus.
    Train(TrainArgs),
    /// Encode text with a trained model.
    Encode(EncodeArgs),
    /// Decode token ids back to text.
    Decode(DecodeArgs),
    /// Intrinsic metrics.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Emit a masked-token dataset (one JSON line per function).
    Mask(MaskArgs),
    /// Emit a signature-prediction dataset (one JSON line per function with a signature).
    EmitSig(EmitSigArgs),
    /// Run every cell of an experiment matrix and write a consolidated report.
    Matrix(MatrixArgs),
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// Keep functions whose instruction count lies in [min, max].
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 30)]
        min: usize,
        #[arg(long, default_value_t = 100)]
        max: usize,
    },
    /// Drop functions whose normalized disassembly repeats an earlier one.
    Dedup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Seeded random split into training and held-out corpora.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        train_frac: f64,
    },
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// First identifier number (0 or 1).
    #[arg(long, default_value_t = 0)]
    id_base: u32,
    /// Bracketed literals at or above this value are addresses (hex or decimal).
    #[arg(long, default_value = "0x1000", value_parser = parse_u64)]
    address_threshold: u64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// bpe, wordpiece or unigram.
    #[arg(long)]
    algo: Algorithm,
    #[arg(long)]
    vocab_size: usize,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Unigram: share of prunable tokens removed per round.
    #[arg(long, default_value_t = 0.2)]
    prune_frac: f64,
    /// Unigram: seed candidates are capped at this multiple of the vocabulary size.
    #[arg(long, default_value_t = 4)]
    seed_multiplier: usize,
    /// Keep case instead of lowercasing before training.
    #[arg(long, default_value_t = false)]
    no_lowercase: bool,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Text to encode (default: none; one of --text, --input or --corpus is required).
    #[arg(long, conflicts_with_all = ["input", "corpus"])]
    text: Option<String>,
    /// File whose whole content is encoded as one text (default: none).
    #[arg(long, conflicts_with = "corpus")]
    input: Option<PathBuf>,
    /// Corpus whose functions are encoded one JSON line each (default: none).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma- or space-separated ids (default: none; --ids or --input is required).
    #[arg(long, conflicts_with = "input")]
    ids: Option<String>,
    /// File holding ids as a JSON array or separated by commas or whitespace (default: none).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportOut {
    /// json, csv or svg-heatmap (overlap only).
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Output file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Tokens per instruction on a corpus, one row per model.
    Fertility {
        /// Model file; repeat for several models.
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Vocabulary overlap (Jaccard) of two or more models.
    Overlap {
        /// Model file; repeat for several models. Labels are the file stems.
        #[arg(long = "model", required = true, num_args = 1)]
        models: Vec<PathBuf>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Unknown-token rate on a corpus and/or random byte strings.
    Oov {
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        /// Corpus to encode (default: none).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Number of random byte strings to encode in addition.
        #[arg(long, default_value_t = 0)]
        random_strings: usize,
        /// Maximum length of each random byte string.
        #[arg(long, default_value_t = 64)]
        max_len: usize,
        #[command(flatten)]
        out: ReportOut,
    },
}

#[derive(Debug, Args)]
struct MaskArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    rate: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EmitSigArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// JSON matrix config.
    config: PathBuf,
    /// Cells trained concurrently (default: the config's `jobs`, itself 1 by default).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (default: the config's `output_dir`, itself `matrix-out`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

/// A failed invocation: exit code plus the JSON error line.
struct Failure {
    code: u8,
    error: String,
    detail: String,
}

impl From<asmtok::Error> for Failure {
    fn from(e: asmtok::Error) -> Self {
        Failure {
            code: 2,
            error: e.kind().to_string(),
            detail: e.to_string(),
        }
    }
}

fn usage(detail: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        error: "UsageError".into(),
        detail: detail.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn parse_u64(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("`{s}` is not a hex or decimal integer: {e}"))
}

fn fraction(value: f64, flag: &str) -> CliResult<Fraction> {
    match fraction_from_f64(value) {
        Some(f) if *f.numer() > 0 && f < Fraction::from_integer(1) => Ok(f),
        _ => Err(usage(format!("--{flag} must lie in (0, 1), got {value}"))),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| io_failure(Path::new("<stdout>"), e))
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: 2,
        error: "IoError".into(),
        detail: format!("{}: {e}", path.display()),
    }
}

fn load_models(paths: &[PathBuf]) -> CliResult<Vec<TokenizerModel>> {
    paths
        .iter()
        .map(|p| TokenizerModel::load(p).map_err(Failure::from))
        .collect()
}

fn emit(report: &Report, out: &ReportOut) -> CliResult {
    let text = asmtok::eval::render_report(report, out.format)?;
    write_output(out.output.as_deref(), &text)
}

fn parse_ids(text: &str) -> CliResult<Vec<u32>> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| usage(format!("ids are not a JSON array of integers: {e}")));
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| usage(format!("`{s}` is not a token id"))))
        .collect()
}

fn run(cli: Cli) -> CliResult {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Corpus(CorpusCommand::Filter { input, output, min, max }) => {
            if min > max {
                return Err(usage(format!("--min {min} exceeds --max {max}")));
            }
            let c = Corpus::load(&input)?;
            let kept = filter_by_length(&c, min, max)?;
            log::info!("kept {} of {} functions", kept.len(), c.len());
            kept.save(&output)?;
        }
        Command::Corpus(CorpusCommand::Dedup { input, output }) => {
            let c = Corpus::load(&input)?;
            let kept = dedup(&c);
            log::info!("kept {} of {} functions", kept.len(), c.len());
            kept.save(&output)?;
        }
        Command::Corpus(CorpusCommand::Split {
            input,
            train_out,
            test_out,
            train_frac,
        }) => {
            let f = fraction(train_frac, "train-frac")?;
            let c = Corpus::load(&input)?;
            let (a, b) = split(&c, f, seed)?;
            a.save(&train_out)?;
            b.save(&test_out)?;
        }
        Command::Preprocess(a) => {
            let cfg = PreprocessConfig {
                id_base: a.id_base,
                address_threshold: a.address_threshold,
                ..PreprocessConfig::default()
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let c = Corpus::load(&a.input)?;
            preprocess_corpus(&c, &cfg)?.save(&a.output)?;
        }
        Command::Train(a) => {
            let mut opts = TrainOptions::new(a.algo, a.vocab_size);
            opts.lowercase = !a.no_lowercase;
            opts.prune_fraction = fraction(a.prune_frac, "prune-frac")?;
            opts.seed_multiplier = a.seed_multiplier;
            let c = Corpus::load(&a.input)?;
            let model = asmtok::train(&c, &opts)?;
            log::info!("trained {} model with {} tokens", model.algorithm(), model.vocab_size());
            model.save(&a.output)?;
        }
        Command::Encode(a) => {
            let model = TokenizerModel::load(&a.model)?;
            let line = |text: &str| -> CliResult<serde_json::Value> {
                let ids = model.encode(text)?;
                let tokens = model.tokens(&ids)?;
                Ok(json!({ "ids": ids, "tokens": tokens }))
            };
            let mut out = String::new();
            if let Some(path) = &a.corpus {
                let c = Corpus::load(path)?;
                for r in &c.records {
                    let mut v = line(&r.text())?;
                    v["name"] = json!(r.name());
                    out.push_str(&v.to_string());
                    out.push('\n');
                }
            } else {
                let text = match (&a.text, &a.input) {
                    (Some(t), _) => t.clone(),
                    (None, Some(p)) => {
                        let bytes = fs::read(p).map_err(|e| io_failure(p, e))?;
                        String::from_utf8(bytes).map_err(|_| Failure::from(asmtok::Error::InvalidUtf8))?
                    }
                    (None, None) => return Err(usage("one of --text, --input or --corpus is required")),
                };
                out.push_str(&line(&text)?.to_string());
                out.push('\n');
            }
            write_output(a.output.as_deref(), &out)?;
        }
        Command::Decode(a) => {
            let model = TokenizerModel::load(&a.model)?;
            let raw = match (&a.ids, &a.input) {
                (Some(s), _) => s.clone(),
                (None, Some(p)) => fs::read_to_string(p).map_err(|e| io_failure(p, e))?,
                (None, None) => {
                    let mut s = String::new();
                    io::stdin()
                        .read_to_string(&mut s)
                        .map_err(|e| io_failure(Path::new("<stdin>"), e))?;
                    s
                }
            };
            let ids = parse_ids(&raw)?;
            let text = model.decode(&ids)?;
            write_output(a.output.as_deref(), &text)?;
        }
        Command::Eval(EvalCommand::Fertility { models, corpus, out }) => {
            let ms = load_models(&models)?;
            let c = Corpus::load(&corpus)?;
            let rows = ms
                .iter()
                .map(|m| eval::fertility(m, &c))
                .collect::<asmtok::Result<Vec<_>>>()?;
            emit(&Report::Fertility(rows), &out)?;
        }
        Command::Eval(EvalCommand::Overlap { models, out }) => {
            if models.len() < 2 {
                return Err(Failure::from(asmtok::Error::TooFewModels(models.len())));
            }
            let ms = load_models(&models)?;
            let labelled: Vec<(String, &TokenizerModel)> = models
                .iter()
                .zip(&ms)
                .map(|(p, m)| {
                    let id = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                    (id, m)
                })
                .collect();
            emit(&Report::Overlap(eval::vocab_overlap(&labelled)?), &out)?;
        }
        Command::Eval(EvalCommand::Oov {
            models,
            corpus,
            random_strings,
            max_len,
            out,
        }) => {
            if corpus.is_none() && random_strings == 0 {
                return Err(usage("give --corpus and/or --random-strings"));
            }
            let ms = load_models(&models)?;
            let c = corpus.as_ref().map(Corpus::load).transpose()?;
            let random = eval::random_byte_strings(random_strings, max_len, seed);
            let mut rows = Vec::new();
            for m in &ms {
                let mut unk = 0;
                let mut total = 0;
                if let Some(c) = &c {
                    let r = eval::oov_rate(m, c)?;
                    unk += r.unk_token_count;
                    total += r.total_token_count;
                }
                if !random.is_empty() {
                    let r = eval::oov_rate_on_bytes(m, &random)?;
                    unk += r.unk_token_count;
                    total += r.total_token_count;
                }
                rows.push(eval::OovReport {
                    algorithm: m.algorithm(),
                    vocab_size: m.vocab_size(),
                    unk_token_count: unk,
                    total_token_count: total,
                    oov_rate: if total == 0 { 0.0 } else { unk as f64 / total as f64 },
                    empty_input: total == 0,
                });
            }
            emit(&Report::Oov(rows), &out)?;
        }
        Command::Mask(a) => {
            let rate = fraction(a.rate, "rate")?;
            let model = TokenizerModel::load(&a.model)?;
            let c = Corpus::load(&a.corpus)?;
            let n = emit_mlm_dataset(&model, &c, rate, seed, &a.output)?;
            log::info!("wrote {n} masked examples");
        }
        Command::EmitSig(a) => {
            let c = Corpus::load(&a.corpus)?;
            let s = emit_signature_dataset(&c, &a.output)?;
            log::info!("wrote {} examples, skipped {} without signature", s.written, s.skipped);
        }
        Command::Matrix(a) => {
            let mut cfg = MatrixConfig::load(&a.config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(j) = a.jobs {
                cfg.jobs = j;
            }
            if let Some(d) = a.output_dir {
                cfg.output_dir = d;
            }
            let report = run_matrix(&cfg)?;
            let failed = report.failed_cells();
            println!("{}", cfg.output_dir.join("report.csv").display());
            if failed > 0 {
                return Err(Failure {
                    code: 2,
                    error: "MatrixCellsFailed".into(),
                    detail: format!("{failed} of {} cells failed", report.cells.len()),
                });
            }
        }
    }
    Ok(())
}

fn init_logging(level: Option<&str>) {
    let filter = level
        .map(str::to_string)
        .or_else(|| std::env::var("ASMTOK_LOG").ok())
        .unwrap_or_else(|| "warn".into());
    let _ = env_logger::Builder::new().parse_filters(&filter).try_init();
}

fn report_failure(f: &Failure) {
    eprintln!("{}", json!({ "error": f.error, "detail": f.detail }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let detail = rendered.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            report_failure(&usage(detail));
            eprint!("{rendered}");
            return ExitCode::from(1);
        }
    };
    init_logging(cli.log_level.as_deref());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report_failure(&f);
            ExitCode::from(f.code)
        }
    }
}
