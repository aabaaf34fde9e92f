//! Experiment matrix: every (algorithm, vocabulary size, dataset variant)
//! cell is trained on one shared split and evaluated on its held-out part.
//!
//! The consolidated CSV (`report.csv`) has one header and two row types:
//!
//! ```text
//! row_type,algorithm,vocab_size,variant,status,model_vocab_size,fertility,total_tokens,
//!   total_instructions,unk_token_count,total_token_count,oov_rate,jaccard_percent,
//!   intersection_size,union_size,model_path,detail
//! ```
//!
//! `cell` rows carry fertility and OOV figures; `overlap` rows carry the
//! Jaccard overlap of the `+`-joined algorithms named in `algorithm`, first
//! for all of them and then for every pair. Fields that do not apply to a
//! row type are empty.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{dedup, filter_by_length, split, Corpus, Variant};
use crate::error::{Error, Result};
use crate::eval::{self, emit::csv_field, FertilityReport, OovReport, Report, ReportFormat};
use crate::preprocess::{preprocess_corpus, PreprocessConfig};
use crate::scalar::{fraction_from_f64, Fraction};
use crate::tokcore::{Algorithm, TokenizerModel};
use crate::train::{train, TrainOptions};

fn default_min() -> usize {
    30
}
fn default_max() -> usize {
    100
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("matrix-out")
}
fn default_jobs() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    /// Corpus in the default variant. Relative paths resolve against the
    /// directory holding the config file.
    pub corpus: PathBuf,
    pub algorithms: Vec<Algorithm>,
    pub vocab_sizes: Vec<usize>,
    pub variants: Vec<Variant>,
    #[serde(default = "default_min")]
    pub min_instructions: usize,
    #[serde(default = "default_max")]
    pub max_instructions: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
}

impl MatrixConfig {
    /// Reads a config file and resolves its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: MatrixConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.corpus.is_relative() {
            cfg.corpus = base.join(&cfg.corpus);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<Fraction> {
        if self.algorithms.is_empty() || self.vocab_sizes.is_empty() || self.variants.is_empty() {
            return Err(Error::InvalidConfig(
                "matrix needs at least one algorithm, vocabulary size and variant".into(),
            ));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        if self.min_instructions > self.max_instructions {
            return Err(Error::InvalidConfig(format!(
                "min_instructions {} exceeds max_instructions {}",
                self.min_instructions, self.max_instructions
            )));
        }
        self.preprocess.validate()?;
        match fraction_from_f64(self.train_fraction) {
            Some(f) if *f.numer() > 0 && f < Fraction::from_integer(1) => Ok(f),
            _ => Err(Error::InvalidConfig(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ))),
        }
    }

    /// Cells in report order: variant, then vocabulary size, then algorithm.
    pub fn cells(&self) -> Vec<(Algorithm, usize, Variant)> {
        let mut out = Vec::new();
        for &v in &self.variants {
            for &n in &self.vocab_sizes {
                for &a in &self.algorithms {
                    out.push((a, n, v));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellMetrics {
    pub model_path: PathBuf,
    pub fertility: FertilityReport,
    pub oov: OovReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub algorithm: Algorithm,
    pub vocab_size: usize,
    pub variant: Variant,
    pub metrics: Option<CellMetrics>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapRow {
    pub algorithms: Vec<Algorithm>,
    pub vocab_size: usize,
    pub variant: Variant,
    pub jaccard_percent: f64,
    pub intersection_size: usize,
    pub union_size: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MatrixReport {
    pub train_functions: usize,
    pub test_functions: usize,
    pub cells: Vec<CellResult>,
    pub overlaps: Vec<OverlapRow>,
}

impl MatrixReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "row_type,algorithm,vocab_size,variant,status,model_vocab_size,fertility,total_tokens,\
             total_instructions,unk_token_count,total_token_count,oov_rate,jaccard_percent,\
             intersection_size,union_size,model_path,detail\n",
        );
        for c in &self.cells {
            match (&c.metrics, &c.error) {
                (Some(m), _) => {
                    let _ = writeln!(
                        out,
                        "cell,{},{},{},ok,{},{},{},{},{},{},{},,,,{},",
                        c.algorithm,
                        c.vocab_size,
                        c.variant,
                        m.fertility.vocab_size,
                        m.fertility.fertility,
                        m.fertility.total_tokens,
                        m.fertility.total_instructions,
                        m.oov.unk_token_count,
                        m.oov.total_token_count,
                        m.oov.oov_rate,
                        csv_field(&m.model_path.to_string_lossy()),
                    );
                }
                (None, err) => {
                    let _ = writeln!(
                        out,
                        "cell,{},{},{},failed,,,,,,,,,,,,{}",
                        c.algorithm,
                        c.vocab_size,
                        c.variant,
                        csv_field(err.as_deref().unwrap_or("")),
                    );
                }
            }
        }
        for o in &self.overlaps {
            let names: Vec<&str> = o.algorithms.iter().map(|a| a.as_str()).collect();
            let _ = writeln!(
                out,
                "overlap,{},{},{},ok,,,,,,,,{},{},{},,",
                names.join("+"),
                o.vocab_size,
                o.variant,
                o.jaccard_percent,
                o.intersection_size,
                o.union_size,
            );
        }
        out
    }
}

fn model_file_name(a: Algorithm, n: usize, v: Variant) -> String {
    format!("{a}-{n}-{v}.json")
}

fn run_cell(
    (algorithm, vocab_size, variant): (Algorithm, usize, Variant),
    data: &[(Variant, Corpus, Corpus)],
    models_dir: &Path,
) -> (CellResult, Option<TokenizerModel>) {
    let start = Instant::now();
    let outcome = (|| -> Result<(CellMetrics, TokenizerModel)> {
        let (_, train_c, test_c) = data
            .iter()
            .find(|(v, _, _)| *v == variant)
            .expect("variant prepared");
        let model = train(train_c, &TrainOptions::new(algorithm, vocab_size))?;
        let path = models_dir.join(model_file_name(algorithm, vocab_size, variant));
        model.save(&path)?;
        let fertility = eval::fertility(&model, test_c)?;
        let oov = eval::oov_rate(&model, test_c)?;
        Ok((
            CellMetrics {
                model_path: path,
                fertility,
                oov,
            },
            model,
        ))
    })();
    let mut cell = CellResult {
        algorithm,
        vocab_size,
        variant,
        metrics: None,
        error: None,
    };
    match outcome {
        Ok((m, model)) => {
            log::info!(
                "matrix: {algorithm} {vocab_size} {variant}: fertility {:.4} ({:.1?})",
                m.fertility.fertility,
                start.elapsed()
            );
            cell.metrics = Some(m);
            (cell, Some(model))
        }
        Err(e) => {
            log::warn!("matrix: {algorithm} {vocab_size} {variant} failed: {e}");
            cell.error = Some(format!("{}: {e}", e.kind()));
            (cell, None)
        }
    }
}

/// Runs every cell, writes models, `report.csv`, `report.json` and one
/// overlap heatmap per (size, variant) into the output directory. Cell
/// failures are recorded in the report rather than aborting the run.
pub fn run_matrix(config: &MatrixConfig) -> Result<MatrixReport> {
    let fraction = config.validate()?;
    let corpus = Corpus::load(&config.corpus)?;
    if corpus.variant != Variant::Default {
        return Err(Error::InvalidConfig(format!(
            "matrix corpus must be in the default variant, got {}",
            corpus.variant
        )));
    }
    let cleaned = dedup(&filter_by_length(
        &corpus,
        config.min_instructions,
        config.max_instructions,
    )?);
    let (train_c, test_c) = split(&cleaned, fraction, config.seed)?;
    let mut data = Vec::new();
    for &v in &config.variants {
        if data.iter().any(|(d, _, _)| *d == v) {
            continue;
        }
        match v {
            Variant::Default => data.push((v, train_c.clone(), test_c.clone())),
            Variant::Preprocessed => data.push((
                v,
                preprocess_corpus(&train_c, &config.preprocess)?,
                preprocess_corpus(&test_c, &config.preprocess)?,
            )),
        }
    }

    let models_dir = config.output_dir.join("models");
    fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(CellResult, Option<TokenizerModel>)> = pool.install(|| {
        config
            .cells()
            .into_par_iter()
            .map(|cell| run_cell(cell, &data, &models_dir))
            .collect()
    });

    let mut report = MatrixReport {
        train_functions: train_c.len(),
        test_functions: test_c.len(),
        ..Default::default()
    };
    let mut groups: Vec<(usize, Variant)> = Vec::new();
    for (c, _) in &results {
        if !groups.contains(&(c.vocab_size, c.variant)) {
            groups.push((c.vocab_size, c.variant));
        }
    }
    for (n, v) in groups {
        let members: Vec<(String, &TokenizerModel, Algorithm)> = results
            .iter()
            .filter(|(c, _)| c.vocab_size == n && c.variant == v)
            .filter_map(|(c, m)| m.as_ref().map(|m| (c.algorithm.to_string(), m, c.algorithm)))
            .collect();
        if members.len() < 2 {
            continue;
        }
        let labelled: Vec<(String, &TokenizerModel)> =
            members.iter().map(|(id, m, _)| (id.clone(), *m)).collect();
        let overlap = eval::vocab_overlap(&labelled)?;
        let svg = config.output_dir.join(format!("overlap-{n}-{v}.svg"));
        eval::emit_report(&Report::Overlap(overlap.clone()), ReportFormat::SvgHeatmap, &svg)?;
        report.overlaps.push(OverlapRow {
            algorithms: members.iter().map(|m| m.2).collect(),
            vocab_size: n,
            variant: v,
            jaccard_percent: overlap.jaccard_percent,
            intersection_size: overlap.intersection_size,
            union_size: overlap.union_size,
        });
        if members.len() > 2 {
            for i in 0..members.len() {
                for j in i + 1..members.len() {
                    report.overlaps.push(OverlapRow {
                        algorithms: vec![members[i].2, members[j].2],
                        vocab_size: n,
                        variant: v,
                        jaccard_percent: overlap.pairwise[i][j],
                        intersection_size: overlap.pairwise_intersection[i][j],
                        union_size: overlap.pairwise_union[i][j],
                    });
                }
            }
        }
    }
    report.cells = results.into_iter().map(|(c, _)| c).collect();

    let csv = config.output_dir.join("report.csv");
    fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
    let json = config.output_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(report)
}
