//! Report serialization.
//!
//! CSV columns:
//! - fertility: `algorithm,vocab_size,variant,fertility,total_tokens,total_instructions`
//! - overlap: `tokenizer_a,tokenizer_b,jaccard_percent,intersection_size,union_size`,
//!   one row per cell of the pairwise matrix
//! - oov: `algorithm,vocab_size,unk_token_count,total_token_count,oov_rate,empty_input`
//!
//! The SVG heatmap is only defined for overlap reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{FertilityReport, OovReport, OverlapReport};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Fertility(Vec<FertilityReport>),
    Overlap(OverlapReport),
    Oov(Vec<OovReport>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    SvgHeatmap,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "svg-heatmap" => Ok(ReportFormat::SvgHeatmap),
            other => Err(Error::InvalidConfig(format!("unknown report format `{other}`"))),
        }
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn csv(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::Fertility(rows) => {
            out.push_str("algorithm,vocab_size,variant,fertility,total_tokens,total_instructions\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.algorithm, r.vocab_size, r.variant, r.fertility, r.total_tokens, r.total_instructions
                );
            }
        }
        Report::Overlap(r) => {
            out.push_str("tokenizer_a,tokenizer_b,jaccard_percent,intersection_size,union_size\n");
            for (i, a) in r.tokenizer_ids.iter().enumerate() {
                for (j, b) in r.tokenizer_ids.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        csv_field(a),
                        csv_field(b),
                        r.pairwise[i][j],
                        r.pairwise_intersection[i][j],
                        r.pairwise_union[i][j]
                    );
                }
            }
        }
        Report::Oov(rows) => {
            out.push_str("algorithm,vocab_size,unk_token_count,total_token_count,oov_rate,empty_input\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.algorithm, r.vocab_size, r.unk_token_count, r.total_token_count, r.oov_rate, r.empty_input
                );
            }
        }
    }
    out
}

fn heatmap(r: &OverlapReport) -> String {
    const CELL: usize = 60;
    const MARGIN: usize = 140;
    let k = r.tokenizer_ids.len();
    let size = MARGIN + CELL * k;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="11">"#
    );
    for (i, id) in r.tokenizer_ids.iter().enumerate() {
        let c = MARGIN + CELL * i + CELL / 2;
        let id = xml_escape(id);
        let _ = writeln!(out, r#"<text x="{}" y="{c}" text-anchor="end">{id}</text>"#, MARGIN - 6);
        let _ = writeln!(out, r#"<text x="{c}" y="{}" text-anchor="middle">{id}</text>"#, MARGIN - 6);
    }
    for i in 0..k {
        for j in 0..k {
            let p = r.pairwise[i][j];
            // White at 0%, dark blue at 100%.
            let t = (p / 100.0).clamp(0.0, 1.0);
            let shade = |full: f64| (255.0 - t * (255.0 - full)).round() as u8;
            let (x, y) = (MARGIN + CELL * j, MARGIN + CELL * i);
            let _ = writeln!(
                out,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#{:02x}{:02x}{:02x}" stroke="#ffffff"/>"##,
                shade(8.0),
                shade(48.0),
                shade(107.0)
            );
            let fg = if t > 0.5 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{fg}">{p:.2}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 4
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Renders a report; output is a pure function of the report.
pub fn render_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => Ok(csv(report)),
        ReportFormat::SvgHeatmap => match report {
            Report::Overlap(r) => Ok(heatmap(r)),
            _ => Err(Error::InvalidConfig("svg-heatmap output needs an overlap report".into())),
        },
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(report, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
