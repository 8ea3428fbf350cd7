//! Result documents and their JSON and CSV encodings.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sojourn::EstimateReport;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One paired comparison `lhs` vs `rhs`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub check: String,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub discrepancy: f64,
    pub combined_se: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl Check {
    pub const LIMIT: f64 = 3.0;

    pub fn between(name: impl Into<String>, a: &EstimateReport, b: &EstimateReport) -> Self {
        Self::from_parts(name, a.point, a.std_error, b.point, b.std_error)
    }

    pub fn from_parts(name: impl Into<String>, lhs: f64, lhs_se: f64, rhs: f64, rhs_se: f64) -> Self {
        let discrepancy = lhs - rhs;
        let combined_se = lhs_se.hypot(rhs_se);
        let z_score = if combined_se > 0.0 {
            discrepancy / combined_se
        } else if discrepancy == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(discrepancy)
        };
        Self {
            check: name.into(),
            lhs,
            lhs_se,
            rhs,
            rhs_se,
            discrepancy,
            combined_se,
            z_score,
            pass: z_score.abs() < Self::LIMIT,
        }
    }
}

/// The JSON result document. Holds no timestamps, so equal runs give equal bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    #[serde(default)]
    pub partial: bool,
    pub results: Vec<EstimateReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    /// Command-specific extras (sample paths, tail levels, limit diagnostics).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub details: serde_json::Map<String, serde_json::Value>,
}

/// A command's output before encoding.
#[derive(Debug, Default)]
pub struct Output {
    pub results: Vec<EstimateReport>,
    pub checks: Vec<Check>,
    pub details: serde_json::Map<String, serde_json::Value>,
    pub csv_header: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
    pub partial: bool,
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn to_json(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

/// Header plus rows, each row followed by seed, config digest and tool version.
pub fn to_csv(out: &Output, seed: u64, digest: &str) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let mut header: Vec<&str> = out.csv_header.clone();
    header.extend(["seed", "config_digest", "tool_version"]);
    w.write_record(&header)?;
    let seed = seed.to_string();
    for row in &out.csv_rows {
        let mut r: Vec<&str> = row.iter().map(String::as_str).collect();
        r.extend([seed.as_str(), digest, TOOL_VERSION]);
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_to(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
