//! Merging of result files into one comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sojourn::EstimateReport;

use crate::output::{Check, Document, SCHEMA_VERSION};
use crate::CliError;

/// Parameters that an estimate must not depend on; rows differing only in
/// these are compared with each other.
const INVARIANT_KEYS: &[&str] = &["b", "theta", "T", "T_z", "inner_delta", "kappa", "window_points"];

/// CSV columns that are not parameters.
const CSV_META: &[&str] =
    &["method", "point", "std_error", "ci95_low", "ci95_high", "n", "seed", "config_digest", "tool_version"];

#[derive(Debug, Clone)]
pub struct Row {
    pub source: String,
    pub report: EstimateReport,
}

impl Row {
    fn group(&self) -> String {
        let parts: Vec<String> = self
            .report
            .params
            .iter()
            .filter(|(k, _)| !INVARIANT_KEYS.contains(&k.as_str()))
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if parts.is_empty() { "-".into() } else { parts.join(" ") }
    }
}

fn schema(path: &Path, reason: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("{}: {reason}", path.display()))
}

fn read_json(path: &Path, text: &str) -> Result<Vec<EstimateReport>, CliError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| schema(path, format!("not a result document: {e}")))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(schema(path, format!("schema version {} (expected {SCHEMA_VERSION})", doc.schema_version)));
    }
    Ok(doc.results)
}

fn read_csv(path: &Path, text: &str) -> Result<Vec<EstimateReport>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| schema(path, e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(mi), Some(pi), Some(si)) = (col("method"), col("point"), col("std_error")) else {
        return Err(schema(path, "CSV needs method, point and std_error columns"));
    };
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| schema(path, e))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let parse = |i: usize| -> Result<f64, CliError> {
            field(i).parse().map_err(|_| schema(path, format!("row {}: `{}` is not a number", line + 2, field(i))))
        };
        let n = col("n").and_then(|i| field(i).parse().ok()).unwrap_or(0);
        let seed = col("seed").and_then(|i| field(i).parse().ok()).unwrap_or(0);
        let mut rep = EstimateReport::new(field(mi), parse(pi)?, parse(si)?, n, seed);
        if let (Some(lo), Some(hi)) = (col("ci95_low"), col("ci95_high")) {
            rep.ci95 = [parse(lo)?, parse(hi)?];
        }
        if let Some(d) = col("config_digest") {
            rep.config_digest = field(d).to_string();
        }
        for (i, h) in header.iter().enumerate() {
            if CSV_META.contains(&h) {
                continue;
            }
            if let Ok(v) = field(i).parse::<f64>() {
                rep.params.insert(h.to_string(), v);
            }
        }
        out.push(rep);
    }
    Ok(out)
}

pub fn load(paths: &[PathBuf]) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let reports = if text.trim_start().starts_with('{') { read_json(path, &text)? } else { read_csv(path, &text)? };
        let source = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        rows.extend(reports.into_iter().map(|report| Row { source: source.clone(), report }));
    }
    Ok(rows)
}

/// Every pair of rows in the same group whose points differ by more than
/// three combined standard errors.
pub fn disagreements(rows: &[Row]) -> Vec<(usize, usize, Check)> {
    let groups: Vec<String> = rows.iter().map(Row::group).collect();
    let mut flagged = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            if groups[i] != groups[j] {
                continue;
            }
            let (a, b) = (&rows[i].report, &rows[j].report);
            let check = Check::between(format!("{} vs {}", a.method, b.method), a, b);
            if !check.pass {
                flagged.push((i, j, check));
            }
        }
    }
    flagged
}

fn align(table: &[Vec<String>]) -> String {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| table.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut s = String::new();
    for row in table {
        let line: Vec<String> = row.iter().enumerate().map(|(c, cell)| format!("{cell:<w$}", w = widths[c])).collect();
        let _ = writeln!(s, "{}", line.join("  ").trim_end());
    }
    s
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e5).contains(&x.abs()) { format!("{x:.6}") } else { format!("{x:.4e}") }
}

/// The merged table: one row per estimate, sorted by group, then a list of
/// flagged disagreements.
pub fn render(rows: &[Row]) -> String {
    let flagged = disagreements(rows);
    let mut flags: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (k, (i, j, _)) in flagged.iter().enumerate() {
        let tag = format!("#{}", k + 1);
        flags.entry(*i).or_default().push(tag.clone());
        flags.entry(*j).or_default().push(tag);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| rows[i].group());
    let mut table = vec![["group", "method", "point", "std_error", "ci95", "n", "source", "flag"].map(String::from).to_vec()];
    for i in order {
        let r = &rows[i].report;
        table.push(vec![
            rows[i].group(),
            r.method.clone(),
            fmt_num(r.point),
            fmt_num(r.std_error),
            format!("[{}, {}]", fmt_num(r.ci95_low()), fmt_num(r.ci95_high())),
            r.n_replicates.to_string(),
            rows[i].source.clone(),
            flags.get(&i).map(|v| v.join(",")).unwrap_or_default(),
        ]);
    }
    let mut s = align(&table);
    if flagged.is_empty() {
        s.push_str("\nno disagreements above 3 combined standard errors\n");
    } else {
        let _ = writeln!(s, "\n{} disagreement(s) above 3 combined standard errors:", flagged.len());
        for (k, (_, _, c)) in flagged.iter().enumerate() {
            let _ = writeln!(s, "  #{} {}: difference {} = {:.2} combined se", k + 1, c.check, fmt_num(c.discrepancy), c.z_score);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, point: f64, se: f64, alpha: f64) -> Row {
        Row {
            source: "t".into(),
            report: EstimateReport::new(method, point, se, 100, 1).param("alpha", alpha).param("delta", 0.5),
        }
    }

    #[test]
    fn flags_only_within_groups() {
        let rows = vec![row("a", 1.0, 0.01, 1.0), row("b", 1.01, 0.01, 1.0), row("c", 2.0, 0.01, 2.0)];
        assert!(disagreements(&rows).is_empty());
        let shifted = vec![row("a", 1.0, 0.01, 1.0), row("b", 1.1, 0.01, 1.0)];
        assert_eq!(disagreements(&shifted).len(), 1);
        assert!(render(&shifted).contains("#1"));
    }

    #[test]
    fn invariant_keys_do_not_split_groups() {
        let a = row("h", 1.0, 0.01, 1.0);
        let mut b = row("h", 1.0, 0.01, 1.0);
        b.report = b.report.param("b", 1.0).param("theta", 1.0);
        assert_eq!(a.group(), b.group());
    }

    #[test]
    fn csv_without_required_columns_is_rejected() {
        let p = Path::new("x.csv");
        assert!(matches!(read_csv(p, "t,value\n0,1\n"), Err(CliError::Schema(_))));
        let ok = read_csv(p, "alpha,method,point,std_error,seed\n2,h,0.56,0.01,3\n").unwrap();
        assert_eq!(ok[0].params["alpha"], 2.0);
        assert!(!ok[0].params.contains_key("seed"));
    }
}
