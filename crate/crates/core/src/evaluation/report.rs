//! Report emission: fixed-column text tables plus newline-delimited JSON.
//!
//! The table column order is Model, Precision, Recall, F1, with a `†`
//! significance marker attached to F1 when the row differs significantly
//! from the declared baseline run.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{EvalReport, SignificanceResult};
use crate::binio::atomic_write_text;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub model: String,
    #[serde(flatten)]
    pub report: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance: Option<SignificanceResult>,
}

impl ReportRow {
    pub fn new(model: impl Into<String>, report: EvalReport) -> Self {
        ReportRow {
            model: model.into(),
            report,
            significance: None,
        }
    }

    pub fn with_significance(mut self, significance: SignificanceResult) -> Self {
        self.significance = Some(significance);
        self
    }

    fn marker(&self) -> &'static str {
        match &self.significance {
            Some(s) if s.significant => "†",
            _ => "",
        }
    }
}

/// Render rows as a fixed-column text table.
pub fn render_table(title: &str, rows: &[ReportRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.model.len())
        .chain(std::iter::once("Model".len()))
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    out.push_str(title);
    out.push('\n');
    out.push_str(&format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}\n",
        "Model", "Precision", "Recall", "F1"
    ));
    out.push_str(&format!("{}\n", "-".repeat(width + 35)));
    for row in rows {
        out.push_str(&format!(
            "{:<width$}  {:>9.4}  {:>9.4}  {:>8.4}{}\n",
            row.model,
            row.report.precision,
            row.report.recall,
            row.report.f1,
            row.marker()
        ));
    }
    out
}

/// Write rows as machine-readable newline-delimited JSON.
pub fn write_report_jsonl(rows: &[ReportRow], path: &Path) -> Result<()> {
    atomic_write_text(path, |w| {
        for row in rows {
            let line = serde_json::to_string(row).expect("report row serializes");
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(f1: f64) -> EvalReport {
        EvalReport {
            precision: f1,
            recall: f1,
            f1,
            tp: 1,
            fp: 1,
            fn_: 1,
            tn: 1,
            total_pairs: 4,
        }
    }

    #[test]
    fn table_has_fixed_columns_and_marker() {
        let rows = vec![
            ReportRow::new("BM25 cutoff 5", report(0.5)),
            ReportRow::new("GRU aggregator", report(0.75)).with_significance(
                SignificanceResult {
                    t: 3.0,
                    df: 9,
                    p: 0.01,
                    significant: true,
                    degenerate: false,
                },
            ),
        ];
        let table = render_table("test-set", &rows);
        assert!(table.contains("Model"));
        assert!(table.contains("Precision"));
        assert!(table.contains("0.7500†"));
        assert!(!table.contains("0.5000†"));
    }

    #[test]
    fn jsonl_rows_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.jsonl");
        let rows = vec![ReportRow::new("m", report(0.25))];
        write_report_jsonl(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(value["model"], "m");
        assert_eq!(value["fn"], 1);
        assert!(value.get("significance").is_none());
    }
}
