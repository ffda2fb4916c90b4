//! Versioned JSON report and its determinism hash.

use std::path::Path;

use nstable::SimReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const SCHEMA: &str = "nstable-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub reports: Vec<SimReport>,
    /// Command-specific detail (accepted scales, gap sequences, ...).
    pub results: serde_json::Value,
    /// SHA-256 over everything above except `runtime_ms` and the
    /// output-only config fields.
    pub hash: String,
}

impl Report {
    pub fn new(config: ExperimentConfig, reports: Vec<SimReport>, results: serde_json::Value) -> Self {
        let mut report = Self {
            schema: SCHEMA.into(),
            toolkit_version: nstable::VERSION.into(),
            config,
            reports,
            results,
            hash: String::new(),
        };
        report.hash = report.content_hash();
        report
    }

    pub fn content_hash(&self) -> String {
        let stripped = serde_json::json!({
            "schema": self.schema,
            "toolkit_version": self.toolkit_version,
            "config": self.config.for_hashing(),
            "reports": self.reports.iter().map(|r| SimReport { runtime_ms: 0, ..r.clone() }).collect::<Vec<_>>(),
            "results": self.results,
        });
        hex::encode(Sha256::digest(stripped.to_string().as_bytes()))
    }

    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.verdict.passed())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("report is plain data");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Writes `columns` as CSV, one column per replica.
pub fn write_columns(path: &Path, columns: &[Vec<f64>]) -> Result<(), CliError> {
    let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&(0..columns.len()).map(|i| format!("replica_{i}")).collect::<Vec<_>>().join(","));
    out.push('\n');
    for r in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| c.get(r).map(|v| v.to_string()).unwrap_or_default()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
