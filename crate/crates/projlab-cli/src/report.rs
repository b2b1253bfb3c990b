//! Machine-readable run results: a JSON report plus per-kind CSV tables.
//!
//! CSV files are UTF-8 with `\n` line endings, a leading timestamp comment
//! line, and a fixed column order per experiment kind. Floats are written
//! in Rust's shortest round-trip decimal form, so identical runs produce
//! byte-identical files apart from the timestamp line.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Everything a run produces, traceable to diagnostics/experiments outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub kind: String,
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub duration_seconds: f64,
    pub final_point: Vec<f64>,
    /// Distance from the final iterate to each set of the experiment.
    pub final_distances: Vec<f64>,
    pub gammas: Vec<f64>,
    pub checkpoints: Vec<usize>,
    /// `gamma_sums[g][c]`: partial sum for `gammas[g]` at `checkpoints[c]`.
    pub gamma_sums: Vec<Vec<f64>>,
    /// Asymptotic ratios at the checkpoints, for kinds carrying a model.
    pub ratios: Option<Vec<f64>>,
    /// Largest residual of the kind's defining identity, when one exists.
    pub max_residual: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// A CSV table: fixed columns, one row per step or checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn render(&self) -> String {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!("# generated_unix {stamp}\n"));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map(|v| format_float(v)).unwrap_or_default())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal; integers keep a trailing `.0` so the column
/// type stays visibly floating-point.
fn format_float(v: f64) -> String {
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E', 'n', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Column name for a gamma partial-sum column.
pub fn gamma_column(gamma: f64) -> String {
    format!("s_{gamma}")
}
