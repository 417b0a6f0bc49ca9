//! Result persistence: CSV with a provenance comment line and pretty JSON
//! summaries with sorted keys.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Provenance {
    pub seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!(
            "# seed={} config_sha256={} version={}",
            self.seed, self.config_sha256, LIBRARY_VERSION
        )
    }
}

/// Hex SHA-256 of the canonical (sorted-key) JSON encoding of the resolved
/// config.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let canonical = serde_json::to_string(&value).expect("value serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Writes `header` and `rows` as UTF-8 comma-separated values preceded by
/// the provenance comment. Rows are written in the order given.
pub fn write_csv(
    path: &Path,
    provenance: &Provenance,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = Vec::new();
    writeln!(out, "{}", provenance.comment())?;
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(out, "{}", row.join(","))?;
    }
    fs::write(path, out)?;
    Ok(())
}

/// Pretty-prints a JSON value; serde_json object keys are sorted, so the
/// output is canonical.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("summary serialization: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn csv_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}.csv"))
}

pub fn summary_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}_summary.json"))
}

/// Shortest-roundtrip float formatting shared by every CSV writer.
pub fn fmt_f(x: f64) -> String {
    format!("{x}")
}

/// Median of an unsorted sample (average of the middle pair for even n).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Empirical quantile by nearest-rank on the sorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let rank = ((sorted.len() as f64) * q).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}
