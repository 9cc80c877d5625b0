//! CSV tables and the run manifest.
//!
//! CSV dialect: UTF-8, comma separated, one header row, floats in
//! scientific notation with 17 significant digits. Every row repeats the
//! seed, path count and step count it was produced with.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Float cell with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Float cell, empty for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Regeneration metadata appended to each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RowMeta {
    pub seed: u64,
    pub paths: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    meta: RowMeta,
}

impl CsvTable {
    pub fn new(columns: &[&str], meta: RowMeta) -> Self {
        Self {
            header: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta,
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width must match header");
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push_str(",seed,paths,steps\n");
        for row in &self.rows {
            out.push_str(&row.join(","));
            let _ = writeln!(out, ",{},{},{}", self.meta.seed, self.meta.paths, self.meta.steps);
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Git-style blob digest, `sha256("blob <len>\0" ++ bytes)`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallClock {
    /// Seconds since the Unix epoch.
    pub started_unix: u64,
    pub elapsed_seconds: f64,
    pub workers: usize,
}

/// Everything needed to regenerate a run. Only `wall_clock` varies between
/// identical runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub kind: String,
    pub seed: u64,
    pub version: String,
    pub config: serde_json::Value,
    pub config_blob: String,
    pub outputs: Vec<OutputFile>,
    pub wall_clock: WallClock,
}

/// Writes `table` to `dir/name` and records it.
pub fn write_table(dir: &Path, name: &str, table: &CsvTable) -> Result<OutputFile> {
    let text = table.render();
    std::fs::write(dir.join(name), text.as_bytes())?;
    Ok(OutputFile {
        file: name.to_string(),
        rows: table.len(),
        sha256: sha256_hex(text.as_bytes()),
    })
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
