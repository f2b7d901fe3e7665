//! File output: CSV curves, JSON documents, and the run manifest.
//!
//! CSV floats carry 17 significant digits so every value round-trips to the
//! exact bit pattern; JSON goes through serde_json's shortest-round-trip
//! encoding, which is equally lossless. Timestamps exist only in the
//! manifest, keeping every other artifact byte-identical across reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits: lossless for f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builds a CSV document from a header and float rows.
pub fn csv_document(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut doc = String::new();
    doc.push_str(&header.join(","));
    doc.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        doc.push_str(&cells.join(","));
        doc.push('\n');
    }
    doc
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, content)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    write_text(path, &text)
}

/// Wraps a result body with the document schema version; all emitted JSON
/// verdicts go through this so their field sets are versioned.
#[derive(Debug, Clone, Serialize)]
pub struct VersionedDoc<T: Serialize> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_versioned<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    write_json(
        path,
        &VersionedDoc {
            schema_version: SCHEMA_VERSION,
            body,
        },
    )
}

/// Provenance record for one run: everything needed to replay it, plus
/// wall-clock bounds and the files it produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub n_paths: usize,
    pub n_censored: usize,
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    subcommand: String,
    config: RunConfig,
    started: u128,
    pub n_paths: usize,
    pub n_censored: usize,
    outputs: Vec<String>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, config: &RunConfig) -> Self {
        ManifestBuilder {
            subcommand: subcommand.to_string(),
            config: config.clone(),
            started: now_ms(),
            n_paths: 0,
            n_censored: 0,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `manifest.json` into `dir` and returns its path.
    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: self.subcommand,
            config_hash: self.config.hash(),
            seed: self.config.seed,
            config: self.config,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            n_paths: self.n_paths,
            n_censored: self.n_censored,
            outputs: self.outputs,
        };
        let path = dir.join("manifest.json");
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            6.02e23,
            -0.0,
        ] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let doc = csv_document(&["t", "y"], &[vec![0.0, 1.0], vec![0.5, 2.0]]);
        let mut lines = doc.lines();
        assert_eq!(lines.next().unwrap(), "t,y");
        assert!(lines.next().unwrap().starts_with("0.0000000000000000e0,"));
    }
}
