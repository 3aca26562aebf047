//! Output plumbing: deterministic CSV/JSON writers and the run manifest
//! with per-file content digests.

use crate::config::RunConfig;
use alpha_riccati::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Scientific format with 16 significant digits for solver-precision data.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.15e}")
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Per-run record of the configuration and every emitted file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub config: RunConfig,
    pub outputs: Vec<ManifestEntry>,
}

pub struct OutputWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        let mut hasher = Sha256::new();
        hasher.update(contents.as_bytes());
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            sha256: hex::encode(hasher.finalize()),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("json serialization failed: {e}")))?;
        self.write(name, &text)
    }

    /// Writes the manifest itself (not listed among its own outputs).
    pub fn finish(
        self,
        config: &RunConfig,
        command: &str,
        started: chrono::DateTime<chrono::Utc>,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            started_utc: started.to_rfc3339(),
            finished_utc: chrono::Utc::now().to_rfc3339(),
            config: config.clone(),
            outputs: self.entries,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
        std::fs::write(&path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Builds a CSV document from a header and formatted rows.
pub fn csv_document(header: &str, rows: &[String]) -> String {
    let mut doc = String::with_capacity(rows.len() * 64 + header.len() + 2);
    doc.push_str(header);
    doc.push('\n');
    for row in rows {
        doc.push_str(row);
        doc.push('\n');
    }
    doc
}
