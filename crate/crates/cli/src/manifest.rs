//! Run manifest: what each stage read and wrote, by content digest.
//!
//! Digests cover file bytes and the effective configuration only; timing is
//! recorded beside them and never hashed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uavids_core::json;

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config: serde_json::Value,
    pub config_digest: String,
    pub inputs: IndexMap<String, String>,
    pub outputs: IndexMap<String, String>,
    pub warning_count: usize,
    pub warnings: Vec<String>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub stages: IndexMap<String, StageRecord>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            stages: IndexMap::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a file, or of a directory as the sorted list of its files'
/// relative paths and digests.
pub fn digest_path(path: &Path) -> CliResult<String> {
    let meta = std::fs::metadata(path).map_err(|e| CliError::file(path, e.to_string()))?;
    if meta.is_file() {
        let bytes = std::fs::read(path).map_err(|e| CliError::file(path, e.to_string()))?;
        return Ok(sha256_hex(&bytes));
    }
    let mut files = Vec::new();
    collect_files(path, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(path).unwrap_or(&f);
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        let bytes = std::fs::read(&f).map_err(|e| CliError::file(&f, e.to_string()))?;
        h.update(Sha256::digest(&bytes));
    }
    Ok(hex::encode(h.finalize()))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::file(dir, e.to_string()))?;
    for entry in entries {
        let p = entry.map_err(|e| CliError::file(dir, e.to_string()))?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Collects one stage's record while it runs.
pub struct Stage {
    name: String,
    out_dir: PathBuf,
    config: serde_json::Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    started: Instant,
}

impl Stage {
    pub fn new<C: Serialize>(name: &str, out_dir: &Path, config: &C) -> CliResult<Self> {
        let config = serde_json::to_value(config).map_err(|e| CliError::flag("--config", e.to_string()))?;
        Ok(Stage {
            name: name.to_string(),
            out_dir: out_dir.to_path_buf(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        eprintln!("warning: {w}");
        self.warnings.push(w);
    }

    fn key(&self, p: &Path) -> String {
        p.strip_prefix(&self.out_dir).unwrap_or(p).to_string_lossy().replace('\\', "/")
    }

    fn digests(&self, paths: &[PathBuf]) -> CliResult<IndexMap<String, String>> {
        paths.iter().map(|p| Ok((self.key(p), digest_path(p)?))).collect()
    }

    /// Digest everything and merge the record into `<out>/manifest.json`.
    pub fn finish(self) -> CliResult<StageRecord> {
        let config_bytes = json::to_vec(&self.config, false).map_err(|e| CliError::flag("--config", e.to_string()))?;
        let record = StageRecord {
            config_digest: sha256_hex(&config_bytes),
            inputs: self.digests(&self.inputs)?,
            outputs: self.digests(&self.outputs)?,
            warning_count: self.warnings.len(),
            warnings: self.warnings.clone(),
            elapsed_ms: self.started.elapsed().as_millis() as u64,
            config: self.config.clone(),
        };
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut manifest = if path.exists() {
            let bytes = std::fs::read(&path).map_err(|e| CliError::file(&path, e.to_string()))?;
            serde_json::from_slice(&bytes).unwrap_or_default()
        } else {
            RunManifest::default()
        };
        manifest.toolkit_version = env!("CARGO_PKG_VERSION").to_string();
        manifest.stages.insert(self.name.clone(), record.clone());
        json::write_json(&path, &manifest).map_err(|e| CliError::core_at(&path, e))?;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_digest_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        std::fs::write(dir.path().join("a/x.csv"), "1").unwrap();
        let d1 = digest_path(dir.path()).unwrap();
        assert_eq!(d1, digest_path(dir.path()).unwrap());
        std::fs::write(dir.path().join("a/x.csv"), "2").unwrap();
        assert_ne!(d1, digest_path(dir.path()).unwrap());
    }

    #[test]
    fn known_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
