use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one run: what was asked, what was produced, how it ended.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub success: bool,
    pub verdict: String,
    pub diagnostics: serde_json::Value,
    pub files: Vec<FileRecord>,
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileRecord> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(FileRecord { name: name.into(), bytes: bytes.len(), sha256: hex::encode(Sha256::digest(bytes)) })
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_atomic(dir, "manifest.json", text.as_bytes())?;
        Ok(())
    }
}
