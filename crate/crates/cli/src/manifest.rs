//! Per-command manifest of the configuration hash and file hashes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::read(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn hashes(paths: &[PathBuf]) -> CliResult<Vec<FileHash>> {
    let mut sorted = paths.to_vec();
    sorted.sort();
    sorted.dedup();
    sorted
        .iter()
        .map(|p| Ok(FileHash { path: p.display().to_string(), sha256: sha256_file(p)? }))
        .collect()
}

/// Writes `<out>/<command>.manifest.json` and returns its path.
pub fn write_manifest(
    out: &Path,
    command: &str,
    config_sha256: &str,
    seed: u64,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> CliResult<PathBuf> {
    let m = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_sha256.to_string(),
        seed,
        inputs: hashes(inputs)?,
        outputs: hashes(outputs)?,
    };
    let path = out.join(format!("{command}.manifest.json"));
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::write(&path, e))?;
    Ok(path)
}
