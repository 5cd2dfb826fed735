//! Run manifest written next to the outputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub jobs: usize,
    pub tol_scale: f64,
    pub runs: Vec<RunRecord>,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(command: &str, config_hash: String, jobs: usize, tol_scale: f64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash,
            jobs,
            tol_scale,
            runs: vec![],
            outputs: vec![],
        }
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| !r.ok).count()
    }

    /// Writes `bytes` to `dir/name` and registers the file.
    pub fn emit(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(dir.join(name), bytes)?;
        self.outputs.push(OutputRecord { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Every registered output exists with the recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<(), CliError> {
        for o in &self.outputs {
            let bytes = fs::read(dir.join(&o.path)).map_err(|e| CliError::Io(format!("{}: {e}", o.path)))?;
            if sha256_hex(&bytes) != o.sha256 {
                return Err(CliError::Io(format!("{}: contents changed after writing", o.path)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serialisable")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let s = fs::read_to_string(path)?;
        toml::from_str(&s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
