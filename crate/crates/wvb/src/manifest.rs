use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wvb_core::campaign::ExperimentConfig;

use crate::io::write_json;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl OutputFile {
    pub fn describe(dir: &Path, path: &Path) -> Result<Self, CliError> {
        let data = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: path
                .strip_prefix(dir)
                .unwrap_or(path)
                .to_string_lossy()
                .into_owned(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        })
    }
}

/// Record of one command invocation. Passing it back as `--config`
/// reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<OutputFile>,
    pub wall_time_s: f64,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            inputs: vec![],
            outputs: vec![],
            wall_time_s: 0.0,
            config: config.clone(),
        }
    }

    pub fn record(&mut self, dir: &Path, files: &[PathBuf]) -> Result<(), CliError> {
        for f in files {
            self.outputs.push(OutputFile::describe(dir, f)?);
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, self)?;
        Ok(path)
    }
}
