use std::fs;
use std::io;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one invocation. `elapsed_ms` is present only when timing was
/// requested, so reports of identical runs are identical files.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl RunReport {
    pub fn new(command: &str, inputs: &[PathBuf], seed: u64, result: Value, elapsed_ms: Option<u64>) -> io::Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                let digest = Sha256::digest(fs::read(p)?);
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
                })
            })
            .collect::<io::Result<_>>()?;
        Ok(RunReport {
            command: command.to_string(),
            inputs,
            seed,
            result,
            elapsed_ms,
        })
    }
}
