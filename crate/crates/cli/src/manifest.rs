//! Provenance block embedded in every JSON artifact.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub version: String,
    pub wall_clock_secs: f64,
    /// SHA-256 of the artifact with this block removed; identical inputs and
    /// seeds reproduce it exactly.
    pub output_digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects inputs and seeds while a command runs.
pub struct Recorder {
    command: String,
    config_hash: String,
    seeds: Vec<u64>,
    inputs: Vec<InputDigest>,
    start: Instant,
}

impl Recorder {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_vec(config)?;
        Ok(Self {
            command: command.to_string(),
            config_hash: sha256_hex(&config),
            seeds: Vec::new(),
            inputs: Vec::new(),
            start: Instant::now(),
        })
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    /// Reads an input file, recording its digest.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read `{}`", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn manifest(&self, output_digest: String) -> Manifest {
        Manifest {
            command: self.command.clone(),
            config_hash: self.config_hash.clone(),
            seeds: self.seeds.clone(),
            inputs: self.inputs.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_secs: self.start.elapsed().as_secs_f64(),
            output_digest,
        }
    }

    /// Attaches the manifest to a JSON object payload.
    pub fn seal(&self, payload: Value) -> Result<Value> {
        let Value::Object(mut map) = payload else {
            anyhow::bail!("artifact payload must be a JSON object");
        };
        let digest = sha256_hex(&serde_json::to_vec(&map)?);
        map.insert("manifest".into(), serde_json::to_value(self.manifest(digest))?);
        Ok(Value::Object(map))
    }
}
