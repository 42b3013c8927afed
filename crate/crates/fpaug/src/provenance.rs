//! Reproducibility metadata attached to every artifact the tool writes.
//!
//! Provenance deliberately carries no timestamps or wall times: replaying a
//! run with the same inputs and seed must regenerate byte-identical files.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    /// Echo of the effective configuration.
    pub config: serde_json::Value,
    /// sha256 (hex) of each input file, keyed by role.
    pub input_hashes: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(subcommand: &str, seed: u64, config: serde_json::Value) -> Self {
        Provenance {
            tool: "fpaug".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed,
            config,
            input_hashes: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, role: &str, digest: String) -> Self {
        self.input_hashes.insert(role.to_string(), digest);
        self
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
