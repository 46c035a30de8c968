use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::failure::Failure;

pub const MANIFEST_NAME: &str = "manifest.json";

/// One emitted file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: &str, text: String) -> Self {
        Self { name: name.to_owned(), bytes: text.into_bytes() }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
        text.push('\n');
        Self::text(name, text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(config: ExperimentConfig, wall_time_seconds: f64, artifacts: &[Artifact]) -> Self {
        Self {
            toolkit: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config,
            wall_time_seconds,
            files: artifacts
                .iter()
                .map(|a| FileDigest { name: a.name.clone(), sha256: sha256_hex(&a.bytes), bytes: a.bytes.len() })
                .collect(),
        }
    }

    /// Names of listed files whose contents in `dir` no longer match.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match std::fs::read(dir.join(&f.name)) {
                Ok(bytes) => sha256_hex(&bytes) != f.sha256 || bytes.len() != f.bytes,
                Err(_) => true,
            })
            .map(|f| f.name.clone())
            .collect()
    }
}

/// Writes every artifact and the manifest into `dir`.
pub fn write_run(dir: &Path, artifacts: &[Artifact], manifest: &RunManifest) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::usage(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes).map_err(io)?;
    }
    let m = Artifact::json(MANIFEST_NAME, manifest);
    std::fs::write(dir.join(MANIFEST_NAME), m.bytes).map_err(io)
}
