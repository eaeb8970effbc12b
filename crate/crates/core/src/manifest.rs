//! Run manifests written next to every CLI output.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Timestamp used when `SOURCE_DATE_EPOCH` is unset, so reruns stay byte-identical.
pub const DEFAULT_EPOCH: u64 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    /// File name only, so the manifest does not depend on the output directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        file: path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// `SOURCE_DATE_EPOCH` when set and valid, otherwise [`DEFAULT_EPOCH`].
pub fn build_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_EPOCH)
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: u64) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: build_timestamp(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = crate::format::to_json_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn digest_uses_file_name_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a\n1\n").unwrap();
        let d = digest_file(&p).unwrap();
        assert_eq!(d.file, "x.csv");
        assert_eq!(d.bytes, 4);
    }

    #[test]
    fn manifest_serializes_config() {
        let m = RunManifest::new("forest", &serde_json::json!({"k": 1}), 5).unwrap();
        let text = crate::format::to_json_string(&m).unwrap();
        assert!(text.contains("\"command\": \"forest\""));
        assert!(text.contains("\"seed\": 5"));
    }
}
