//! Run manifests: enough metadata next to every output file to reproduce it
//! bit-exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestOutput {
    pub path: String,
    pub sha256: String,
    pub lines: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_utc: String,
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub params: BTreeMap<String, serde_json::Value>,
    pub output: ManifestOutput,
}

impl RunManifest {
    pub fn new(command: &str, output_path: &Path, output_bytes: &[u8]) -> RunManifest {
        RunManifest {
            tool: "m2c".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            created_utc: chrono::Utc::now().to_rfc3339(),
            inputs: BTreeMap::new(),
            params: BTreeMap::new(),
            output: ManifestOutput {
                path: output_path.display().to_string(),
                sha256: sha256_hex(output_bytes),
                lines: output_bytes.iter().filter(|&&b| b == b'\n').count() as u64,
            },
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<serde_json::Value>) -> RunManifest {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> RunManifest {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Writes the manifest to `<output>.manifest.json`.
    pub fn write(&self, output_path: &Path) -> Result<PathBuf> {
        let path = manifest_path(output_path);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(output_path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(manifest_path(output_path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("suite.jsonl");
        std::fs::write(&out, "line\n").unwrap();
        let manifest = RunManifest::new("expand", &out, b"line\n")
            .input("lexicon", "lex.json")
            .param("seed", 7);
        manifest.write(&out).unwrap();
        let back = RunManifest::read(&out).unwrap();
        assert_eq!(back.params["seed"], 7);
        assert_eq!(back.output.lines, 1);
        assert_eq!(back.output.sha256, sha256_hex(b"line\n"));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
