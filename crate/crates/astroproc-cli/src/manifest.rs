//! Audit manifest for pipeline runs: one JSON line per produced artifact,
//! recording the stage name, the SHA-256 of the stage input, the output
//! path, and the parameters used.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Result;

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub stage: String,
    pub input_sha256: String,
    pub output: String,
    pub params: serde_json::Value,
}

/// SHA-256 of raw bytes, lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// Content hash of an image: dimensions plus the pixel buffer bits.
pub fn image_sha256(img: &astroproc::image::Image) -> String {
    let mut bytes = Vec::with_capacity(16 + img.data().len() * 8);
    bytes.extend_from_slice(&(img.width() as u64).to_le_bytes());
    bytes.extend_from_slice(&(img.height() as u64).to_le_bytes());
    for v in img.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    sha256_hex(&bytes)
}

/// Append-only JSON-lines manifest.
pub struct Manifest {
    path: PathBuf,
}

impl Manifest {
    /// Create (truncating any previous file) at `dir/manifest.jsonl`.
    pub fn create(dir: &Path) -> Result<Manifest> {
        let path = dir.join("manifest.jsonl");
        std::fs::write(&path, b"")?;
        Ok(Manifest { path })
    }

    pub fn record(
        &self,
        stage: &str,
        input_sha256: &str,
        output: &Path,
        params: serde_json::Value,
    ) -> Result<()> {
        let entry = ManifestEntry {
            stage: stage.to_string(),
            input_sha256: input_sha256.to_string(),
            output: output.display().to_string(),
            params,
        };
        let mut line = serde_json::to_string(&entry).expect("manifest entries serialize");
        line.push('\n');
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        file.write_all(line.as_bytes())?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
