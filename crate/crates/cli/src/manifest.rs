//! Every run leaves a manifest next to its outputs: what command produced
//! them, from which configuration, and a digest of every file written, so a
//! result can be audited or reproduced later.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST_SCHEMA: &str = "esq-experiment/1";
pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub schema: String,
    pub command: String,
    /// seed-derivation contract of the core streams; a consumer can refuse
    /// to compare runs whose derivations differ
    pub stream_derivation: String,
    pub created_unix_s: u64,
    pub config: ExperimentConfig,
    pub files: Vec<FileDigest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// Collects the files one command run emits, then seals them into the
/// manifest. All writes go through here so nothing escapes the digest list
/// and nothing lands outside the output directory.
pub struct RunContext {
    dir: PathBuf,
    command: String,
    config: ExperimentConfig,
    files: Vec<FileDigest>,
}

impl RunContext {
    pub fn create(config: &ExperimentConfig, command: &str) -> io::Result<Self> {
        let dir = PathBuf::from(&config.output.dir);
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            command: command.to_string(),
            config: config.clone(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `name` is a bare file name; paths that would step out of the output
    /// directory are refused.
    pub fn write_file(&mut self, name: &str, contents: &str) -> io::Result<()> {
        if name.contains(['/', '\\']) || name == MANIFEST_NAME {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("refusing to write {name:?} outside the run directory"),
            ));
        }
        let bytes = contents.as_bytes();
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileDigest {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes the manifest last, covering everything emitted before it.
    pub fn finish(self) -> io::Result<PathBuf> {
        let doc = ManifestDoc {
            schema: MANIFEST_SCHEMA.to_string(),
            command: self.command,
            stream_derivation: esq_core::simulator::rng::STREAM_DERIVATION.to_string(),
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config: self.config,
            files: self.files,
        };
        let text = toml::to_string_pretty(&doc)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, text)?;
        Ok(path)
    }
}
