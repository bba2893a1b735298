//! Manifest and atomic artifact writing.
//!
//! The manifest is written before any artifact with status `running`, and
//! rewritten as `complete` (with artifact digests) or `failed` at the end.
//! A manifest still reading `running` marks an interrupted run.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub content: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, content: impl Into<Vec<u8>>) -> Self {
        Self { name: name.into(), content: content.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: String,
    pub inputs_sha256: String,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<ArtifactRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::numerical(format!("output: cannot write {}: {e}", path.display()))
}

/// An output directory holding one run.
pub struct Sink {
    dir: PathBuf,
    manifest: Manifest,
}

impl Sink {
    pub fn begin(dir: &Path, manifest: Manifest) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let sink = Self { dir: dir.to_path_buf(), manifest };
        sink.write_manifest()?;
        Ok(sink)
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
        text.push('\n');
        write_atomic(&path, text.as_bytes()).map_err(|e| io_err(&path, e))
    }

    pub fn finish(mut self, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
        let mut paths = Vec::new();
        for a in artifacts {
            let path = self.dir.join(&a.name);
            if let Err(e) = write_atomic(&path, &a.content) {
                let err = io_err(&path, e);
                self.fail(&err.message);
                return Err(err);
            }
            self.manifest.artifacts.push(ArtifactRecord {
                name: a.name.clone(),
                bytes: a.content.len(),
                sha256: sha256_hex(&a.content),
            });
            paths.push(path);
        }
        self.manifest.status = "complete".into();
        self.write_manifest()?;
        Ok(paths)
    }

    /// Best effort: the manifest already says `running` if this fails too.
    pub fn fail(mut self, message: &str) {
        self.manifest.status = "failed".into();
        self.manifest.error = Some(message.to_string());
        let _ = self.write_manifest();
    }
}
