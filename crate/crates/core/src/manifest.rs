//! Machine-readable record of a run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EXPORT_MANIFEST_FILE: &str = "export_manifest.json";

/// Command, parameters, outcome and the artifact files of one run. Artifact
/// paths are relative to the run directory.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub parameters: serde_json::Value,
    pub outcome: serde_json::Value,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, parameters: serde_json::Value) -> Self {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters,
            outcome: serde_json::Value::Null,
            artifacts: Vec::new(),
        }
    }

    /// Writes `contents` to `dir/name` and records it.
    pub fn emit(&mut self, dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            create_dir(parent)?;
        }
        fs::write(&path, contents).map_err(|source| Error::Io { path, source })?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn emit_json<S: Serialize>(&mut self, dir: &Path, name: &str, value: &S) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.emit(dir, name, text + "\n")
    }

    /// Writes `manifest.json` after checking every artifact is on disk.
    pub fn finish(&self, dir: &Path) -> Result<PathBuf> {
        self.finish_as(dir, MANIFEST_FILE)
    }

    pub fn finish_as(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        if let Some(missing) = self.artifacts.iter().find(|a| !dir.join(a).is_file()) {
            return Err(Error::InvalidArgument(format!("artifact {missing} was not written")));
        }
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}
