//! Run manifests: everything needed to repeat a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizer::ScenarioConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("output directory {path} is not writable: {source}")]
    OutputDir { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot read manifest {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    /// Subcommand and its arguments, as invoked.
    pub command: Vec<String>,
    pub scenario_path: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Key paths filled from defaults.
    pub defaults: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub resolved_config: Option<ScenarioConfig>,
    pub started_at: String,
    pub finished_at: Option<String>,
}

/// Current UTC time, RFC 3339 with second precision.
pub fn timestamp_now() -> String {
    let secs = SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    DateTime::<Utc>::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Creates `dir` if needed and checks that a file can be written in it.
pub fn prepare_output_dir(dir: &Path) -> Result<(), ManifestError> {
    let err = |source| ManifestError::OutputDir { path: dir.to_path_buf(), source };
    std::fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(".write-check");
    std::fs::write(&probe, b"").map_err(err)?;
    std::fs::remove_file(&probe).map_err(err)
}

impl RunManifest {
    pub fn new(tool: &str, tool_version: &str, command: Vec<String>, seed: u64, output_dir: &Path) -> Self {
        Self {
            tool: tool.to_string(),
            tool_version: tool_version.to_string(),
            command,
            scenario_path: None,
            seed,
            output_dir: output_dir.to_path_buf(),
            defaults: BTreeMap::new(),
            warnings: Vec::new(),
            resolved_config: None,
            started_at: timestamp_now(),
            finished_at: None,
        }
    }

    pub fn path(&self) -> PathBuf {
        self.output_dir.join(MANIFEST_FILE)
    }

    /// Writes the manifest as pretty JSON; returns its path.
    pub fn write(&self) -> Result<PathBuf, ManifestError> {
        let path = self.path();
        let mut body = serde_json::to_string_pretty(self).expect("manifest serialises");
        body.push('\n');
        std::fs::write(&path, body).map_err(|source| ManifestError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    /// Stamps the finish time and rewrites the file.
    pub fn finish(&mut self) -> Result<PathBuf, ManifestError> {
        self.finished_at = Some(timestamp_now());
        self.write()
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ManifestError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }
}
