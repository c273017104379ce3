//! Run manifests: everything needed to reproduce a batch.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pavoc::config::VocoderConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Base seed (decimal; per-file seeds are derived from it).
    pub seed: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// Resolved configuration; replays use this instead of re-reading files.
    pub config: VocoderConfig,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.toml")
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(Self::file_name(&self.command));
        let text = toml::to_string(self)?;
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| pavoc::Error::Format(format!("{}: {e}", path.display())).into())
    }
}
