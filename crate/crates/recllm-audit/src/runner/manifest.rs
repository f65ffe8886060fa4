//! Run manifest: per-cell/per-repetition status plus content addresses of
//! the transcripts, enabling resumable runs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunnerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Pending,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepEntry {
    pub status: CellStatus,
    /// Transcript path relative to the results directory.
    pub transcript: String,
    /// sha256 of the transcript file once complete.
    pub sha256: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    /// cell tag -> repetition index (stringified) -> entry.
    pub cells: BTreeMap<String, BTreeMap<String, RepEntry>>,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        RunManifest {
            config_hash,
            cells: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let raw = std::fs::read_to_string(path).map_err(|e| RunnerError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&raw)
            .map_err(|e| RunnerError::Config(format!("manifest {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), RunnerError> {
        let raw = serde_json::to_string_pretty(self).expect("manifest serialization is infallible");
        std::fs::write(path, raw + "\n").map_err(|e| RunnerError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn entry(&self, cell: &str, rep: usize) -> Option<&RepEntry> {
        self.cells
            .get(cell)
            .and_then(|reps| reps.get(&rep.to_string()))
    }

    pub fn set_entry(&mut self, cell: &str, rep: usize, entry: RepEntry) {
        self.cells
            .entry(cell.to_string())
            .or_default()
            .insert(rep.to_string(), entry);
    }

    /// A completed repetition is reusable when its transcript still hashes
    /// to the recorded address.
    pub fn reusable(&self, results_dir: &Path, cell: &str, rep: usize) -> bool {
        match self.entry(cell, rep) {
            Some(entry) if entry.status == CellStatus::Complete => {
                let path = results_dir.join(&entry.transcript);
                match (file_sha256(&path), &entry.sha256) {
                    (Ok(actual), Some(recorded)) => actual == *recorded,
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

/// Hex sha256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String, RunnerError> {
    let bytes = std::fs::read(path).map_err(|e| RunnerError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
