//! Run manifests and output bookkeeping.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Everything needed to rerun a command: its full parameter set (defaults
/// included), seed, tool version and the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        parameters: serde_json::Value,
        seed: u64,
        outputs: &[PathBuf],
        wall_time_s: f64,
    ) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            outputs: outputs.to_vec(),
            wall_time_s,
        }
    }
}

/// Files written by one run, so a failed run can remove them again.
#[derive(Debug, Default)]
pub struct Outputs {
    paths: Vec<PathBuf>,
}

impl Outputs {
    pub fn write(&mut self, path: &Path, text: &str) -> Result<()> {
        self.paths.push(path.to_path_buf());
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn remove_all(&mut self) {
        for p in self.paths.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}
