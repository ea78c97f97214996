use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_path: Option<PathBuf>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
    pub exit_code: i32,
    pub error: Option<String>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: None,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            seed: None,
            parameters: BTreeMap::new(),
            exit_code: 0,
            error: None,
            duration_seconds: 0.0,
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn param(&mut self, name: &str, value: impl ToString) {
        self.parameters.insert(name.to_string(), value.to_string());
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }
}
