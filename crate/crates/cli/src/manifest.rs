//! `<out>.manifest.json` sidecars.

use std::path::{Path, PathBuf};

use collapse_core::PhysicalConstants;
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::formats::number;

/// Everything needed to regenerate an output file.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub constants: PhysicalConstants,
    pub seed: Option<u64>,
    pub metadata: Map<String, Value>,
}

impl RunManifest {
    pub fn new(command: &str, constants: PhysicalConstants) -> Self {
        Self {
            command: command.to_string(),
            parameters: Map::new(),
            constants,
            seed: None,
            metadata: Map::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "parameters": self.parameters,
            "constants": {
                "hbar_mev_s": number(self.constants.hbar()),
                "planck_energy_mev": number(self.constants.planck_energy()),
                "k": number(self.constants.k()),
            },
            "code_version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "metadata": self.metadata,
            "timestamp": chrono::Utc::now().to_rfc3339(),
        })
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write_beside(&self, out: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path_for(out);
        let text = serde_json::to_string_pretty(&self.to_json()).unwrap_or_default() + "\n";
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(path)
    }
}
