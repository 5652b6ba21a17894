//! Run manifests: the fully resolved parameter set accompanying every output
//! file, sufficient to re-run the command and reproduce it byte for byte.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved argument vector (defaults filled in, output paths excluded).
    pub args: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        args: Vec<String>,
        inputs: Vec<PathBuf>,
        outputs: &[PathBuf],
        rng_seed: Option<u64>,
    ) -> Self {
        Self {
            tool: "npi".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            rng_seed,
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialization");
        std::fs::write(path, text + "\n")
    }
}
