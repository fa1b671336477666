use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::CliConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
/// Resolved config (file plus overrides); `lifelong train --config` on it
/// replays the run.
pub const RESOLVED_CONFIG_FILE: &str = "run.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub command_line: Vec<String>,
    /// Unix seconds.
    pub started_at: u64,
    pub resumed_at: Vec<u64>,
    pub finished_at: Option<u64>,
    pub config: CliConfig,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(config: &CliConfig) -> Self {
        let config_hash = config.run_config().hash();
        Self {
            version: format!("lifelong-cli {} config {}", env!("CARGO_PKG_VERSION"), &config_hash[..16]),
            config_hash,
            seed: config.train.seed,
            command_line: std::env::args().collect(),
            started_at: now(),
            resumed_at: Vec::new(),
            finished_at: None,
            config: config.clone(),
        }
    }

    pub fn write(&self, run: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(run.join(MANIFEST_FILE), text + "\n")
            .map_err(|e| CliError::config(format!("cannot write manifest in {}: {e}", run.display())))
    }

    pub fn read(run: &Path) -> CliResult<Self> {
        let path = run.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// Writes `run.toml` for a new run, or checks that an existing one matches.
pub fn write_resolved_config(run: &Path, config: &CliConfig) -> CliResult<()> {
    let path = run.join(RESOLVED_CONFIG_FILE);
    let text = config.to_toml()?;
    match std::fs::read_to_string(&path) {
        Ok(existing) if existing == text => Ok(()),
        Ok(_) => Err(CliError::config(format!(
            "{} was written with a different config",
            path.display()
        ))),
        Err(_) => std::fs::write(&path, text).map_err(|e| CliError::config(format!("{}: {e}", path.display()))),
    }
}
