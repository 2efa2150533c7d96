//! Run manifests: every output file embeds (JSON) or is referenced by
//! (CSV, via the summary) the manifest of the run that produced it.
//! Timestamps live only here, so data files stay byte-reproducible.

use serde::{Deserialize, Serialize};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub master_seed: Option<u64>,
    /// Snapshot of the fully resolved command configuration.
    pub config: serde_json::Value,
    pub artifact_version: String,
    pub created_unix_ms: u128,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>, master_seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            command_line,
            master_seed,
            config,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }
}
