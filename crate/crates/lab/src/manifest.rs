use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// What a run produced. Everything except `wall_clock_seconds` is a pure
/// function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        Self {
            config_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }
}
