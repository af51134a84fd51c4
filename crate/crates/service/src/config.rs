//! Service configuration, read from TOML with environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srdp_core::session::EngineConfig;

use crate::error::Failure;

/// ```toml
/// listen = "127.0.0.1:8080"
/// corpus = "data/corpus.jsonl"   # omit for the built-in corpus
/// log_dir = "logs"
/// static_dir = "web/dist"        # optional UI bundle
/// default_seed = 7               # omit to draw a random seed per session
/// auto_tick = true
/// auto_tick_grace_ms = 150
///
/// [engine]
/// icon_speed = 2.0
/// drift_speed = 1.0
/// animation_ms = 840
/// commit_mode = "analog"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub corpus: Option<PathBuf>,
    pub log_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    /// Seed for sessions created without one; random when unset.
    pub default_seed: Option<u64>,
    /// Server-side ticking of commit and animation deadlines. Off leaves
    /// ticking to clients.
    pub auto_tick: bool,
    /// Delay past the estimated client time before the server ticks.
    pub auto_tick_grace_ms: u64,
    pub engine: EngineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: ([127, 0, 0, 1], 8080).into(),
            corpus: None,
            log_dir: PathBuf::from("logs"),
            static_dir: None,
            default_seed: None,
            auto_tick: true,
            auto_tick_grace_ms: 150,
            engine: EngineConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    /// Checks everything that would otherwise fail at the first request.
    pub fn validate(&self) -> Result<(), Failure> {
        self.engine
            .validate()
            .map_err(|e| Failure::Config(e.to_string()))?;
        if let Some(c) = &self.corpus {
            if !c.is_file() {
                return Err(Failure::Config(format!(
                    "corpus {} does not exist",
                    c.display()
                )));
            }
        }
        if let Some(d) = &self.static_dir {
            if !d.is_dir() {
                return Err(Failure::Config(format!(
                    "static_dir {} does not exist",
                    d.display()
                )));
            }
        }
        Ok(())
    }
}
