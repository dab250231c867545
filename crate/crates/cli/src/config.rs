//! Server configuration: an optional TOML file, then environment overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use groundcoref::service::ServiceConfig;

pub const ENV_PORT: &str = "GROUNDCOREF_PORT";
pub const ENV_DATA_DIR: &str = "GROUNDCOREF_DATA_DIR";
pub const ENV_TEST_POOL: &str = "GROUNDCOREF_TEST_POOL";
pub const ENV_GATING_THRESHOLD: &str = "GROUNDCOREF_GATING_THRESHOLD";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    /// Holds the event log and snapshots.
    pub data_dir: PathBuf,
    /// JSON array of gold annotations used as secret tests.
    pub test_pool: Option<PathBuf>,
    pub service: ServiceConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("data"),
            test_pool: None,
            service: ServiceConfig::default(),
        }
    }
}

impl ServerConfig {
    pub fn from_toml(source: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(source)?)
    }

    /// Read `path` if given (defaults otherwise) and apply the process
    /// environment on top.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut config = match path {
            Some(p) => {
                let source = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml(&source).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Self::default(),
        };
        config.apply_env(std::env::vars())?;
        Ok(config)
    }

    /// Apply `GROUNDCOREF_*` overrides from `vars`; unrelated keys are ignored.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> anyhow::Result<()> {
        for (key, value) in vars {
            match key.as_str() {
                ENV_PORT => self.port = value.parse().with_context(|| format!("{ENV_PORT}={value}"))?,
                ENV_DATA_DIR => self.data_dir = PathBuf::from(value),
                ENV_TEST_POOL => self.test_pool = Some(PathBuf::from(value)),
                ENV_GATING_THRESHOLD => {
                    let t: f64 = value.parse().with_context(|| format!("{ENV_GATING_THRESHOLD}={value}"))?;
                    if !(0.0..=1.0).contains(&t) {
                        bail!("{ENV_GATING_THRESHOLD} must lie in [0, 1], got {t}");
                    }
                    self.service.gating_threshold = t;
                }
                _ => {}
            }
        }
        Ok(())
    }
}
