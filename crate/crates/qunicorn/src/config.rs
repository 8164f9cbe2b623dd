// SPDX-License-Identifier: Apache-2.0

//! Service configuration, read from a TOML file.

use std::net::IpAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "QUNICORN_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind_address: IpAddr,
    pub port: u16,
    /// Provider catalog; the built-in catalog when absent.
    pub catalog_path: Option<PathBuf>,
    /// Factor applied to every simulated device duration.
    pub time_scale: f64,
    pub worker_count: usize,
    pub provenance_interval_s: f64,
    pub persistence_path: PathBuf,
    /// Seed of the provenance jitter and of mock failure injection.
    pub seed: u64,
    /// Probability that a mock provider job fails at completion.
    pub failure_rate: f64,
    /// Adds a noiseless local statevector provider next to the catalog.
    pub enable_local_simulator: bool,
    /// Delay between two polls of an in-flight provider job.
    pub poll_interval_ms: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind_address: IpAddr::from([127, 0, 0, 1]),
            port: 8080,
            catalog_path: None,
            time_scale: 0.01,
            worker_count: 4,
            provenance_interval_s: 60.0,
            persistence_path: PathBuf::from("qunicorn.redb"),
            seed: 42,
            failure_rate: 0.0,
            enable_local_simulator: false,
            poll_interval_ms: 20,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Config, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Config::from_toml(&text, path)
    }

    /// Explicit path first, then `QUNICORN_CONFIG`, then defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Config, ConfigError> {
        match explicit.map(PathBuf::from).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)) {
            Some(path) => Config::load(&path),
            None => Ok(Config::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if !(self.time_scale.is_finite() && self.time_scale >= 0.0) {
            return bad("time_scale must be a nonnegative number");
        }
        if self.worker_count == 0 {
            return bad("worker_count must be positive");
        }
        if !(self.provenance_interval_s.is_finite() && self.provenance_interval_s > 0.0) {
            return bad("provenance_interval_s must be positive");
        }
        if !(0.0..=1.0).contains(&self.failure_rate) {
            return bad("failure_rate must lie in [0, 1]");
        }
        Ok(())
    }
}
