//! Run-time settings shared by the library front ends.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable overriding [`Config::precision_slack`].
pub const SLACK_ENV: &str = "MODFORMS_PRECISION_SLACK";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{SLACK_ENV} must be a nonnegative integer, got {0:?}")]
    BadSlack(String),
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
    #[error("unknown output format {0:?}, expected text or json")]
    BadFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            other => Err(ConfigError::BadFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    /// Extra coefficients computed past the Sturm-type bound.
    pub precision_slack: usize,
    pub output_format: OutputFormat,
    pub parallelism: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            precision_slack: 2,
            output_format: OutputFormat::Text,
            parallelism: 1,
        }
    }
}

impl Config {
    /// Defaults, with the slack taken from the environment when set.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        if let Ok(raw) = std::env::var(SLACK_ENV) {
            cfg.precision_slack = raw.trim().parse().map_err(|_| ConfigError::BadSlack(raw))?;
        }
        Ok(cfg)
    }

    pub fn with_parallelism(mut self, threads: usize) -> Result<Self, ConfigError> {
        if threads == 0 {
            return Err(ConfigError::ZeroParallelism);
        }
        self.parallelism = threads;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = Config::default();
        assert_eq!(c.precision_slack, 2);
        assert_eq!(c.output_format, OutputFormat::Text);
        assert!(c.clone().with_parallelism(0).is_err());
        assert_eq!(c.with_parallelism(4).unwrap().parallelism, 4);
    }

    #[test]
    fn formats_parse() {
        assert_eq!("json".parse::<OutputFormat>(), Ok(OutputFormat::Json));
        assert!("yaml".parse::<OutputFormat>().is_err());
    }
}
