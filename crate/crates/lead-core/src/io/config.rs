//! Experiment configuration: a TOML file with three sections
//! (`[experiment]`, `[strategy]`, `[agent]`). Unknown keys are rejected;
//! validation failures carry the offending field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{EndpointConfig, MockErrorKind, MockErrorProfile};
use crate::executors::StrategyConfig;
use crate::puzzle::PuzzleKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid config: {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub puzzle: PuzzleKind,
    pub n: usize,
    #[serde(default = "default_episodes")]
    pub episodes: u64,
    #[serde(default)]
    pub seed: u64,
    /// Samples per trajectory step for the profiling command.
    #[serde(default = "default_samples_per_step")]
    pub samples_per_step: u64,
}

fn default_episodes() -> u64 {
    50
}
fn default_samples_per_step() -> u64 {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Oracle,
    Mock,
    Endpoint,
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(AgentKind::Oracle),
            "mock" => Ok(AgentKind::Mock),
            "endpoint" => Ok(AgentKind::Endpoint),
            other => Err(format!("unknown agent kind: {other}")),
        }
    }
}

/// A hard step of a mock profile as written in config files (TOML table
/// keys are strings, so the map form is spelled as a list).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardStep {
    pub step: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MockProfileFile {
    #[serde(default)]
    pub hard_steps: Vec<HardStep>,
    #[serde(default)]
    pub default_error: f64,
    #[serde(default)]
    pub error_kind: MockErrorKind,
    #[serde(default = "default_consistency")]
    pub consistency: f64,
    #[serde(default)]
    pub cond_error: f64,
}

fn default_consistency() -> f64 {
    1.0
}

impl MockProfileFile {
    /// The runtime profile, seeded per episode by the runner.
    pub fn to_profile(&self, seed: u64) -> MockErrorProfile {
        MockErrorProfile {
            per_step_error: self
                .hard_steps
                .iter()
                .map(|h| (h.step, h.p))
                .collect::<BTreeMap<_, _>>(),
            default_error: self.default_error,
            error_kind: self.error_kind,
            consistency: self.consistency,
            cond_error: self.cond_error,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleOptions {
    #[serde(default)]
    pub max_steps_per_call: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    #[serde(default)]
    pub oracle: Option<OracleOptions>,
    #[serde(default)]
    pub mock: Option<MockProfileFile>,
    #[serde(default)]
    pub endpoint: Option<EndpointConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentPlan,
    pub strategy: StrategyConfig,
    pub agent: AgentConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.experiment.n == 0 {
            return Err(invalid("experiment.n", "must be at least 1"));
        }
        if self.experiment.puzzle == PuzzleKind::Hanoi && self.experiment.n > 30 {
            return Err(invalid("experiment.n", "hanoi instances above n=30 are not supported"));
        }
        self.strategy
            .validate()
            .map_err(|m| invalid("strategy", m))?;
        match self.agent.kind {
            AgentKind::Oracle => {}
            AgentKind::Mock => {
                let profile = self.agent.mock.clone().unwrap_or_default();
                profile
                    .to_profile(0)
                    .validate()
                    .map_err(|m| invalid("agent.mock", m))?;
            }
            AgentKind::Endpoint => {
                let endpoint = self
                    .agent
                    .endpoint
                    .as_ref()
                    .ok_or_else(|| invalid("agent.endpoint", "required for kind = \"endpoint\""))?;
                endpoint
                    .validate()
                    .map_err(|m| invalid("agent.endpoint", m))?;
            }
        }
        Ok(())
    }
}

/// Reads and validates a config file, filling defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
