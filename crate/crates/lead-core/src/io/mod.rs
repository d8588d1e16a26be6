//! Configuration, persistence, replay, and experiment orchestration.

pub mod config;
pub mod replay;
pub mod runner;
pub mod summary;
pub mod transcript;

use thiserror::Error;

pub use config::{
    load_config, parse_config, AgentConfig, AgentKind, ConfigError, ExperimentConfig,
    ExperimentPlan, HardStep, MockProfileFile, OracleOptions,
};
pub use replay::{replay, ReplayError};
pub use runner::{load_run, run_experiment, single_agent, RunManifest, RunOutcome, RunTotals};
pub use summary::{summarize, write_summary, SummaryTables};
pub use transcript::{
    entries_from_record, read_transcript, write_transcript, PromptMode, PromptRecord,
    TranscriptEntry, TranscriptError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Exec(#[from] crate::executors::ExecError),
    #[error(transparent)]
    Agent(#[from] crate::agents::AgentError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
