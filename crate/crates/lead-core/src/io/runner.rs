//! The experiment runner: builds the configured agent, runs the
//! episodes (optionally across threads), writes one transcript file per
//! episode plus the summary tables and a manifest, and returns the
//! graded records.
//!
//! Reproducibility: each episode's mock agent is seeded from the master
//! seed and the episode id, and every artifact except the manifest
//! timestamp is a pure function of the config. Runs with the same config
//! and seed produce byte-identical transcripts and summaries, at any
//! parallelism.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::agents::{EndpointAgent, MockAgent, OracleAgent, StepAgent};
use crate::executors::{run_episode, EpisodeRecord, Outcome};
use crate::io::config::{AgentKind, ExperimentConfig};
use crate::io::summary::{summarize, write_summary, SummaryTables};
use crate::io::transcript::{entries_from_record, write_transcript, PromptMode};
use crate::io::HarnessError;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTotals {
    pub episodes: u64,
    pub successes: u64,
    pub agent_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Everything needed to reproduce and audit a run. Written as plain TOML
/// next to the transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub created_unix: u64,
    pub source_revision: String,
    pub agent_label: String,
    pub totals: RunTotals,
    pub config: ExperimentConfig,
}

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TRANSCRIPT_DIR: &str = "transcripts";
pub const SUMMARY_DIR: &str = "summary";

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<EpisodeRecord>,
    pub summary: SummaryTables,
    pub manifest: RunManifest,
}

enum RunAgent {
    Shared(Box<dyn StepAgent>),
    MockPerEpisode,
}

fn run_label(config: &ExperimentConfig) -> String {
    match config.agent.kind {
        AgentKind::Oracle => "oracle".to_string(),
        AgentKind::Mock => format!("mock[seed={}]", config.experiment.seed),
        AgentKind::Endpoint => config
            .agent
            .endpoint
            .as_ref()
            .map(|e| e.model.clone())
            .unwrap_or_else(|| "endpoint".to_string()),
    }
}

fn build_agent(config: &ExperimentConfig) -> Result<RunAgent, HarnessError> {
    let plan = &config.experiment;
    Ok(match config.agent.kind {
        AgentKind::Oracle => {
            let mut oracle = OracleAgent::new(plan.puzzle, plan.n)
                .map_err(crate::executors::ExecError::Puzzle)?;
            if let Some(cap) = config.agent.oracle.as_ref().and_then(|o| o.max_steps_per_call) {
                oracle = oracle.with_max_steps_per_call(cap);
            }
            RunAgent::Shared(Box::new(oracle))
        }
        AgentKind::Mock => RunAgent::MockPerEpisode,
        AgentKind::Endpoint => {
            let endpoint = config
                .agent
                .endpoint
                .clone()
                .expect("validated: endpoint config present");
            RunAgent::Shared(Box::new(EndpointAgent::new(endpoint)?))
        }
    })
}

/// One agent instance for standalone use (profiling, ad-hoc calls).
/// Mock agents are seeded with the plan seed directly.
pub fn single_agent(config: &ExperimentConfig) -> Result<Box<dyn StepAgent>, HarnessError> {
    Ok(match build_agent(config)? {
        RunAgent::Shared(agent) => agent,
        RunAgent::MockPerEpisode => {
            let profile = config
                .agent
                .mock
                .clone()
                .unwrap_or_default()
                .to_profile(config.experiment.seed);
            Box::new(MockAgent::new(profile))
        }
    })
}

fn run_one(
    config: &ExperimentConfig,
    agent: &RunAgent,
    label: &str,
    episode_id: u64,
) -> Result<EpisodeRecord, HarnessError> {
    let plan = &config.experiment;
    let mut record = match agent {
        RunAgent::Shared(agent) => run_episode(
            agent.as_ref(),
            plan.puzzle,
            plan.n,
            &config.strategy,
            episode_id,
        )?,
        RunAgent::MockPerEpisode => {
            let profile = config
                .agent
                .mock
                .clone()
                .unwrap_or_default()
                .to_profile(derive_seed(plan.seed, episode_id));
            let agent = MockAgent::new(profile);
            run_episode(&agent, plan.puzzle, plan.n, &config.strategy, episode_id)?
        }
    };
    record.agent_label = label.to_string();
    Ok(record)
}

fn write_episode(dir: &Path, record: &EpisodeRecord) -> Result<(), HarnessError> {
    let entries = entries_from_record(record, PromptMode::TemplateHash);
    let path = dir.join(format!("episode_{:05}.jsonl", record.episode_id));
    let file = std::fs::File::create(path)?;
    write_transcript(std::io::BufWriter::new(file), &entries)?;
    Ok(())
}

/// Runs the configured experiment. With `out_dir` set, writes
/// `transcripts/episode_NNNNN.jsonl`, `summary/*.csv`, and
/// `manifest.toml` under it.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
    parallel: usize,
) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let plan = &config.experiment;
    let label = run_label(config);
    let agent = build_agent(config)?;
    let transcript_dir: Option<PathBuf> = match out_dir {
        Some(dir) => {
            let t = dir.join(TRANSCRIPT_DIR);
            std::fs::create_dir_all(&t)?;
            Some(t)
        }
        None => None,
    };

    let episodes = plan.episodes;
    let mut records: Vec<Option<EpisodeRecord>> = (0..episodes).map(|_| None).collect();
    if parallel <= 1 {
        for (id, slot) in records.iter_mut().enumerate() {
            let record = run_one(config, &agent, &label, id as u64)?;
            if let Some(dir) = &transcript_dir {
                write_episode(dir, &record)?;
            }
            *slot = Some(record);
        }
    } else {
        let next = Mutex::new(0u64);
        let results: Mutex<Vec<(u64, Result<EpisodeRecord, HarnessError>)>> =
            Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..parallel.min(episodes as usize).max(1) {
                scope.spawn(|| loop {
                    let id = {
                        let mut next = next.lock().unwrap();
                        if *next >= episodes {
                            return;
                        }
                        let id = *next;
                        *next += 1;
                        id
                    };
                    let result = run_one(config, &agent, &label, id).and_then(|record| {
                        if let Some(dir) = &transcript_dir {
                            write_episode(dir, &record)?;
                        }
                        Ok(record)
                    });
                    results.lock().unwrap().push((id, result));
                });
            }
        });
        for (id, result) in results.into_inner().unwrap() {
            records[id as usize] = Some(result?);
        }
    }
    let records: Vec<EpisodeRecord> = records
        .into_iter()
        .map(|r| r.expect("every episode id was claimed"))
        .collect();

    let mut totals = RunTotals {
        episodes,
        ..Default::default()
    };
    for r in &records {
        if r.outcome == Outcome::Success {
            totals.successes += 1;
        }
        totals.agent_calls += r.calls.agent_calls;
        for e in &r.exchanges {
            if let Some(u) = &e.usage {
                totals.prompt_tokens += u.prompt_tokens.unwrap_or(0);
                totals.completion_tokens += u.completion_tokens.unwrap_or(0);
            }
        }
    }
    let manifest = RunManifest {
        run_id: format!(
            "{}-{}-n{}-seed{}",
            config.strategy.strategy.name(),
            plan.puzzle.name(),
            plan.n,
            plan.seed
        ),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        source_revision: env!("CARGO_PKG_VERSION").to_string(),
        agent_label: label,
        totals,
        config: config.clone(),
    };

    let summary = summarize(&records);
    if let Some(dir) = out_dir {
        write_summary(&dir.join(SUMMARY_DIR), &summary)?;
        let manifest_text = toml::to_string_pretty(&manifest)
            .map_err(|e| HarnessError::Manifest(e.to_string()))?;
        std::fs::write(dir.join(MANIFEST_FILE), manifest_text)?;
    }
    Ok(RunOutcome {
        records,
        summary,
        manifest,
    })
}

/// Loads a previously written run: the manifest plus every episode
/// replayed from its transcript.
pub fn load_run(dir: &Path) -> Result<(RunManifest, Vec<EpisodeRecord>), HarnessError> {
    let manifest_text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: RunManifest =
        toml::from_str(&manifest_text).map_err(|e| HarnessError::Manifest(e.to_string()))?;
    let mut records = Vec::new();
    let transcript_dir = dir.join(TRANSCRIPT_DIR);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&transcript_dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    for path in paths {
        let entries = crate::io::transcript::read_transcript(&path)?;
        let record = crate::io::replay::replay(
            &entries,
            manifest.config.experiment.puzzle,
            manifest.config.experiment.n,
            &manifest.config.strategy,
            &manifest.agent_label,
        )?;
        records.push(record);
    }
    Ok((manifest, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config;

    fn mock_config(episodes: u64) -> ExperimentConfig {
        parse_config(&format!(
            r#"
[experiment]
puzzle = "checkers"
n = 3
episodes = {episodes}
seed = 42

[strategy]
kind = "atomic"

[agent]
kind = "mock"

[agent.mock]
hard_steps = [{{ step = 5, p = 0.5 }}]
"#
        ))
        .unwrap()
    }

    #[test]
    fn sequential_and_parallel_runs_are_byte_identical() {
        let config = mock_config(8);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&config, Some(a.path()), 1).unwrap();
        run_experiment(&config, Some(b.path()), 3).unwrap();
        for name in ["transcripts", "summary"] {
            let mut files_a: Vec<_> = std::fs::read_dir(a.path().join(name))
                .unwrap()
                .map(|e| e.unwrap().file_name())
                .collect();
            files_a.sort();
            for file in files_a {
                let pa = std::fs::read(a.path().join(name).join(&file)).unwrap();
                let pb = std::fs::read(b.path().join(name).join(&file)).unwrap();
                assert_eq!(pa, pb, "{name}/{file:?} differs");
            }
        }
    }

    #[test]
    fn manifest_snapshot_reproduces_the_run() {
        let config = mock_config(5);
        let a = tempfile::tempdir().unwrap();
        run_experiment(&config, Some(a.path()), 1).unwrap();
        let manifest: RunManifest = toml::from_str(
            &std::fs::read_to_string(a.path().join(MANIFEST_FILE)).unwrap(),
        )
        .unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&manifest.config, Some(b.path()), 1).unwrap();
        for entry in std::fs::read_dir(a.path().join(TRANSCRIPT_DIR)).unwrap() {
            let name = entry.unwrap().file_name();
            let pa = std::fs::read(a.path().join(TRANSCRIPT_DIR).join(&name)).unwrap();
            let pb = std::fs::read(b.path().join(TRANSCRIPT_DIR).join(&name)).unwrap();
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn load_run_round_trips_outcomes() {
        let config = mock_config(6);
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&config, Some(dir.path()), 1).unwrap();
        let (manifest, records) = load_run(dir.path()).unwrap();
        assert_eq!(manifest.totals.episodes, 6);
        assert_eq!(records.len(), 6);
        for (orig, loaded) in outcome.records.iter().zip(&records) {
            assert_eq!(orig.outcome, loaded.outcome);
            assert_eq!(orig.first_error_index, loaded.first_error_index);
            assert_eq!(orig.step_verdicts, loaded.step_verdicts);
        }
        assert_eq!(
            manifest.totals.successes,
            records
                .iter()
                .filter(|r| r.outcome == Outcome::Success)
                .count() as u64
        );
    }
}
