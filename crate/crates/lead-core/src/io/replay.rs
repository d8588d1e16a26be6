//! Rebuilds a graded episode from its transcript. Committed steps come
//! from the commit entries and are re-graded from scratch, so verdicts
//! depend only on the recorded raw data and the current grading code.

use thiserror::Error;

use crate::executors::{
    grade_episode, CallStats, EpisodeRecord, Exchange, FailReason, Outcome, Phase, Strategy,
    StrategyConfig, TerminalFailure,
};
use crate::io::transcript::TranscriptEntry;
use crate::listing::ParseStatus;
use crate::puzzle::PuzzleKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("transcript is incomplete: {0}")]
    IncompleteTranscript(String),
}

/// Re-grades one episode's transcript. The agent label, puzzle, size and
/// strategy config come from the run manifest.
pub fn replay(
    entries: &[TranscriptEntry],
    kind: PuzzleKind,
    n: usize,
    cfg: &StrategyConfig,
    agent_label: &str,
) -> Result<EpisodeRecord, ReplayError> {
    if entries.is_empty() {
        return Err(ReplayError::IncompleteTranscript(
            "no entries for the episode".to_string(),
        ));
    }
    let episode_id = entries[0].episode_id;
    if entries.iter().any(|e| e.episode_id != episode_id) {
        return Err(ReplayError::IncompleteTranscript(
            "entries from multiple episodes in one transcript".to_string(),
        ));
    }

    let mut committed = Vec::new();
    let mut exchanges = Vec::new();
    let mut calls = CallStats::default();
    let mut last_commit_position = None;
    for (position, entry) in entries.iter().enumerate() {
        if entry.phase == Phase::Commit {
            let step = entry.parsed_steps.first().cloned().ok_or_else(|| {
                ReplayError::IncompleteTranscript(format!(
                    "commit entry for step {} carries no step",
                    entry.step_index
                ))
            })?;
            committed.push(step);
            last_commit_position = Some(position);
        } else {
            calls.agent_calls += 1;
            if entry.parse_status == ParseStatus::Malformed {
                calls.malformed += 1;
            } else {
                calls.parsed_ok += 1;
            }
        }
        exchanges.push(Exchange {
            step_index: entry.step_index,
            phase: entry.phase,
            variant: None,
            anchor_index: entry.anchor_index,
            anchor_state: None,
            depth: 0,
            attempt: 0,
            raw_text: entry.raw_text.clone(),
            parsed: entry.parsed_steps.clone(),
            parse_status: entry.parse_status,
            prefix_consistent: entry.prefix_consistent,
            latency_ms: entry.latency_ms,
            usage: entry.usage,
        });
    }

    // Agent exchanges after the last commit mean the episode died trying
    // to decide the next step.
    let trailing_failure = {
        let tail_has_calls = match last_commit_position {
            Some(pos) => entries[pos + 1..].iter().any(|e| e.phase != Phase::Commit),
            None => entries.iter().any(|e| e.phase != Phase::Commit),
        };
        let claimed_goal = committed
            .last()
            .is_some_and(|s| s.state.is_goal(n));
        if tail_has_calls && !claimed_goal {
            let reason = match cfg.strategy {
                Strategy::AtomicVoted | Strategy::Lead => FailReason::VotesExhausted,
                Strategy::IterativeRestart => FailReason::NoProgress,
                _ => FailReason::ParseExhausted,
            };
            Some(TerminalFailure {
                step_index: committed.len(),
                reason,
            })
        } else {
            None
        }
    };
    // Trailing calls after reaching the claimed goal are benign; a
    // missing goal with a full budget means the budget stopped the run.
    let budget = cfg.budget(kind, n);
    let budget_exceeded = committed.len() >= budget
        && !committed.last().is_some_and(|s| s.state.is_goal(n));

    let record = EpisodeRecord {
        episode_id,
        agent_label: agent_label.to_string(),
        kind,
        n,
        config: cfg.clone(),
        committed,
        tallies: Vec::new(),
        exchanges,
        outcome: Outcome::Failure,
        budget_exceeded,
        terminal_failure: trailing_failure,
        step_verdicts: Vec::new(),
        first_error_index: None,
        calls,
    };
    Ok(grade_episode(record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MockAgent, MockErrorProfile, OracleAgent};
    use crate::executors::{run_episode, StepVerdict};
    use crate::io::transcript::{entries_from_record, PromptMode};
    use crate::puzzle::{Cell, CheckersBoard, PuzzleState};

    fn round_trip(record: &EpisodeRecord) -> EpisodeRecord {
        let entries = entries_from_record(record, PromptMode::TemplateHash);
        replay(
            &entries,
            record.kind,
            record.n,
            &record.config,
            &record.agent_label,
        )
        .unwrap()
    }

    #[test]
    fn oracle_episode_replays_to_success() {
        let agent = OracleAgent::new(PuzzleKind::Checkers, 3).unwrap();
        let record = run_episode(
            &agent,
            PuzzleKind::Checkers,
            3,
            &StrategyConfig::new(Strategy::Atomic),
            0,
        )
        .unwrap();
        let replayed = round_trip(&record);
        assert_eq!(replayed.outcome, Outcome::Success);
        assert_eq!(replayed.step_verdicts, record.step_verdicts);
        assert_eq!(replayed.first_error_index, record.first_error_index);
    }

    #[test]
    fn verdicts_survive_the_round_trip_for_failures() {
        let profile = MockErrorProfile {
            per_step_error: std::collections::BTreeMap::from([(3usize, 1.0)]),
            seed: 13,
            ..Default::default()
        };
        let agent = MockAgent::new(profile);
        let record = run_episode(
            &agent,
            PuzzleKind::Checkers,
            4,
            &StrategyConfig::new(Strategy::Atomic),
            2,
        )
        .unwrap();
        assert_eq!(record.outcome, Outcome::Failure);
        let replayed = round_trip(&record);
        assert_eq!(replayed.outcome, record.outcome);
        assert_eq!(replayed.step_verdicts, record.step_verdicts);
        assert_eq!(replayed.first_error_index, record.first_error_index);
        assert_eq!(replayed.budget_exceeded, record.budget_exceeded);
        assert_eq!(replayed.terminal_failure, record.terminal_failure);
    }

    #[test]
    fn tampering_with_a_claimed_state_flips_the_verdict() {
        let agent = OracleAgent::new(PuzzleKind::Checkers, 2).unwrap();
        let record = run_episode(
            &agent,
            PuzzleKind::Checkers,
            2,
            &StrategyConfig::new(Strategy::Atomic),
            0,
        )
        .unwrap();
        let mut entries = entries_from_record(&record, PromptMode::TemplateHash);
        // Corrupt the claimed state inside the third commit entry.
        let target = entries
            .iter_mut()
            .filter(|e| e.phase == Phase::Commit)
            .nth(2)
            .unwrap();
        let bad = PuzzleState::Checkers(CheckersBoard::from_cells(vec![
            Cell::Red,
            Cell::Empty,
            Cell::Blue,
        ]));
        target.parsed_steps[0].state = bad;
        let replayed = replay(&entries, record.kind, record.n, &record.config, "oracle").unwrap();
        assert_eq!(replayed.outcome, Outcome::Failure);
        assert_eq!(replayed.first_error_index, Some(2));
        assert_eq!(replayed.step_verdicts[2], StepVerdict::MoveExecution);
    }

    #[test]
    fn malformed_single_shot_replays_as_parse_failure() {
        use crate::agents::ScriptedAgent;
        use crate::agents::{ParseStatus, RolloutResponse};
        let agent = ScriptedAgent::new(vec![RolloutResponse {
            steps: Vec::new(),
            raw_text: "I cannot".to_string(),
            parse_status: ParseStatus::Malformed,
            usage: None,
            latency_ms: None,
        }]);
        let record = run_episode(
            &agent,
            PuzzleKind::Checkers,
            2,
            &StrategyConfig::new(Strategy::SingleShot),
            0,
        )
        .unwrap();
        assert_eq!(record.first_error_index, Some(0));
        let replayed = round_trip(&record);
        assert_eq!(replayed.outcome, Outcome::Failure);
        assert_eq!(replayed.first_error_index, Some(0));
        assert_eq!(
            replayed.terminal_failure.map(|t| t.step_index),
            Some(0)
        );
    }

    #[test]
    fn empty_transcript_is_incomplete() {
        assert!(matches!(
            replay(
                &[],
                PuzzleKind::Checkers,
                2,
                &StrategyConfig::new(Strategy::Atomic),
                "oracle"
            ),
            Err(ReplayError::IncompleteTranscript(_))
        ));
    }
}
