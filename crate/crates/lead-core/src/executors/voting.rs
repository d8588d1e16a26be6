//! First-to-ahead-by-t voting and the ring of recent committed states
//! that lookahead rollouts anchor at.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::puzzle::{PuzzleState, Step};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VoteError {
    #[error("every sample in every round was discarded")]
    Exhausted,
}

/// Vote counts over canonical candidate keys. `total_votes` counts
/// accepted samples; discarded (malformed) samples are tracked apart.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VoteTally {
    pub counts: BTreeMap<String, u32>,
    #[serde(skip)]
    representatives: BTreeMap<String, Step>,
    pub rounds_used: u32,
    pub total_votes: u32,
    pub discarded: u32,
    pub margin_not_reached: bool,
}

impl VoteTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: String, step: Step) {
        *self.counts.entry(key.clone()).or_insert(0) += 1;
        self.representatives.entry(key).or_insert(step);
        self.total_votes += 1;
    }

    /// Leader and runner-up counts. Ties on count resolve to the
    /// lexicographically smallest key, which `BTreeMap` iteration
    /// yields first.
    fn leader(&self) -> Option<(&String, u32, u32)> {
        let mut best: Option<(&String, u32)> = None;
        let mut second = 0;
        for (key, &count) in &self.counts {
            match best {
                Some((_, best_count)) if count > best_count => {
                    second = best_count;
                    best = Some((key, count));
                }
                Some((_, best_count)) => second = second.max(count.min(best_count)),
                None => best = Some((key, count)),
            }
        }
        best.map(|(key, count)| (key, count, second))
    }

    /// The winner once its lead over every rival reaches `t`.
    pub fn winner_with_margin(&self, t: usize) -> Option<Step> {
        let (key, count, second) = self.leader()?;
        (count >= second + t as u32).then(|| self.representatives[key].clone())
    }

    /// Plurality winner regardless of margin.
    pub fn plurality(&self) -> Option<Step> {
        let (key, _, _) = self.leader()?;
        Some(self.representatives[key].clone())
    }
}

/// Draws samples until one candidate leads every other by at least `t`
/// votes, checking after each sample. A round is up to `batch` samples;
/// after `max_rounds` rounds the plurality leader wins with
/// `margin_not_reached` set. Samples of `None` are discarded. Seed votes
/// (when the base predictions are configured to count) enter the tally
/// before sampling starts.
pub fn vote_first_to_ahead<F>(
    mut sampler: F,
    t: usize,
    batch: usize,
    max_rounds: usize,
    seed_votes: &[(String, Step)],
) -> Result<(Step, VoteTally), VoteError>
where
    F: FnMut() -> Option<(String, Step)>,
{
    let mut tally = VoteTally::new();
    for (key, step) in seed_votes {
        tally.add(key.clone(), step.clone());
    }
    if let Some(winner) = tally.winner_with_margin(t) {
        return Ok((winner, tally));
    }
    for round in 0..max_rounds {
        tally.rounds_used = round as u32 + 1;
        for _ in 0..batch {
            match sampler() {
                Some((key, step)) => {
                    tally.add(key, step);
                    if let Some(winner) = tally.winner_with_margin(t) {
                        return Ok((winner, tally));
                    }
                }
                None => tally.discarded += 1,
            }
        }
    }
    tally.margin_not_reached = true;
    match tally.plurality() {
        Some(winner) => Ok((winner, tally)),
        None => Err(VoteError::Exhausted),
    }
}

/// Ring of the last `h` committed pre-step states. Entry `j` is the
/// state the episode was in before step `i - j`, where `i` is the step
/// currently being decided.
#[derive(Debug, Clone)]
pub struct CommitBuffer {
    cap: usize,
    entries: VecDeque<(usize, PuzzleState)>,
}

impl CommitBuffer {
    pub fn new(cap: usize) -> Self {
        CommitBuffer {
            cap: cap.max(1),
            entries: VecDeque::new(),
        }
    }

    /// Called when step `index` starts, with the state it starts from.
    pub fn begin_step(&mut self, index: usize, pre_state: PuzzleState) {
        self.entries.push_front((index, pre_state));
        self.entries.truncate(self.cap);
    }

    /// `(step index, pre-state)` for anchor offset `j`.
    pub fn anchor(&self, j: usize) -> Option<&(usize, PuzzleState)> {
        self.entries.get(j)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The prediction a rollout anchored before step `anchor_index` implies
/// for step `target_index`, when the rollout reaches that far.
pub fn extract_candidate(
    rollout: &[Step],
    anchor_index: usize,
    target_index: usize,
) -> Option<&Step> {
    rollout.get(target_index.checked_sub(anchor_index)?)
}
