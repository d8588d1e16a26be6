//! Execution strategies over a step agent.
//!
//! All strategies share the same commit discipline: a committed step is
//! never revised. In the default `propagate` commit mode the agent's
//! claimed state is fed forward even when wrong, exactly as an
//! uncorrected run would behave, and truth is established only by replay
//! grading at the end. `strict_halt` stops the episode at the first
//! invalid transition instead, which is cheaper when profiling.

pub mod grade;
pub mod voting;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    AgentError, ParseStatus, PromptVariant, RolloutRequest, RolloutResponse, StepAgent,
};
use crate::listing::canonical_key;
use crate::puzzle::{PuzzleError, PuzzleKind, PuzzleState, Step};

pub use grade::{classify_step, grade_episode, ErrorType, StepVerdict};
pub use voting::{extract_candidate, vote_first_to_ahead, CommitBuffer, VoteError, VoteTally};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    SingleShot,
    Curriculum,
    IterativeRestart,
    Atomic,
    AtomicVoted,
    Lookahead,
    Lead,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::SingleShot => "single_shot",
            Strategy::Curriculum => "curriculum",
            Strategy::IterativeRestart => "iterative_restart",
            Strategy::Atomic => "atomic",
            Strategy::AtomicVoted => "atomic_voted",
            Strategy::Lookahead => "lookahead",
            Strategy::Lead => "lead",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitMode {
    #[default]
    Propagate,
    StrictHalt,
}

/// Knobs shared by all strategies. Defaults follow the standardized
/// parameter set (`v = 8`, `k = 8`, `t = 3`, `h = 3`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    #[serde(rename = "kind")]
    pub strategy: Strategy,
    /// One-step base predictions per step (`v`).
    #[serde(default = "default_base_votes")]
    pub base_votes: usize,
    /// Rollout depth (`k`).
    #[serde(default = "default_lookahead_depth")]
    pub lookahead_depth: usize,
    /// Recent anchors that vote on the current step (`h`), at most `k`.
    #[serde(default = "default_history_window")]
    pub history_window: usize,
    /// First-to-ahead margin (`t`).
    #[serde(default = "default_margin")]
    pub margin: usize,
    /// Samples added per voting round per anchor.
    #[serde(default = "default_vote_batch")]
    pub vote_batch: usize,
    #[serde(default = "default_max_vote_rounds")]
    pub max_vote_rounds: usize,
    /// Rounds for iterative restart.
    #[serde(default = "default_max_restarts")]
    pub max_restarts: usize,
    /// Committed-step cap; defaults to the optimal length plus two.
    #[serde(default)]
    pub step_budget: Option<usize>,
    #[serde(default)]
    pub commit_mode: CommitMode,
    /// When set, the disagreeing base predictions seed the lookahead
    /// tally instead of being discarded.
    #[serde(default)]
    pub seed_base_votes: bool,
    /// Extra attempts after a malformed reply before giving up on a
    /// sample.
    #[serde(default = "default_resample_cap")]
    pub resample_cap: usize,
}

fn default_base_votes() -> usize {
    8
}
fn default_lookahead_depth() -> usize {
    8
}
fn default_history_window() -> usize {
    3
}
fn default_margin() -> usize {
    3
}
fn default_vote_batch() -> usize {
    1
}
fn default_max_vote_rounds() -> usize {
    16
}
fn default_max_restarts() -> usize {
    8
}
fn default_resample_cap() -> usize {
    3
}

impl StrategyConfig {
    pub fn new(strategy: Strategy) -> Self {
        StrategyConfig {
            strategy,
            base_votes: default_base_votes(),
            lookahead_depth: default_lookahead_depth(),
            history_window: default_history_window(),
            margin: default_margin(),
            vote_batch: default_vote_batch(),
            max_vote_rounds: default_max_vote_rounds(),
            max_restarts: default_max_restarts(),
            step_budget: None,
            commit_mode: CommitMode::Propagate,
            seed_base_votes: false,
            resample_cap: default_resample_cap(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.history_window == 0 || self.history_window > self.lookahead_depth {
            return Err(format!(
                "history_window must satisfy 1 <= h <= lookahead_depth (h={}, k={})",
                self.history_window, self.lookahead_depth
            ));
        }
        if self.margin == 0 {
            return Err("margin must be at least 1".into());
        }
        if self.base_votes == 0 {
            return Err("base_votes must be at least 1".into());
        }
        if self.lookahead_depth == 0 {
            return Err("lookahead_depth must be at least 1".into());
        }
        if self.vote_batch == 0 || self.max_vote_rounds == 0 {
            return Err("vote_batch and max_vote_rounds must be at least 1".into());
        }
        if self.max_restarts == 0 {
            return Err("max_restarts must be at least 1".into());
        }
        Ok(())
    }

    /// Committed-step cap for an instance: optimal length plus slack for
    /// benign goal-claim bookkeeping, unless pinned explicitly.
    pub fn budget(&self, kind: PuzzleKind, n: usize) -> usize {
        self.step_budget.unwrap_or(kind.optimal_len(n) + 2)
    }
}

/// Where in an episode an agent exchange happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    BaseVote,
    LookaheadVote,
    Commit,
    RestartRound,
    SingleShot,
}

/// One agent exchange (or commit marker) in an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub step_index: usize,
    pub phase: Phase,
    /// Absent on commit markers, which involve no agent call.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variant: Option<crate::agents::PromptVariant>,
    pub anchor_index: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub anchor_state: Option<PuzzleState>,
    pub depth: usize,
    pub attempt: u64,
    pub raw_text: String,
    pub parsed: Vec<Step>,
    pub parse_status: ParseStatus,
    /// For lookahead votes: whether the rollout's steps before the
    /// target offset match the committed history.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prefix_consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latency_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub usage: Option<crate::agents::Usage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    /// No parseable candidate within the resample cap.
    ParseExhausted,
    /// Voting discarded every sample.
    VotesExhausted,
    /// Two consecutive restart rounds yielded no steps.
    NoProgress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalFailure {
    pub step_index: usize,
    pub reason: FailReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CallStats {
    pub agent_calls: u64,
    pub parsed_ok: u64,
    pub malformed: u64,
    pub votes_cast: u64,
}

/// The full trace of one strategy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_id: u64,
    pub agent_label: String,
    pub kind: PuzzleKind,
    pub n: usize,
    pub config: StrategyConfig,
    pub committed: Vec<Step>,
    /// Parallel to `committed`; `None` for uncontested steps.
    pub tallies: Vec<Option<VoteTally>>,
    pub exchanges: Vec<Exchange>,
    pub outcome: Outcome,
    pub budget_exceeded: bool,
    pub terminal_failure: Option<TerminalFailure>,
    pub step_verdicts: Vec<StepVerdict>,
    pub first_error_index: Option<usize>,
    pub calls: CallStats,
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error("invalid strategy config: {0}")]
    Config(String),
}

struct Episode<'a> {
    agent: &'a dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    cfg: &'a StrategyConfig,
    budget: usize,
    attempt: u64,
    committed: Vec<Step>,
    tallies: Vec<Option<VoteTally>>,
    exchanges: Vec<Exchange>,
    calls: CallStats,
    /// Replayed true state; `None` once a committed move stopped being
    /// executable on it.
    true_state: Option<PuzzleState>,
    halted: bool,
    budget_exceeded: bool,
    terminal_failure: Option<TerminalFailure>,
}

impl<'a> Episode<'a> {
    fn new(
        agent: &'a dyn StepAgent,
        kind: PuzzleKind,
        n: usize,
        cfg: &'a StrategyConfig,
    ) -> Result<Self, ExecError> {
        cfg.validate().map_err(ExecError::Config)?;
        if cfg.budget(kind, n) < kind.optimal_len(n) {
            return Err(ExecError::Config(format!(
                "step_budget {} is below the optimal length {}",
                cfg.budget(kind, n),
                kind.optimal_len(n)
            )));
        }
        Ok(Episode {
            agent,
            kind,
            n,
            cfg,
            budget: cfg.budget(kind, n),
            attempt: 0,
            committed: Vec::new(),
            tallies: Vec::new(),
            exchanges: Vec::new(),
            calls: CallStats::default(),
            true_state: Some(kind.initial(n)?),
            halted: false,
            budget_exceeded: false,
            terminal_failure: None,
        })
    }

    fn call(
        &mut self,
        variant: PromptVariant,
        anchor_state: &PuzzleState,
        anchor_index: usize,
        depth: usize,
        phase: Phase,
        step_index: usize,
    ) -> Result<RolloutResponse, AgentError> {
        let attempt = self.attempt;
        self.attempt += 1;
        let request = RolloutRequest {
            kind: self.kind,
            n: self.n,
            anchor_state: anchor_state.clone(),
            anchor_index,
            depth,
            variant,
            attempt,
        };
        let response = self.agent.rollout(&request)?;
        self.calls.agent_calls += 1;
        if response.parse_status == ParseStatus::Malformed {
            self.calls.malformed += 1;
        } else {
            self.calls.parsed_ok += 1;
        }
        self.exchanges.push(Exchange {
            step_index,
            phase,
            variant: Some(variant),
            anchor_index,
            anchor_state: Some(request.anchor_state.clone()),
            depth,
            attempt,
            raw_text: response.raw_text.clone(),
            parsed: response.steps.clone(),
            parse_status: response.parse_status,
            prefix_consistent: None,
            latency_ms: response.latency_ms,
            usage: response.usage,
        });
        Ok(response)
    }

    /// One depth-1 prediction, resampling malformed replies up to the
    /// configured cap.
    fn sample_step(
        &mut self,
        state: &PuzzleState,
        index: usize,
        phase: Phase,
    ) -> Result<Option<Step>, AgentError> {
        for _ in 0..=self.cfg.resample_cap {
            let response = self.call(PromptVariant::Atomic, state, index, 1, phase, index)?;
            if let Some(step) = response.steps.first() {
                if response.parse_status != ParseStatus::Malformed {
                    return Ok(Some(step.clone()));
                }
            }
        }
        Ok(None)
    }

    /// One depth-k rollout, resampling malformed replies up to the cap.
    fn sample_rollout(
        &mut self,
        state: &PuzzleState,
        anchor_index: usize,
        step_index: usize,
    ) -> Result<Option<Vec<Step>>, AgentError> {
        for _ in 0..=self.cfg.resample_cap {
            let response = self.call(
                PromptVariant::Lookahead,
                state,
                anchor_index,
                self.cfg.lookahead_depth,
                Phase::LookaheadVote,
                step_index,
            )?;
            if response.parse_status != ParseStatus::Malformed {
                return Ok(Some(response.steps));
            }
        }
        Ok(None)
    }

    /// Records the commit and, in strict-halt mode, stops the episode on
    /// the first transition that does not replay. Returns whether the
    /// episode continues.
    fn commit(&mut self, step: Step, tally: Option<VoteTally>) -> bool {
        let index = self.committed.len();
        self.exchanges.push(Exchange {
            step_index: index,
            phase: Phase::Commit,
            variant: None,
            anchor_index: index,
            anchor_state: None,
            depth: 0,
            attempt: 0,
            raw_text: String::new(),
            parsed: vec![step.clone()],
            parse_status: ParseStatus::Ok,
            prefix_consistent: None,
            latency_ms: None,
            usage: None,
        });
        let true_next = self
            .true_state
            .as_ref()
            .and_then(|s| s.apply(&step.mv).ok());
        if self.cfg.commit_mode == CommitMode::StrictHalt
            && true_next.as_ref() != Some(&step.state)
        {
            self.halted = true;
        }
        self.true_state = true_next;
        self.committed.push(step);
        self.tallies.push(tally);
        !self.halted
    }

    fn fail(&mut self, step_index: usize, reason: FailReason) {
        self.terminal_failure = Some(TerminalFailure { step_index, reason });
    }

    /// True when the budget stops the episode before the claimed state
    /// reaches the goal.
    fn out_of_budget(&mut self, claimed: &PuzzleState) -> bool {
        if self.committed.len() >= self.budget && !claimed.is_goal(self.n) {
            self.budget_exceeded = true;
            return true;
        }
        false
    }

    fn finish(self, episode_id: u64) -> EpisodeRecord {
        let record = EpisodeRecord {
            episode_id,
            agent_label: self.agent.label(),
            kind: self.kind,
            n: self.n,
            config: self.cfg.clone(),
            committed: self.committed,
            tallies: self.tallies,
            exchanges: self.exchanges,
            outcome: Outcome::Failure,
            budget_exceeded: self.budget_exceeded,
            terminal_failure: self.terminal_failure,
            step_verdicts: Vec::new(),
            first_error_index: None,
            calls: self.calls,
        };
        grade_episode(record)
    }
}

/// Runs one episode of whichever strategy the config names.
pub fn run_episode(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    cfg: &StrategyConfig,
    episode_id: u64,
) -> Result<EpisodeRecord, ExecError> {
    let mut ep = Episode::new(agent, kind, n, cfg)?;
    match cfg.strategy {
        Strategy::SingleShot => single_shot_loop(&mut ep, false)?,
        Strategy::Curriculum => single_shot_loop(&mut ep, true)?,
        Strategy::IterativeRestart => iterative_loop(&mut ep)?,
        Strategy::Atomic => atomic_loop(&mut ep)?,
        Strategy::AtomicVoted => voted_loop(&mut ep, false)?,
        Strategy::Lookahead => lookahead_loop(&mut ep)?,
        Strategy::Lead => voted_loop(&mut ep, true)?,
    }
    Ok(ep.finish(episode_id))
}

/// One agent call for the whole solution. With the curriculum flag the
/// prompt asks for a warm-up instance first and only the target-task
/// steps are graded.
pub fn run_single_shot(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    curriculum: bool,
) -> Result<EpisodeRecord, ExecError> {
    let strategy = if curriculum {
        Strategy::Curriculum
    } else {
        Strategy::SingleShot
    };
    run_episode(agent, kind, n, &StrategyConfig::new(strategy), 0)
}

pub fn run_iterative_restart(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    cfg: &StrategyConfig,
) -> Result<EpisodeRecord, ExecError> {
    run_episode(agent, kind, n, &with_strategy(cfg, Strategy::IterativeRestart), 0)
}

pub fn run_atomic(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    cfg: &StrategyConfig,
) -> Result<EpisodeRecord, ExecError> {
    run_episode(agent, kind, n, &with_strategy(cfg, Strategy::Atomic), 0)
}

pub fn run_atomic_voted(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    cfg: &StrategyConfig,
) -> Result<EpisodeRecord, ExecError> {
    run_episode(agent, kind, n, &with_strategy(cfg, Strategy::AtomicVoted), 0)
}

pub fn run_lookahead(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    cfg: &StrategyConfig,
) -> Result<EpisodeRecord, ExecError> {
    run_episode(agent, kind, n, &with_strategy(cfg, Strategy::Lookahead), 0)
}

pub fn run_lead(
    agent: &dyn StepAgent,
    kind: PuzzleKind,
    n: usize,
    cfg: &StrategyConfig,
) -> Result<EpisodeRecord, ExecError> {
    run_episode(agent, kind, n, &with_strategy(cfg, Strategy::Lead), 0)
}

fn with_strategy(cfg: &StrategyConfig, strategy: Strategy) -> StrategyConfig {
    let mut cfg = cfg.clone();
    cfg.strategy = strategy;
    cfg
}

fn single_shot_loop(ep: &mut Episode<'_>, curriculum: bool) -> Result<(), ExecError> {
    let initial = ep.kind.initial(ep.n)?;
    let variant = if curriculum {
        PromptVariant::Curriculum
    } else {
        PromptVariant::SingleShot
    };
    let depth = ep.kind.optimal_len(ep.n);
    let response = ep.call(variant, &initial, 0, depth, Phase::SingleShot, 0)?;
    if response.parse_status == ParseStatus::Malformed {
        ep.fail(0, FailReason::ParseExhausted);
        return Ok(());
    }
    let steps = if curriculum {
        target_portion(ep.kind, ep.n, response.steps)
    } else {
        response.steps
    };
    for step in steps.into_iter().take(ep.budget) {
        if !ep.commit(step, None) {
            break;
        }
    }
    if ep.committed.len() >= ep.budget {
        let claimed = ep.committed.last().unwrap().state.clone();
        ep.out_of_budget(&claimed);
    }
    Ok(())
}

/// Splits a curriculum reply: steps after the warm-up goal (or, if the
/// warm-up never completed, after the last warm-up-sized state) belong
/// to the target task.
fn target_portion(kind: PuzzleKind, n: usize, steps: Vec<Step>) -> Vec<Step> {
    let warmup_goal = kind.goal(2).ok();
    if let Some(goal) = warmup_goal {
        if let Some(pos) = steps.iter().rposition(|s| s.state == goal) {
            return steps.into_iter().skip(pos + 1).collect();
        }
    }
    let target_size = |s: &Step| match &s.state {
        PuzzleState::Checkers(b) => b.len() == 2 * n + 1,
        PuzzleState::Hanoi(h) => h.disk_count() == n,
    };
    steps.into_iter().skip_while(|s| !target_size(s)).collect()
}

fn iterative_loop(ep: &mut Episode<'_>) -> Result<(), ExecError> {
    let mut claimed = ep.kind.initial(ep.n)?;
    let mut consecutive_empty = 0usize;
    for _round in 0..ep.cfg.max_restarts {
        if claimed.is_goal(ep.n) {
            return Ok(());
        }
        if ep.out_of_budget(&claimed) {
            return Ok(());
        }
        let index = ep.committed.len();
        let depth = ep.budget - index;
        let response = ep.call(
            PromptVariant::Iterative,
            &claimed,
            index,
            depth,
            Phase::RestartRound,
            index,
        )?;
        if response.steps.is_empty() {
            consecutive_empty += 1;
            if consecutive_empty >= 2 {
                ep.fail(index, FailReason::NoProgress);
                return Ok(());
            }
            continue;
        }
        consecutive_empty = 0;
        let room = ep.budget - ep.committed.len();
        for step in response.steps.into_iter().take(room) {
            claimed = step.state.clone();
            if !ep.commit(step, None) {
                return Ok(());
            }
        }
    }
    // Ran out of restart rounds; whatever was committed gets graded.
    let claimed_final = claimed;
    ep.out_of_budget(&claimed_final);
    Ok(())
}

fn atomic_loop(ep: &mut Episode<'_>) -> Result<(), ExecError> {
    let mut claimed = ep.kind.initial(ep.n)?;
    loop {
        if claimed.is_goal(ep.n) || ep.out_of_budget(&claimed) {
            return Ok(());
        }
        let index = ep.committed.len();
        match ep.sample_step(&claimed.clone(), index, Phase::BaseVote)? {
            Some(step) => {
                claimed = step.state.clone();
                if !ep.commit(step, None) {
                    return Ok(());
                }
            }
            None => {
                ep.fail(index, FailReason::ParseExhausted);
                return Ok(());
            }
        }
    }
}

fn lookahead_loop(ep: &mut Episode<'_>) -> Result<(), ExecError> {
    let mut claimed = ep.kind.initial(ep.n)?;
    loop {
        if claimed.is_goal(ep.n) || ep.out_of_budget(&claimed) {
            return Ok(());
        }
        let index = ep.committed.len();
        let rollout = ep.sample_rollout(&claimed.clone(), index, index)?;
        match rollout.and_then(|steps| steps.into_iter().next()) {
            Some(first) => {
                claimed = first.state.clone();
                if !ep.commit(first, None) {
                    return Ok(());
                }
            }
            None => {
                ep.fail(index, FailReason::ParseExhausted);
                return Ok(());
            }
        }
    }
}

/// Shared loop of atomic-with-voting and LEAD. Both sample `v` one-step
/// predictions first and commit on unanimity. On disagreement,
/// atomic-with-voting keeps drawing one-step predictions, while LEAD
/// draws depth-k rollouts from the `h` most recent committed anchors and
/// extracts each rollout's implied prediction for the current step; both
/// feed first-to-ahead-by-t voting.
fn voted_loop(ep: &mut Episode<'_>, lookahead_window: bool) -> Result<(), ExecError> {
    let mut claimed = ep.kind.initial(ep.n)?;
    let mut buffer = CommitBuffer::new(ep.cfg.history_window);
    loop {
        if claimed.is_goal(ep.n) || ep.out_of_budget(&claimed) {
            return Ok(());
        }
        let index = ep.committed.len();
        buffer.begin_step(index, claimed.clone());

        let mut base: Vec<Option<Step>> = Vec::with_capacity(ep.cfg.base_votes);
        for _ in 0..ep.cfg.base_votes {
            base.push(ep.sample_step(&claimed.clone(), index, Phase::BaseVote)?);
        }
        let unanimous = base
            .first()
            .cloned()
            .flatten()
            .filter(|first| {
                base.iter()
                    .all(|s| s.as_ref().is_some_and(|s| s.same_prediction(first)))
            });
        let (step, tally) = match unanimous {
            Some(step) => (step, None),
            None => {
                let seed_votes: Vec<(String, Step)> = if ep.cfg.seed_base_votes {
                    base.iter()
                        .flatten()
                        .map(|s| (canonical_key(s), s.clone()))
                        .collect()
                } else {
                    Vec::new()
                };
                let outcome = if lookahead_window {
                    lead_vote(ep, &mut buffer, index, &seed_votes)?
                } else {
                    atomic_vote(ep, &claimed.clone(), index, &seed_votes)?
                };
                match outcome {
                    Ok((step, tally)) => (step, Some(tally)),
                    Err(VoteError::Exhausted) => {
                        ep.fail(index, FailReason::VotesExhausted);
                        return Ok(());
                    }
                }
            }
        };
        if let Some(t) = &tally {
            ep.calls.votes_cast += u64::from(t.total_votes);
        }
        claimed = step.state.clone();
        if !ep.commit(step, tally) {
            return Ok(());
        }
    }
}

fn atomic_vote(
    ep: &mut Episode<'_>,
    state: &PuzzleState,
    index: usize,
    seed_votes: &[(String, Step)],
) -> Result<Result<(Step, VoteTally), VoteError>, ExecError> {
    let (margin, batch, rounds) = (ep.cfg.margin, ep.cfg.vote_batch, ep.cfg.max_vote_rounds);
    let mut agent_err: Option<AgentError> = None;
    let result = vote_first_to_ahead(
        || match ep.sample_step(state, index, Phase::BaseVote) {
            Ok(Some(step)) => Some((canonical_key(&step), step)),
            Ok(None) => None,
            Err(e) => {
                agent_err = Some(e);
                None
            }
        },
        margin,
        batch,
        rounds,
        seed_votes,
    );
    if let Some(e) = agent_err {
        return Err(e.into());
    }
    Ok(result)
}

fn lead_vote(
    ep: &mut Episode<'_>,
    buffer: &mut CommitBuffer,
    index: usize,
    seed_votes: &[(String, Step)],
) -> Result<Result<(Step, VoteTally), VoteError>, ExecError> {
    let window = buffer.len();
    let anchors: Vec<(usize, PuzzleState)> = (0..window)
        .map(|j| buffer.anchor(j).cloned().expect("j < len"))
        .collect();
    let committed: Vec<Step> = ep.committed.clone();
    let (margin, batch, rounds) = (
        ep.cfg.margin,
        window * ep.cfg.vote_batch,
        ep.cfg.max_vote_rounds,
    );
    let mut agent_err: Option<AgentError> = None;
    let mut cursor = 0usize;
    let result = vote_first_to_ahead(
        || {
            let (anchor_index, anchor_state) = &anchors[cursor % window];
            cursor += 1;
            match ep.sample_rollout(anchor_state, *anchor_index, index) {
                Ok(Some(rollout)) => {
                    let candidate = extract_candidate(&rollout, *anchor_index, index).cloned();
                    // The rollout's earlier steps may disagree with the
                    // committed history; the vote still counts, but the
                    // mismatch is recorded for analysis.
                    let offset = index - anchor_index;
                    let consistent = rollout.len() >= offset
                        && rollout[..offset]
                            .iter()
                            .zip(&committed[*anchor_index..index])
                            .all(|(a, b)| a.same_prediction(b));
                    if let Some(exchange) = ep
                        .exchanges
                        .iter_mut()
                        .rev()
                        .find(|e| e.phase == Phase::LookaheadVote)
                    {
                        exchange.prefix_consistent = Some(consistent);
                    }
                    candidate.map(|step| (canonical_key(&step), step))
                }
                Ok(None) => None,
                Err(e) => {
                    agent_err = Some(e);
                    None
                }
            }
        },
        margin,
        // One rollout per window anchor per round, times the batch
        // multiplier.
        batch,
        rounds,
        seed_votes,
    );
    if let Some(e) = agent_err {
        return Err(e.into());
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MockAgent, MockErrorProfile, OracleAgent};

    #[test]
    fn oracle_runs_every_strategy_to_success() {
        for kind in [PuzzleKind::Checkers, PuzzleKind::Hanoi] {
            let n = 3;
            let agent = OracleAgent::new(kind, n).unwrap();
            for strategy in [
                Strategy::SingleShot,
                Strategy::IterativeRestart,
                Strategy::Atomic,
                Strategy::AtomicVoted,
                Strategy::Lookahead,
                Strategy::Lead,
            ] {
                let cfg = StrategyConfig::new(strategy);
                let record = run_episode(&agent, kind, n, &cfg, 0).unwrap();
                assert_eq!(
                    record.outcome,
                    Outcome::Success,
                    "{kind:?} {strategy:?} should succeed"
                );
                assert_eq!(record.committed.len(), kind.optimal_len(n));
                assert!(record.step_verdicts.iter().all(|v| *v == StepVerdict::Ok));
            }
        }
    }

    #[test]
    fn atomic_makes_one_call_per_step_and_lead_makes_v() {
        let n = 3;
        let agent = OracleAgent::new(PuzzleKind::Checkers, n).unwrap();
        let record = run_atomic(
            &agent,
            PuzzleKind::Checkers,
            n,
            &StrategyConfig::new(Strategy::Atomic),
        )
        .unwrap();
        let steps = PuzzleKind::Checkers.optimal_len(n) as u64;
        assert_eq!(record.calls.agent_calls, steps);
        assert_eq!(record.calls.parsed_ok, steps);

        let mut cfg = StrategyConfig::new(Strategy::Lead);
        cfg.base_votes = 4;
        let record = run_lead(&agent, PuzzleKind::Checkers, n, &cfg).unwrap();
        assert_eq!(record.calls.agent_calls, 4 * steps);
        assert_eq!(record.outcome, Outcome::Success);
    }

    #[test]
    fn forced_error_fails_at_that_step() {
        let profile = MockErrorProfile {
            per_step_error: std::collections::BTreeMap::from([(1, 1.0)]),
            consistency: 1.0,
            seed: 5,
            ..Default::default()
        };
        let agent = MockAgent::new(profile);
        let record = run_atomic(
            &agent,
            PuzzleKind::Checkers,
            4,
            &StrategyConfig::new(Strategy::Atomic),
        )
        .unwrap();
        assert_eq!(record.outcome, Outcome::Failure);
        assert_eq!(record.first_error_index, Some(1));
        assert_eq!(record.step_verdicts[1], StepVerdict::MoveExecution);
    }

    #[test]
    fn strict_halt_stops_at_the_first_bad_transition() {
        let profile = MockErrorProfile {
            per_step_error: std::collections::BTreeMap::from([(2, 1.0)]),
            seed: 9,
            ..Default::default()
        };
        let agent = MockAgent::new(profile);
        let mut cfg = StrategyConfig::new(Strategy::Atomic);
        cfg.commit_mode = CommitMode::StrictHalt;
        let record = run_atomic(&agent, PuzzleKind::Checkers, 4, &cfg).unwrap();
        assert_eq!(record.committed.len(), 3);
        assert_eq!(record.first_error_index, Some(2));
    }

    #[test]
    fn iterative_restart_chunks_with_a_capped_oracle() {
        let agent = OracleAgent::new(PuzzleKind::Checkers, 2)
            .unwrap()
            .with_max_steps_per_call(5);
        let record = run_iterative_restart(
            &agent,
            PuzzleKind::Checkers,
            2,
            &StrategyConfig::new(Strategy::IterativeRestart),
        )
        .unwrap();
        assert_eq!(record.outcome, Outcome::Success);
        assert_eq!(record.calls.agent_calls, 2);
        let rounds = record
            .exchanges
            .iter()
            .filter(|e| e.phase == Phase::RestartRound)
            .count();
        assert_eq!(rounds, 2);
    }

    #[test]
    fn single_shot_oracle_solves_hanoi() {
        let agent = OracleAgent::new(PuzzleKind::Hanoi, 3).unwrap();
        let record = run_single_shot(&agent, PuzzleKind::Hanoi, 3, false).unwrap();
        assert_eq!(record.outcome, Outcome::Success);
        assert_eq!(record.committed.len(), 7);
        assert_eq!(record.calls.agent_calls, 1);
    }

    #[test]
    fn curriculum_grades_only_the_target_portion() {
        let agent = OracleAgent::new(PuzzleKind::Checkers, 4).unwrap();
        let record = run_single_shot(&agent, PuzzleKind::Checkers, 4, true).unwrap();
        assert_eq!(record.outcome, Outcome::Success);
        assert_eq!(record.committed.len(), PuzzleKind::Checkers.optimal_len(4));
    }

    #[test]
    fn lookahead_commits_only_the_first_rollout_step() {
        let agent = OracleAgent::new(PuzzleKind::Checkers, 3).unwrap();
        let mut cfg = StrategyConfig::new(Strategy::Lookahead);
        cfg.lookahead_depth = 8;
        let record = run_lookahead(&agent, PuzzleKind::Checkers, 3, &cfg).unwrap();
        assert_eq!(record.outcome, Outcome::Success);
        let steps = PuzzleKind::Checkers.optimal_len(3) as u64;
        assert_eq!(record.calls.agent_calls, steps);
        // Rollout exchanges carry the extra predictions.
        let rollouts = record
            .exchanges
            .iter()
            .filter(|e| e.phase == Phase::LookaheadVote)
            .count();
        assert_eq!(rollouts as u64, steps);
    }

    #[test]
    fn commit_entries_match_committed_steps() {
        let agent = OracleAgent::new(PuzzleKind::Hanoi, 4).unwrap();
        for strategy in [Strategy::Atomic, Strategy::Lead, Strategy::SingleShot] {
            let record =
                run_episode(&agent, PuzzleKind::Hanoi, 4, &StrategyConfig::new(strategy), 0)
                    .unwrap();
            let commits = record
                .exchanges
                .iter()
                .filter(|e| e.phase == Phase::Commit)
                .count();
            assert_eq!(commits, record.committed.len());
        }
    }

    #[test]
    fn h_greater_than_k_is_rejected() {
        let mut cfg = StrategyConfig::new(Strategy::Lead);
        cfg.history_window = 4;
        cfg.lookahead_depth = 2;
        let agent = OracleAgent::new(PuzzleKind::Checkers, 2).unwrap();
        assert!(matches!(
            run_episode(&agent, PuzzleKind::Checkers, 2, &cfg, 0),
            Err(ExecError::Config(_))
        ));
    }
}
