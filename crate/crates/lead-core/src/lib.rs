//! Harness for long-horizon stepwise execution on the Tower of Hanoi and
//! Checkers Jumping puzzles.
//!
//! The crate is organized around five pieces:
//!
//! - [`puzzle`] — exact state machines, move validators, losing-pattern
//!   logic, and deterministic optimal solvers for both puzzles.
//! - [`agents`] — the step-agent abstraction with three implementations:
//!   a perfect oracle, a seeded stochastic mock that reproduces the
//!   characteristic error modes of real models, and a remote
//!   chat-completion endpoint.
//! - [`executors`] — execution strategies over any agent: single-shot,
//!   iterative restart, atomic decomposition (with and without voting),
//!   lookahead, and LEAD (lookahead-enhanced atomic decomposition with
//!   overlapping-rollout voting), plus episode grading.
//! - [`analytics`] — per-step error profiling, error-type breakdowns,
//!   total-variation comparison of error distributions, and positional
//!   accuracy of lookahead rollouts.
//! - [`io`] — configuration, JSON Lines transcripts, CSV summaries,
//!   replay, and the experiment runner behind the `lead` CLI.

pub mod agents;
pub mod analytics;
pub mod executors;
pub mod io;
pub mod listing;
pub mod puzzle;
pub(crate) mod util;

pub use agents::{
    AgentError, EndpointConfig, MockErrorKind, MockErrorProfile, ParseStatus, PromptVariant,
    RolloutRequest, RolloutResponse, StepAgent,
};
pub use executors::{
    grade_episode, CommitMode, EpisodeRecord, ErrorType, Outcome, StepVerdict, Strategy,
    StrategyConfig, VoteTally,
};
pub use puzzle::{
    CheckersBoard, CheckersMove, HanoiMove, HanoiState, LosingKind, LosingPattern, PuzzleError,
    PuzzleKind, PuzzleMove, PuzzleState, Step,
};
