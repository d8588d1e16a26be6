//! Exact state machines and deterministic optimal solvers for the two
//! puzzles, plus a kind-dispatched facade used by the rest of the
//! harness.
//!
//! Step indices are 0-based throughout the library; the 1-based
//! `step_id` of the serialized listing format is produced and consumed
//! only at the text boundary.

pub mod checkers;
pub mod hanoi;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkers::{Cell, CheckersBoard, CheckersMove, Color, LosingKind, LosingPattern};
pub use hanoi::{HanoiMove, HanoiState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PuzzleError {
    #[error("puzzle size must be at least 1")]
    ZeroSize,
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("no optimal move exists from a non-goal board")]
    NoOptimalMove,
    #[error("malformed state: {0}")]
    MalformedState(String),
    #[error("kind mismatch: applied a {applied} move to a {state} state")]
    KindMismatch {
        applied: &'static str,
        state: &'static str,
    },
}

/// Which puzzle an instance, state, or move belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PuzzleKind {
    Checkers,
    Hanoi,
}

impl PuzzleKind {
    pub fn name(self) -> &'static str {
        match self {
            PuzzleKind::Checkers => "checkers",
            PuzzleKind::Hanoi => "hanoi",
        }
    }

    pub fn initial(self, n: usize) -> Result<PuzzleState, PuzzleError> {
        Ok(match self {
            PuzzleKind::Checkers => PuzzleState::Checkers(CheckersBoard::initial(n)?),
            PuzzleKind::Hanoi => PuzzleState::Hanoi(HanoiState::initial(n as u32)?),
        })
    }

    pub fn goal(self, n: usize) -> Result<PuzzleState, PuzzleError> {
        Ok(match self {
            PuzzleKind::Checkers => PuzzleState::Checkers(CheckersBoard::goal(n)?),
            PuzzleKind::Hanoi => PuzzleState::Hanoi(HanoiState::goal(n as u32)?),
        })
    }

    /// Length of the optimal solution: `(n+1)^2 - 1` for checkers,
    /// `2^n - 1` for Hanoi.
    pub fn optimal_len(self, n: usize) -> usize {
        match self {
            PuzzleKind::Checkers => (n + 1) * (n + 1) - 1,
            PuzzleKind::Hanoi => (1usize << n) - 1,
        }
    }

    /// The full deterministic optimal solution. Hanoi steps carry their
    /// 1-based `step_id`; checkers listings do not use one.
    pub fn oracle_solve(self, n: usize) -> Result<Vec<Step>, PuzzleError> {
        match self {
            PuzzleKind::Checkers => Ok(checkers::oracle_solve(n)?
                .into_iter()
                .map(|(mv, state)| Step {
                    mv: PuzzleMove::Checkers(mv),
                    state: PuzzleState::Checkers(state),
                    step_id: None,
                })
                .collect()),
            PuzzleKind::Hanoi => Ok(hanoi::oracle_solve(n as u32)?
                .into_iter()
                .enumerate()
                .map(|(i, (mv, state))| Step {
                    mv: PuzzleMove::Hanoi(mv),
                    state: PuzzleState::Hanoi(state),
                    step_id: Some(i as u32 + 1),
                })
                .collect()),
        }
    }
}

impl std::str::FromStr for PuzzleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "checkers" => Ok(PuzzleKind::Checkers),
            "hanoi" => Ok(PuzzleKind::Hanoi),
            other => Err(format!("unknown puzzle kind: {other}")),
        }
    }
}

/// A state of either puzzle. Serialized structurally (a flat cell array
/// for checkers, three peg arrays for Hanoi), so the two are
/// distinguishable without a tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PuzzleState {
    Checkers(CheckersBoard),
    Hanoi(HanoiState),
}

/// A move of either puzzle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PuzzleMove {
    Checkers(CheckersMove),
    Hanoi(HanoiMove),
}

/// One committed or predicted step: a move and the claimed resulting
/// state, with an optional 1-based index for Hanoi listings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "move")]
    pub mv: PuzzleMove,
    pub state: PuzzleState,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step_id: Option<u32>,
}

impl Step {
    pub fn new(mv: PuzzleMove, state: PuzzleState) -> Self {
        Step {
            mv,
            state,
            step_id: None,
        }
    }

    /// Equality on the voting identity: move and claimed state, ignoring
    /// the listing index.
    pub fn same_prediction(&self, other: &Step) -> bool {
        self.mv == other.mv && self.state == other.state
    }
}

impl PuzzleState {
    pub fn kind(&self) -> PuzzleKind {
        match self {
            PuzzleState::Checkers(_) => PuzzleKind::Checkers,
            PuzzleState::Hanoi(_) => PuzzleKind::Hanoi,
        }
    }

    pub fn apply(&self, mv: &PuzzleMove) -> Result<PuzzleState, PuzzleError> {
        match (self, mv) {
            (PuzzleState::Checkers(b), PuzzleMove::Checkers(m)) => {
                Ok(PuzzleState::Checkers(b.apply(m)?))
            }
            (PuzzleState::Hanoi(s), PuzzleMove::Hanoi(m)) => Ok(PuzzleState::Hanoi(s.apply(m)?)),
            (state, mv) => Err(PuzzleError::KindMismatch {
                applied: match mv {
                    PuzzleMove::Checkers(_) => "checkers",
                    PuzzleMove::Hanoi(_) => "hanoi",
                },
                state: state.kind().name(),
            }),
        }
    }

    pub fn valid_moves(&self) -> Vec<PuzzleMove> {
        match self {
            PuzzleState::Checkers(b) => b
                .valid_moves()
                .into_iter()
                .map(PuzzleMove::Checkers)
                .collect(),
            PuzzleState::Hanoi(s) => s.valid_moves().into_iter().map(PuzzleMove::Hanoi).collect(),
        }
    }

    /// Exact goal test against the instance size.
    pub fn is_goal(&self, n: usize) -> bool {
        self.kind()
            .goal(n)
            .map(|goal| *self == goal)
            .unwrap_or(false)
    }

    pub fn as_checkers(&self) -> Option<&CheckersBoard> {
        match self {
            PuzzleState::Checkers(b) => Some(b),
            PuzzleState::Hanoi(_) => None,
        }
    }

    pub fn as_hanoi(&self) -> Option<&HanoiState> {
        match self {
            PuzzleState::Hanoi(s) => Some(s),
            PuzzleState::Checkers(_) => None,
        }
    }
}

/// The next step of the deterministic reference policy from `state`
/// after `moves_done` committed moves: the first optimal move for
/// checkers, the parity-rule move for Hanoi. Returns `None` at the goal.
/// The state need not lie on the optimal trajectory; the policy is
/// applied mechanically and errors if no move can be produced.
pub fn policy_next(
    state: &PuzzleState,
    moves_done: usize,
    n: usize,
) -> Result<Option<Step>, PuzzleError> {
    if state.is_goal(n) {
        return Ok(None);
    }
    match state {
        PuzzleState::Checkers(board) => Ok(board.first_optimal()?.map(|(mv, next)| Step {
            mv: PuzzleMove::Checkers(mv),
            state: PuzzleState::Checkers(next),
            step_id: None,
        })),
        PuzzleState::Hanoi(s) => {
            let (mv, next) = hanoi::oracle_next(s, moves_done, n as u32)?;
            Ok(Some(Step {
                mv: PuzzleMove::Hanoi(mv),
                state: PuzzleState::Hanoi(next),
                step_id: Some(moves_done as u32 + 1),
            }))
        }
    }
}
