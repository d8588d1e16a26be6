//! A seeded stochastic agent that mimics how real models fail on these
//! puzzles: near-perfect execution on most steps, a few hard steps with
//! high error probability, errors that repeat consistently rather than
//! randomly, and rollouts that stay accurate once their first step is
//! correct.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentError, PromptVariant, RolloutRequest, RolloutResponse, StepAgent};
use crate::puzzle::{policy_next, Cell, CheckersBoard, PuzzleMove, PuzzleState, Step};
use crate::util::splitmix64;

/// How an error corrupts the emitted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockErrorKind {
    /// Correct move, but one piece of the longest same-color block is
    /// dropped from the claimed state, shortening the board.
    #[default]
    OmitPiece,
    /// Correct move, but one piece is duplicated, lengthening the board.
    ExtraPiece,
    /// A different valid move, executed correctly.
    WrongMove,
    /// A uniformly random valid move (possibly the correct one),
    /// executed correctly.
    RandomValid,
}

/// Error behavior of a [`MockAgent`]. All probabilities are in `[0, 1]`;
/// step indices are 0-based positions on the reference trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockErrorProfile {
    /// Error probability for the first rollout position, per anchor step.
    #[serde(default)]
    pub per_step_error: BTreeMap<usize, f64>,
    /// Error probability for anchors not listed above, and for rollout
    /// positions following an incorrect one.
    #[serde(default)]
    pub default_error: f64,
    #[serde(default)]
    pub error_kind: MockErrorKind,
    /// Probability that an error at a given step reproduces the same
    /// wrong answer instead of a fresh one.
    #[serde(default = "default_consistency")]
    pub consistency: f64,
    /// Error probability for rollout positions after a correct one.
    #[serde(default)]
    pub cond_error: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_consistency() -> f64 {
    1.0
}

impl Default for MockErrorProfile {
    fn default() -> Self {
        MockErrorProfile {
            per_step_error: BTreeMap::new(),
            default_error: 0.0,
            error_kind: MockErrorKind::OmitPiece,
            consistency: 1.0,
            cond_error: 0.0,
            seed: 0,
        }
    }
}

impl MockErrorProfile {
    /// A profile with one elevated-error step, the shape behind the
    /// no-recovery bottleneck.
    pub fn single_hard_step(step: usize, p: f64) -> Self {
        MockErrorProfile {
            per_step_error: BTreeMap::from([(step, p)]),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let probs = self
            .per_step_error
            .values()
            .copied()
            .chain([self.default_error, self.consistency, self.cond_error]);
        for p in probs {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(format!("probability {p} is outside [0, 1]"));
            }
        }
        Ok(())
    }

    fn first_position_error(&self, step_index: usize) -> f64 {
        self.per_step_error
            .get(&step_index)
            .copied()
            .unwrap_or(self.default_error)
    }
}

/// A pure function of `(profile.seed, request)`: the RNG stream is
/// derived from the anchor index and the attempt ordinal, so identical
/// requests always reproduce the same reply, in any thread.
pub struct MockAgent {
    profile: MockErrorProfile,
    warmup_n: usize,
}

impl MockAgent {
    pub fn new(profile: MockErrorProfile) -> Self {
        MockAgent {
            profile,
            warmup_n: 2,
        }
    }

    pub fn profile(&self) -> &MockErrorProfile {
        &self.profile
    }

    fn request_rng(&self, request: &RolloutRequest) -> ChaCha8Rng {
        let mut s = self.profile.seed;
        s = splitmix64(s ^ request.anchor_index as u64);
        s = splitmix64(s ^ request.attempt);
        ChaCha8Rng::seed_from_u64(s)
    }

    /// RNG behind "the same wrong answer again": a function of the step
    /// index alone, so repeated errors at one step coincide.
    fn canonical_rng(&self, step_index: usize) -> ChaCha8Rng {
        let mut s = splitmix64(self.profile.seed ^ 0x5EED_CAFE);
        s = splitmix64(s ^ step_index as u64);
        ChaCha8Rng::seed_from_u64(s)
    }

    fn corrupt(
        &self,
        pre_state: &PuzzleState,
        true_step: &Step,
        step_index: usize,
        rng: &mut ChaCha8Rng,
    ) -> Step {
        let consistent = rng.gen::<f64>() < self.profile.consistency;
        let mut canonical;
        let r: &mut dyn RngCore = if consistent {
            canonical = self.canonical_rng(step_index);
            &mut canonical
        } else {
            rng
        };
        match self.profile.error_kind {
            MockErrorKind::WrongMove => {
                let alternatives: Vec<PuzzleMove> = pre_state
                    .valid_moves()
                    .into_iter()
                    .filter(|m| *m != true_step.mv)
                    .collect();
                if alternatives.is_empty() {
                    // No other legal move exists; fall back to a state
                    // corruption so the error still materializes.
                    return corrupt_state(true_step, false);
                }
                let mv = alternatives[(r.next_u64() % alternatives.len() as u64) as usize];
                executed(pre_state, mv, true_step)
            }
            MockErrorKind::RandomValid => {
                let moves = pre_state.valid_moves();
                if moves.is_empty() {
                    return corrupt_state(true_step, false);
                }
                let mv = moves[(r.next_u64() % moves.len() as u64) as usize];
                executed(pre_state, mv, true_step)
            }
            MockErrorKind::OmitPiece => corrupt_state(true_step, false),
            MockErrorKind::ExtraPiece => corrupt_state(true_step, true),
        }
    }
}

fn executed(pre_state: &PuzzleState, mv: PuzzleMove, true_step: &Step) -> Step {
    match pre_state.apply(&mv) {
        Ok(state) => Step {
            mv,
            state,
            step_id: true_step.step_id,
        },
        Err(_) => corrupt_state(true_step, false),
    }
}

/// Keeps the true move but damages the claimed state: the longest block
/// of the moved color loses or gains one piece, exactly the dominant
/// failure observed on long same-color runs.
fn corrupt_state(true_step: &Step, extend: bool) -> Step {
    let state = match (&true_step.state, &true_step.mv) {
        (PuzzleState::Checkers(board), PuzzleMove::Checkers(mv)) => {
            let color = mv.color.cell();
            let mut cells = board.cells().to_vec();
            if let Some(run_start) = longest_run_start(&cells, color) {
                if extend {
                    cells.insert(run_start, color);
                } else {
                    cells.remove(run_start);
                }
            }
            PuzzleState::Checkers(CheckersBoard::from_cells(cells))
        }
        (PuzzleState::Hanoi(state), PuzzleMove::Hanoi(mv)) => {
            let mut pegs = state.pegs().clone();
            let peg = &mut pegs[mv.to as usize];
            if extend {
                peg.push(mv.disk);
            } else {
                peg.pop();
            }
            PuzzleState::Hanoi(crate::puzzle::HanoiState::from_pegs(pegs))
        }
        // Mixed kinds cannot be produced by the policy.
        (state, _) => state.clone(),
    };
    Step {
        mv: true_step.mv,
        state,
        step_id: true_step.step_id,
    }
}

fn longest_run_start(cells: &[Cell], color: Cell) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < cells.len() {
        if cells[i] == color {
            let start = i;
            while i < cells.len() && cells[i] == color {
                i += 1;
            }
            let len = i - start;
            if best.map_or(true, |(_, blen)| len > blen) {
                best = Some((start, len));
            }
        } else {
            i += 1;
        }
    }
    best.map(|(start, _)| start)
}

impl StepAgent for MockAgent {
    fn rollout(&self, request: &RolloutRequest) -> Result<RolloutResponse, AgentError> {
        let mut rng = self.request_rng(request);
        let mut steps: Vec<Step> = Vec::new();
        if request.variant == PromptVariant::Curriculum {
            steps.extend(request.kind.oracle_solve(self.warmup_n)?);
        }
        let mut cur = request.anchor_state.clone();
        let mut moves_done = request.anchor_index;
        let mut prev_correct = true;
        for offset in 1..=request.depth {
            if cur.is_goal(request.n) {
                break;
            }
            // Once the claimed state has drifted off anything solvable,
            // the rollout simply stops short.
            let Ok(Some(true_step)) = policy_next(&cur, moves_done, request.n) else {
                break;
            };
            let p = if offset == 1 {
                self.profile.first_position_error(request.anchor_index)
            } else if prev_correct {
                self.profile.cond_error
            } else {
                self.profile.default_error
            };
            let step = if rng.gen::<f64>() < p {
                self.corrupt(&cur, &true_step, moves_done, &mut rng)
            } else {
                true_step.clone()
            };
            prev_correct = step.same_prediction(&true_step);
            cur = step.state.clone();
            steps.push(step);
            moves_done += 1;
        }
        Ok(RolloutResponse::from_steps(steps, request))
    }

    fn label(&self) -> String {
        format!("mock[seed={}]", self.profile.seed)
    }
}
