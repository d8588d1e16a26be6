//! Replay grading: committed steps are re-executed from the true
//! initial state and every divergence is classified as a move-finding
//! error (the move itself is wrong) or a move-execution error (the move
//! is acceptable but the claimed resulting state is not).

use serde::{Deserialize, Serialize};

use crate::executors::{EpisodeRecord, Outcome};
use crate::puzzle::{hanoi, PuzzleKind, PuzzleMove, PuzzleState, Step};

/// Classification of one committed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepVerdict {
    Ok,
    MoveFinding,
    MoveExecution,
    Parse,
}

/// Grade-style error categories, used by profiling as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    MoveFinding,
    MoveExecution,
    Parse,
}

/// Judges one committed step against the true pre-state. For checkers a
/// move is acceptable when it is valid and its true successor has no
/// losing pattern (any such move is optimal); for Hanoi it must be the
/// unique move of the parity algorithm for this move count.
pub fn classify_step(
    kind: PuzzleKind,
    n: usize,
    true_state: &PuzzleState,
    moves_done: usize,
    step: &Step,
) -> StepVerdict {
    let Ok(true_next) = true_state.apply(&step.mv) else {
        return StepVerdict::MoveFinding;
    };
    match kind {
        PuzzleKind::Checkers => {
            if let PuzzleState::Checkers(board) = &true_next {
                if board.losing_pattern().is_some() {
                    return StepVerdict::MoveFinding;
                }
            }
        }
        PuzzleKind::Hanoi => {
            let expected = true_state
                .as_hanoi()
                .and_then(|s| hanoi::oracle_next(s, moves_done, n as u32).ok())
                .map(|(mv, _)| PuzzleMove::Hanoi(mv));
            if expected != Some(step.mv) {
                return StepVerdict::MoveFinding;
            }
        }
    }
    if step.state != true_next {
        return StepVerdict::MoveExecution;
    }
    StepVerdict::Ok
}

/// Replays an episode's committed steps and fills in verdicts, the first
/// error index, and the outcome. Replay stops once a committed move is
/// not executable on the true state; everything after that point is
/// unreachable anyway.
pub fn grade_episode(mut record: EpisodeRecord) -> EpisodeRecord {
    let mut verdicts = Vec::with_capacity(record.committed.len());
    let mut first_error: Option<usize> = None;
    let mut cur = record
        .kind
        .initial(record.n)
        .expect("episode sizes are validated at construction");
    for (i, step) in record.committed.iter().enumerate() {
        let verdict = classify_step(record.kind, record.n, &cur, i, step);
        if verdict != StepVerdict::Ok && first_error.is_none() {
            first_error = Some(i)
        }
        verdicts.push(verdict);
        match cur.apply(&step.mv) {
            Ok(next) => cur = next,
            Err(_) => break,
        }
    }
    if let (Some(terminal), None) = (&record.terminal_failure, first_error) {
        first_error = Some(terminal.step_index);
    }
    let clean = first_error.is_none() && record.terminal_failure.is_none();
    let success = clean && cur.is_goal(record.n) && !record.budget_exceeded;
    record.step_verdicts = verdicts;
    record.first_error_index = first_error;
    record.outcome = if success {
        Outcome::Success
    } else {
        Outcome::Failure
    };
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puzzle::{Cell, CheckersBoard, CheckersMove, Color};

    fn board(s: &str) -> PuzzleState {
        PuzzleState::Checkers(CheckersBoard::from_cells(
            s.chars()
                .map(|c| match c {
                    'R' => Cell::Red,
                    'B' => Cell::Blue,
                    _ => Cell::Empty,
                })
                .collect(),
        ))
    }

    #[test]
    fn classifies_ok_execution_and_finding_errors() {
        let pre = board("R_RBB");
        let mv = PuzzleMove::Checkers(CheckersMove::new(Color::Blue, 3, 1));
        // Correct transition.
        let good = Step::new(mv, board("RBR_B"));
        assert_eq!(
            classify_step(PuzzleKind::Checkers, 2, &pre, 1, &good),
            StepVerdict::Ok
        );
        // Correct move, wrong claimed state.
        let short = Step::new(mv, board("RBR_"));
        assert_eq!(
            classify_step(PuzzleKind::Checkers, 2, &pre, 1, &short),
            StepVerdict::MoveExecution
        );
        // Valid move that enters a losing pattern.
        let losing = Step::new(
            PuzzleMove::Checkers(CheckersMove::new(Color::Red, 0, 1)),
            board("_RRBB"),
        );
        assert_eq!(
            classify_step(PuzzleKind::Checkers, 2, &pre, 1, &losing),
            StepVerdict::MoveFinding
        );
        // Invalid move.
        let invalid = Step::new(
            PuzzleMove::Checkers(CheckersMove::new(Color::Blue, 4, 3)),
            board("RBR_B"),
        );
        assert_eq!(
            classify_step(PuzzleKind::Checkers, 2, &pre, 1, &invalid),
            StepVerdict::MoveFinding
        );
    }

    #[test]
    fn hanoi_grading_requires_the_parity_move() {
        let steps = PuzzleKind::Hanoi.oracle_solve(3).unwrap();
        let pre = PuzzleKind::Hanoi.initial(3).unwrap();
        assert_eq!(
            classify_step(PuzzleKind::Hanoi, 3, &pre, 0, &steps[0]),
            StepVerdict::Ok
        );
        // Legal but not the algorithm's move.
        let wrong = Step::new(
            PuzzleMove::Hanoi(crate::puzzle::HanoiMove::new(1, 0, 1)),
            pre.apply(&PuzzleMove::Hanoi(crate::puzzle::HanoiMove::new(1, 0, 1))).unwrap(),
        );
        assert_eq!(
            classify_step(PuzzleKind::Hanoi, 3, &pre, 0, &wrong),
            StepVerdict::MoveFinding
        );
    }
}
