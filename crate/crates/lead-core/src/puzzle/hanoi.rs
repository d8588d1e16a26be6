//! Tower of Hanoi: `n` disks on three pegs, larger never on smaller.
//! The stack moves from peg 0 to peg 2 in `2^n - 1` moves under the
//! optimal strategy.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::PuzzleError;

/// A move `[disk, peg_from, peg_to]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HanoiMove {
    pub disk: u32,
    pub from: u8,
    pub to: u8,
}

impl HanoiMove {
    pub fn new(disk: u32, from: u8, to: u8) -> Self {
        HanoiMove { disk, from, to }
    }
}

impl fmt::Display for HanoiMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.disk, self.from, self.to)
    }
}

impl Serialize for HanoiMove {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.disk, self.from, self.to).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HanoiMove {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (disk, from, to) = <(u32, u8, u8)>::deserialize(deserializer)?;
        Ok(HanoiMove { disk, from, to })
    }
}

/// Three pegs, each listed bottom to top. States claimed by agents may
/// violate the invariants; queries stay mechanical on such input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HanoiState {
    pegs: [Vec<u32>; 3],
}

impl HanoiState {
    pub fn from_pegs(pegs: [Vec<u32>; 3]) -> Self {
        HanoiState { pegs }
    }

    /// All disks stacked on peg 0, largest at the bottom.
    pub fn initial(n: u32) -> Result<Self, PuzzleError> {
        if n == 0 {
            return Err(PuzzleError::ZeroSize);
        }
        Ok(HanoiState {
            pegs: [(1..=n).rev().collect(), Vec::new(), Vec::new()],
        })
    }

    /// All disks stacked on peg 2.
    pub fn goal(n: u32) -> Result<Self, PuzzleError> {
        if n == 0 {
            return Err(PuzzleError::ZeroSize);
        }
        Ok(HanoiState {
            pegs: [Vec::new(), Vec::new(), (1..=n).rev().collect()],
        })
    }

    pub fn pegs(&self) -> &[Vec<u32>; 3] {
        &self.pegs
    }

    pub fn disk_count(&self) -> usize {
        self.pegs.iter().map(Vec::len).sum()
    }

    pub fn top(&self, peg: usize) -> Option<u32> {
        self.pegs[peg].last().copied()
    }

    /// Checks that the pegs hold exactly the disks `1..=n` with every peg
    /// strictly decreasing bottom to top.
    pub fn well_formed(&self, n: u32) -> Result<(), PuzzleError> {
        let mut seen = vec![false; n as usize + 1];
        for peg in &self.pegs {
            for pair in peg.windows(2) {
                if pair[0] <= pair[1] {
                    return Err(PuzzleError::MalformedState(format!(
                        "peg {peg:?} is not strictly decreasing"
                    )));
                }
            }
            for &d in peg {
                if d == 0 || d > n || seen[d as usize] {
                    return Err(PuzzleError::MalformedState(format!(
                        "disk {d} out of range or duplicated"
                    )));
                }
                seen[d as usize] = true;
            }
        }
        if seen[1..].iter().any(|s| !s) {
            return Err(PuzzleError::MalformedState("missing disks".to_string()));
        }
        Ok(())
    }

    /// All legal moves, ordered by `(from, to)`.
    pub fn valid_moves(&self) -> Vec<HanoiMove> {
        let mut moves = Vec::new();
        for from in 0..3usize {
            let Some(disk) = self.top(from) else {
                continue;
            };
            for to in 0..3usize {
                if from == to {
                    continue;
                }
                if self.top(to).map_or(true, |t| t > disk) {
                    moves.push(HanoiMove::new(disk, from as u8, to as u8));
                }
            }
        }
        moves
    }

    /// Applies a move after validating it.
    pub fn apply(&self, mv: &HanoiMove) -> Result<Self, PuzzleError> {
        if mv.from > 2 || mv.to > 2 || mv.from == mv.to {
            return Err(PuzzleError::InvalidMove(format!(
                "move {mv} does not name two distinct pegs"
            )));
        }
        let from = mv.from as usize;
        let to = mv.to as usize;
        match self.top(from) {
            Some(d) if d == mv.disk => {}
            Some(d) => {
                return Err(PuzzleError::InvalidMove(format!(
                    "disk {} is not on top of peg {from} (found {d})",
                    mv.disk
                )));
            }
            None => {
                return Err(PuzzleError::InvalidMove(format!("peg {from} is empty")));
            }
        }
        if let Some(t) = self.top(to) {
            if t < mv.disk {
                return Err(PuzzleError::InvalidMove(format!(
                    "cannot place disk {} on smaller disk {t}",
                    mv.disk
                )));
            }
        }
        let mut pegs = self.pegs.clone();
        let disk = pegs[from].pop().expect("checked above");
        pegs[to].push(disk);
        Ok(HanoiState { pegs })
    }
}

impl fmt::Display for HanoiState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, peg) in self.pegs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, d) in peg.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{d}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// The iterative optimal-move rule. On even move counts the smallest disk
/// advances along a fixed cycle (`0 -> 2 -> 1` for odd `n`, `0 -> 1 -> 2`
/// for even `n`); on odd counts the unique legal move between the two
/// pegs not holding disk 1 is made (an empty peg counts as an infinitely
/// large top). Errors signal a state that is off the optimal path.
pub fn oracle_next(
    state: &HanoiState,
    moves_done: usize,
    n: u32,
) -> Result<(HanoiMove, HanoiState), PuzzleError> {
    let mv = if moves_done % 2 == 0 {
        let holder = (0..3)
            .find(|&p| state.top(p) == Some(1))
            .ok_or_else(|| PuzzleError::InvalidMove("disk 1 is not on top of any peg".into()))?;
        let cycle: [usize; 3] = if n % 2 == 1 { [0, 2, 1] } else { [0, 1, 2] };
        let pos = cycle.iter().position(|&p| p == holder).expect("0..3");
        let target = cycle[(pos + 1) % 3];
        HanoiMove::new(1, holder as u8, target as u8)
    } else {
        // Sort pegs by top size descending, empty pegs first.
        let mut pegs: Vec<usize> = (0..3).collect();
        pegs.sort_by_key(|&p| std::cmp::Reverse(state.top(p).map_or(u64::MAX, u64::from)));
        let (peg_i, peg_j) = (pegs[0], pegs[1]);
        let disk = state
            .top(peg_j)
            .ok_or_else(|| PuzzleError::InvalidMove("two pegs are empty on an odd move".into()))?;
        HanoiMove::new(disk, peg_j as u8, peg_i as u8)
    };
    let next = state.apply(&mv)?;
    Ok((mv, next))
}

/// Full optimal solution of length `2^n - 1`.
pub fn oracle_solve(n: u32) -> Result<Vec<(HanoiMove, HanoiState)>, PuzzleError> {
    let mut state = HanoiState::initial(n)?;
    let goal = HanoiState::goal(n)?;
    let mut steps = Vec::new();
    while state != goal {
        let (mv, next) = oracle_next(&state, steps.len(), n)?;
        steps.push((mv, next.clone()));
        state = next;
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(pegs: [&[u32]; 3]) -> HanoiState {
        HanoiState::from_pegs([pegs[0].to_vec(), pegs[1].to_vec(), pegs[2].to_vec()])
    }

    #[test]
    fn initial_and_goal() {
        assert_eq!(HanoiState::initial(3).unwrap(), state([&[3, 2, 1], &[], &[]]));
        assert_eq!(HanoiState::goal(3).unwrap(), state([&[], &[], &[3, 2, 1]]));
        assert_eq!(
            HanoiState::initial(4).unwrap(),
            state([&[4, 3, 2, 1], &[], &[]])
        );
        assert!(matches!(HanoiState::initial(0), Err(PuzzleError::ZeroSize)));
    }

    #[test]
    fn apply_examples() {
        assert_eq!(
            state([&[3, 2, 1], &[], &[]])
                .apply(&HanoiMove::new(1, 0, 2))
                .unwrap(),
            state([&[3, 2], &[], &[1]])
        );
        assert_eq!(
            state([&[3], &[2, 1], &[]])
                .apply(&HanoiMove::new(3, 0, 2))
                .unwrap(),
            state([&[], &[2, 1], &[3]])
        );
        // Disk 3 is buried.
        assert!(state([&[3, 2], &[], &[1]])
            .apply(&HanoiMove::new(3, 0, 1))
            .is_err());
        // Larger onto smaller.
        assert!(state([&[3, 2], &[], &[1]])
            .apply(&HanoiMove::new(2, 0, 2))
            .is_err());
        // Wrong disk number for the top of the peg.
        assert!(state([&[3, 2], &[], &[1]])
            .apply(&HanoiMove::new(1, 0, 1))
            .is_err());
    }

    #[test]
    fn valid_moves_ordering() {
        assert_eq!(
            state([&[3, 2, 1], &[], &[]]).valid_moves(),
            vec![HanoiMove::new(1, 0, 1), HanoiMove::new(1, 0, 2)]
        );
        assert_eq!(
            state([&[3], &[2, 1], &[]]).valid_moves(),
            vec![
                HanoiMove::new(3, 0, 2),
                HanoiMove::new(1, 1, 0),
                HanoiMove::new(1, 1, 2)
            ]
        );
        // The goal state still has legal moves; goal detection is separate.
        assert_eq!(
            state([&[], &[], &[3, 2, 1]]).valid_moves(),
            vec![HanoiMove::new(1, 2, 0), HanoiMove::new(1, 2, 1)]
        );
    }

    #[test]
    fn oracle_next_examples() {
        let (mv, next) = oracle_next(&state([&[3], &[2, 1], &[]]), 3, 3).unwrap();
        assert_eq!(mv, HanoiMove::new(3, 0, 2));
        assert_eq!(next, state([&[], &[2, 1], &[3]]));

        let (mv, next) = oracle_next(&state([&[3, 2], &[], &[1]]), 1, 3).unwrap();
        assert_eq!(mv, HanoiMove::new(2, 0, 1));
        assert_eq!(next, state([&[3], &[2], &[1]]));

        let (mv, _) = oracle_next(&HanoiState::initial(4).unwrap(), 0, 4).unwrap();
        assert_eq!(mv, HanoiMove::new(1, 0, 1));
    }

    #[test]
    fn oracle_solve_three_disks_full_sequence() {
        let steps = oracle_solve(3).unwrap();
        let expect: Vec<(HanoiMove, HanoiState)> = vec![
            (HanoiMove::new(1, 0, 2), state([&[3, 2], &[], &[1]])),
            (HanoiMove::new(2, 0, 1), state([&[3], &[2], &[1]])),
            (HanoiMove::new(1, 2, 1), state([&[3], &[2, 1], &[]])),
            (HanoiMove::new(3, 0, 2), state([&[], &[2, 1], &[3]])),
            (HanoiMove::new(1, 1, 0), state([&[1], &[2], &[3]])),
            (HanoiMove::new(2, 1, 2), state([&[1], &[], &[3, 2]])),
            (HanoiMove::new(1, 0, 2), state([&[], &[], &[3, 2, 1]])),
        ];
        assert_eq!(steps, expect);
    }

    #[test]
    fn oracle_solve_lengths() {
        assert_eq!(oracle_solve(1).unwrap(), vec![(
            HanoiMove::new(1, 0, 2),
            state([&[], &[], &[1]])
        )]);
        for n in 1..=10 {
            let steps = oracle_solve(n).unwrap();
            assert_eq!(steps.len(), (1usize << n) - 1, "n={n}");
            assert_eq!(steps.last().unwrap().1, HanoiState::goal(n).unwrap());
            let mut cur = HanoiState::initial(n).unwrap();
            for (mv, claimed) in &steps {
                cur = cur.apply(mv).unwrap();
                assert_eq!(&cur, claimed);
                cur.well_formed(n).unwrap();
            }
        }
    }
}
