//! Checkers Jumping: `n` red and `n` blue pieces on a line of `2n+1` cells
//! with one empty slot. Red moves right, blue moves left, by sliding into
//! the empty cell or jumping a single opposing piece into it. The goal
//! mirrors the initial arrangement and is reachable in `(n+1)^2 - 1` moves.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::PuzzleError;

/// One board cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cell {
    #[serde(rename = "R")]
    Red,
    #[serde(rename = "B")]
    Blue,
    #[serde(rename = "_")]
    Empty,
}

impl Cell {
    pub fn token(self) -> &'static str {
        match self {
            Cell::Red => "R",
            Cell::Blue => "B",
            Cell::Empty => "_",
        }
    }
}

/// Color of a moving checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    #[serde(rename = "R")]
    Red,
    #[serde(rename = "B")]
    Blue,
}

impl Color {
    pub fn cell(self) -> Cell {
        match self {
            Color::Red => Cell::Red,
            Color::Blue => Cell::Blue,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Color::Red => "R",
            Color::Blue => "B",
        }
    }
}

/// A move `[color, from, to]`. Red moves right, blue moves left, by one
/// cell (slide) or two (jump over one opposing piece).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CheckersMove {
    pub color: Color,
    pub from: usize,
    pub to: usize,
}

impl CheckersMove {
    pub fn new(color: Color, from: usize, to: usize) -> Self {
        CheckersMove { color, from, to }
    }
}

impl fmt::Display for CheckersMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "['{}', {}, {}]", self.color.token(), self.from, self.to)
    }
}

impl Serialize for CheckersMove {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.color, self.from, self.to).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CheckersMove {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (color, from, to) = <(Color, usize, usize)>::deserialize(deserializer)?;
        Ok(CheckersMove { color, from, to })
    }
}

/// The three losing configurations around the empty cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LosingKind {
    /// `['_', 'R', 'R']` with the reds not in the complete red block.
    P1,
    /// `['B', 'B', '_']` with the blues not in the complete blue block.
    P2,
    /// `['B', '_', 'R']` with neither piece in its complete block.
    P3,
}

/// A losing pattern detected on a board, anchored at the empty cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LosingPattern {
    pub kind: LosingKind,
    /// Index of the empty cell the pattern is anchored at.
    pub position: usize,
}

/// A linear board. Construction via [`CheckersBoard::initial`] /
/// [`CheckersBoard::goal`] yields well-formed boards; boards parsed from
/// agent output may violate the shape invariants (that is the point — a
/// common model failure is claiming a board of the wrong length), so all
/// read-only queries work on arbitrary cell vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CheckersBoard {
    cells: Vec<Cell>,
}

impl CheckersBoard {
    pub fn from_cells(cells: Vec<Cell>) -> Self {
        CheckersBoard { cells }
    }

    /// `[R x n, _, B x n]`.
    pub fn initial(n: usize) -> Result<Self, PuzzleError> {
        if n == 0 {
            return Err(PuzzleError::ZeroSize);
        }
        let mut cells = vec![Cell::Red; n];
        cells.push(Cell::Empty);
        cells.extend(std::iter::repeat(Cell::Blue).take(n));
        Ok(CheckersBoard { cells })
    }

    /// `[B x n, _, R x n]` — the mirrored arrangement.
    pub fn goal(n: usize) -> Result<Self, PuzzleError> {
        if n == 0 {
            return Err(PuzzleError::ZeroSize);
        }
        let mut cells = vec![Cell::Blue; n];
        cells.push(Cell::Empty);
        cells.extend(std::iter::repeat(Cell::Red).take(n));
        Ok(CheckersBoard { cells })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Checks the shape invariants (one empty cell, equal piece counts,
    /// odd length) and returns the piece count per color.
    pub fn well_formed(&self) -> Result<usize, PuzzleError> {
        let reds = self.cells.iter().filter(|c| **c == Cell::Red).count();
        let blues = self.cells.iter().filter(|c| **c == Cell::Blue).count();
        let empties = self.cells.len() - reds - blues;
        if empties != 1 || reds != blues || reds == 0 {
            return Err(PuzzleError::MalformedState(format!(
                "expected n reds, n blues and one empty cell, got {reds} R / {blues} B / {empties} _"
            )));
        }
        Ok(reds)
    }

    /// Index of the first empty cell, if any.
    pub fn empty_pos(&self) -> Option<usize> {
        self.cells.iter().position(|c| *c == Cell::Empty)
    }

    fn cell_is(&self, idx: isize, want: Cell) -> bool {
        idx >= 0 && (idx as usize) < self.cells.len() && self.cells[idx as usize] == want
    }

    /// All currently valid moves, in the fixed generation order: red
    /// slide, blue slide, red jump, blue jump. At most four moves exist
    /// since every move targets the unique empty cell.
    pub fn valid_moves(&self) -> Vec<CheckersMove> {
        let Some(e) = self.empty_pos() else {
            return Vec::new();
        };
        let e = e as isize;
        let mut moves = Vec::with_capacity(4);
        if self.cell_is(e - 1, Cell::Red) {
            moves.push(CheckersMove::new(Color::Red, (e - 1) as usize, e as usize));
        }
        if self.cell_is(e + 1, Cell::Blue) {
            moves.push(CheckersMove::new(Color::Blue, (e + 1) as usize, e as usize));
        }
        if self.cell_is(e - 2, Cell::Red) && self.cell_is(e - 1, Cell::Blue) {
            moves.push(CheckersMove::new(Color::Red, (e - 2) as usize, e as usize));
        }
        if self.cell_is(e + 1, Cell::Red) && self.cell_is(e + 2, Cell::Blue) {
            moves.push(CheckersMove::new(Color::Blue, (e + 2) as usize, e as usize));
        }
        moves
    }

    /// Applies a move after validating it against the rules.
    pub fn apply(&self, mv: &CheckersMove) -> Result<Self, PuzzleError> {
        let len = self.cells.len();
        if mv.from >= len || mv.to >= len {
            return Err(PuzzleError::InvalidMove(format!(
                "move {mv} is out of bounds on a board of length {len}"
            )));
        }
        if self.cells[mv.from] != mv.color.cell() {
            return Err(PuzzleError::InvalidMove(format!(
                "cell {} does not hold a {} checker",
                mv.from,
                mv.color.token()
            )));
        }
        if self.cells[mv.to] != Cell::Empty {
            return Err(PuzzleError::InvalidMove(format!(
                "destination {} is occupied",
                mv.to
            )));
        }
        let forward = match mv.color {
            Color::Red => mv.to as isize - mv.from as isize,
            Color::Blue => mv.from as isize - mv.to as isize,
        };
        match forward {
            1 => {}
            2 => {
                let over = (mv.from + mv.to) / 2;
                let opposing = match mv.color {
                    Color::Red => Cell::Blue,
                    Color::Blue => Cell::Red,
                };
                if self.cells[over] != opposing {
                    return Err(PuzzleError::InvalidMove(format!(
                        "jump {mv} must cross exactly one opposing checker"
                    )));
                }
            }
            _ => {
                return Err(PuzzleError::InvalidMove(format!(
                    "move {mv} must advance by one or two cells in the forward direction"
                )));
            }
        }
        let mut cells = self.cells.clone();
        cells[mv.from] = Cell::Empty;
        cells[mv.to] = mv.color.cell();
        Ok(CheckersBoard { cells })
    }

    fn blue_prefix_len(&self) -> usize {
        self.cells
            .iter()
            .take_while(|c| **c == Cell::Blue)
            .count()
    }

    fn red_suffix_len(&self) -> usize {
        self.cells
            .iter()
            .rev()
            .take_while(|c| **c == Cell::Red)
            .count()
    }

    /// `(left_block_end, right_block_start)`: the rightmost index of the
    /// complete blue block anchored at the left corner (`-1` if none) and
    /// the leftmost index of the complete red block anchored at the right
    /// corner (`len` if none).
    pub fn complete_blocks(&self) -> (isize, usize) {
        (
            self.blue_prefix_len() as isize - 1,
            self.cells.len() - self.red_suffix_len(),
        )
    }

    /// Detects a losing pattern anchored at the empty cell, if any,
    /// checking P1, then P2, then P3, each with its complete-block
    /// exemption. Pieces inside a complete block have finished moving, so
    /// patterns formed entirely by them are harmless.
    pub fn losing_pattern(&self) -> Option<LosingPattern> {
        let e = self.empty_pos()?;
        let len = self.cells.len();
        let (left_block_end, right_block_start) = self.complete_blocks();

        // P1: ['_', 'R', 'R'] starting at the empty cell.
        if e + 2 < len && self.cells[e + 1] == Cell::Red && self.cells[e + 2] == Cell::Red {
            let red_complete = e + 2 >= right_block_start;
            if !red_complete {
                return Some(LosingPattern {
                    kind: LosingKind::P1,
                    position: e,
                });
            }
        }
        // P2: ['B', 'B', '_'] ending at the empty cell.
        if e >= 2 && self.cells[e - 2] == Cell::Blue && self.cells[e - 1] == Cell::Blue {
            let blue_complete = (e - 2) as isize <= left_block_end;
            if !blue_complete {
                return Some(LosingPattern {
                    kind: LosingKind::P2,
                    position: e,
                });
            }
        }
        // P3: ['B', '_', 'R'] centered at the empty cell.
        if e >= 1 && e + 1 < len && self.cells[e - 1] == Cell::Blue && self.cells[e + 1] == Cell::Red
        {
            let blue_complete = (e - 1) as isize <= left_block_end;
            let red_complete = e + 1 >= right_block_start;
            if !blue_complete && !red_complete {
                return Some(LosingPattern {
                    kind: LosingKind::P3,
                    position: e,
                });
            }
        }
        None
    }

    /// True when the board has the mirrored `[B.., _, R..]` shape,
    /// regardless of the instance size it is compared against.
    pub fn is_goal_shape(&self) -> bool {
        let len = self.cells.len();
        if len < 3 || len % 2 == 0 {
            return false;
        }
        let n = len / 2;
        self.cells[..n].iter().all(|c| *c == Cell::Blue)
            && self.cells[n] == Cell::Empty
            && self.cells[n + 1..].iter().all(|c| *c == Cell::Red)
    }

    /// Valid moves whose successor boards contain no losing pattern, in
    /// generation order. Any such move is optimal. Errors with
    /// [`PuzzleError::NoOptimalMove`] on a non-goal board with no safe
    /// move, which signals an unreachable or corrupt state.
    pub fn optimal_moves(&self) -> Result<Vec<CheckersMove>, PuzzleError> {
        let safe: Vec<CheckersMove> = self
            .valid_moves()
            .into_iter()
            .filter(|mv| {
                self.apply(mv)
                    .map(|next| next.losing_pattern().is_none())
                    .unwrap_or(false)
            })
            .collect();
        if safe.is_empty() && !self.is_goal_shape() {
            return Err(PuzzleError::NoOptimalMove);
        }
        Ok(safe)
    }

    /// The deterministic solver step: the first optimal move and its
    /// resulting board, or `None` at the goal shape.
    pub fn first_optimal(&self) -> Result<Option<(CheckersMove, CheckersBoard)>, PuzzleError> {
        if self.is_goal_shape() {
            return Ok(None);
        }
        let moves = self.optimal_moves()?;
        let mv = moves[0];
        let next = self.apply(&mv)?;
        Ok(Some((mv, next)))
    }
}

impl fmt::Display for CheckersBoard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "'{}'", c.token())?;
        }
        write!(f, "]")
    }
}

/// Solves the instance by repeatedly committing the first optimal move.
/// The result has exactly `(n+1)^2 - 1` steps and never passes through a
/// losing board.
pub fn oracle_solve(n: usize) -> Result<Vec<(CheckersMove, CheckersBoard)>, PuzzleError> {
    let mut board = CheckersBoard::initial(n)?;
    let mut steps = Vec::with_capacity((n + 1) * (n + 1) - 1);
    while let Some((mv, next)) = board.first_optimal()? {
        steps.push((mv, next.clone()));
        board = next;
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board(s: &str) -> CheckersBoard {
        CheckersBoard::from_cells(
            s.chars()
                .map(|c| match c {
                    'R' => Cell::Red,
                    'B' => Cell::Blue,
                    '_' => Cell::Empty,
                    other => panic!("bad cell {other}"),
                })
                .collect(),
        )
    }

    fn mv(color: char, from: usize, to: usize) -> CheckersMove {
        let color = if color == 'R' { Color::Red } else { Color::Blue };
        CheckersMove::new(color, from, to)
    }

    #[test]
    fn initial_and_goal_shapes() {
        assert_eq!(CheckersBoard::initial(1).unwrap(), board("R_B"));
        assert_eq!(CheckersBoard::initial(2).unwrap(), board("RR_BB"));
        assert_eq!(CheckersBoard::initial(3).unwrap(), board("RRR_BBB"));
        assert_eq!(CheckersBoard::goal(1).unwrap(), board("B_R"));
        assert_eq!(CheckersBoard::goal(2).unwrap(), board("BB_RR"));
        assert_eq!(CheckersBoard::goal(3).unwrap(), board("BBB_RRR"));
        assert!(matches!(
            CheckersBoard::initial(0),
            Err(PuzzleError::ZeroSize)
        ));
        assert!(matches!(CheckersBoard::goal(0), Err(PuzzleError::ZeroSize)));
    }

    #[test]
    fn apply_worked_examples() {
        // Jump from the prompt's worked n=2 example.
        assert_eq!(
            board("R_RBB").apply(&mv('B', 3, 1)).unwrap(),
            board("RBR_B")
        );
        assert_eq!(board("R_B").apply(&mv('R', 0, 1)).unwrap(), board("_RB"));
        assert_eq!(board("_RB").apply(&mv('B', 2, 0)).unwrap(), board("BR_"));
    }

    #[test]
    fn apply_rejects_rule_violations() {
        // Wrong direction for blue.
        assert!(board("B_R").apply(&mv('B', 0, 1)).is_err());
        // Destination occupied.
        assert!(board("R_B").apply(&mv('R', 0, 2)).is_err());
        // Jump over own color.
        assert!(board("RR_BB").apply(&mv('R', 0, 2)).is_err());
        // Color mismatch at source.
        assert!(board("R_B").apply(&mv('B', 0, 1)).is_err());
        // Out of bounds.
        assert!(board("R_B").apply(&mv('R', 5, 6)).is_err());
        // Jump over an empty cell.
        assert!(board("R__B").apply(&mv('R', 0, 2)).is_err());
        // Advance of three cells.
        assert!(board("R___B").apply(&mv('R', 0, 3)).is_err());
    }

    #[test]
    fn valid_move_generation_order() {
        assert_eq!(
            board("R_B").valid_moves(),
            vec![mv('R', 0, 1), mv('B', 2, 1)]
        );
        assert_eq!(board("RB_").valid_moves(), vec![mv('R', 0, 2)]);
        assert_eq!(board("B_R").valid_moves(), Vec::new());
    }

    #[test]
    fn valid_moves_match_exhaustive_rule_check() {
        // Every syntactically possible move on every board of length <= 7.
        for b in ["RR_BB", "RBR_B", "_BRBR", "RRR_BBB", "RB_RB", "BR_RB"] {
            let b = board(b);
            let generated = b.valid_moves();
            let mut exhaustive = Vec::new();
            for from in 0..b.len() {
                for to in 0..b.len() {
                    for color in [Color::Red, Color::Blue] {
                        let m = CheckersMove::new(color, from, to);
                        if b.apply(&m).is_ok() {
                            exhaustive.push(m);
                        }
                    }
                }
            }
            for m in &exhaustive {
                assert!(generated.contains(m), "missing {m} on {b}");
            }
            assert_eq!(generated.len(), exhaustive.len(), "on {b}");
        }
    }

    #[test]
    fn complete_blocks_examples() {
        assert_eq!(board("BB_RR").complete_blocks(), (1, 3));
        assert_eq!(board("RR_BB").complete_blocks(), (-1, 5));
        assert_eq!(board("BR_BR").complete_blocks(), (0, 4));
    }

    #[test]
    fn losing_pattern_examples() {
        let p = board("_RRBB").losing_pattern().unwrap();
        assert_eq!((p.kind, p.position), (LosingKind::P1, 0));
        // Goal board: both patterns exempted by complete blocks.
        assert_eq!(board("BB_RR").losing_pattern(), None);
        // P3 with neither piece complete.
        let p = board("RB_RB").losing_pattern().unwrap();
        assert_eq!((p.kind, p.position), (LosingKind::P3, 2));
        // P1 fires before P3 on this dead board.
        let p = board("B_RRB").losing_pattern().unwrap();
        assert_eq!((p.kind, p.position), (LosingKind::P1, 1));
        // P2 without the blue block exemption.
        let p = board("RBB_R").losing_pattern().unwrap();
        assert_eq!((p.kind, p.position), (LosingKind::P2, 3));
        // Same shape but exempt when the blues rest against the corner.
        assert_eq!(board("BB_RR").losing_pattern(), None);
    }

    #[test]
    fn optimal_move_examples() {
        assert_eq!(
            board("R_B").optimal_moves().unwrap(),
            vec![mv('R', 0, 1), mv('B', 2, 1)]
        );
        // The red slide would create P1, leaving only the blue jump.
        assert_eq!(board("R_RBB").optimal_moves().unwrap(), vec![mv('B', 3, 1)]);
        assert_eq!(board("BB_RR").optimal_moves().unwrap(), Vec::new());
        // A dead non-goal board has no safe move at all.
        assert!(matches!(
            board("B_RRB").optimal_moves(),
            Err(PuzzleError::NoOptimalMove)
        ));
    }

    #[test]
    fn oracle_solve_n1_matches_published_sequence() {
        let steps = oracle_solve(1).unwrap();
        let expect = [
            (mv('R', 0, 1), board("_RB")),
            (mv('B', 2, 0), board("BR_")),
            (mv('R', 1, 2), board("B_R")),
        ];
        assert_eq!(steps.len(), 3);
        for (got, want) in steps.iter().zip(expect.iter()) {
            assert_eq!(got.0, want.0);
            assert_eq!(got.1, want.1);
        }
    }

    #[test]
    fn oracle_solve_n2_trajectory() {
        let steps = oracle_solve(2).unwrap();
        let moves: Vec<CheckersMove> = steps.iter().map(|(m, _)| *m).collect();
        assert_eq!(
            moves,
            vec![
                mv('R', 1, 2),
                mv('B', 3, 1),
                mv('B', 4, 3),
                mv('R', 2, 4),
                mv('R', 0, 2),
                mv('B', 1, 0),
                mv('B', 3, 1),
                mv('R', 2, 3),
            ]
        );
        assert_eq!(steps.last().unwrap().1, board("BB_RR"));
    }

    #[test]
    fn oracle_lengths_and_safety() {
        for n in 1..=13 {
            let steps = oracle_solve(n).unwrap();
            assert_eq!(steps.len(), (n + 1) * (n + 1) - 1, "n={n}");
            assert_eq!(steps.last().unwrap().1, CheckersBoard::goal(n).unwrap());
            for (_, b) in &steps {
                assert_eq!(b.losing_pattern(), None);
                b.well_formed().unwrap();
            }
        }
    }
}
