//! The bracketed, single-quoted listing format used in prompts, model
//! replies, and transcripts:
//!
//! ```text
//! solution = [
//!   {'move': ['R', 0, 1], 'state': ['_', 'R', 'B']},
//! ]
//! ```
//!
//! The writer reproduces the format byte for byte so transcripts can be
//! diffed against raw model text. The reader is deliberately lenient: it
//! scans surrounding prose for `solution = ...` / `moves = ...`
//! assignments, accepts single records and record lists, bare or quoted
//! keys, single or double quotes, and trailing commas, and keeps the
//! last well-formed assignment (reasoning text may contain drafts).

use serde::{Deserialize, Serialize};

use crate::puzzle::{
    Cell, CheckersBoard, CheckersMove, Color, HanoiMove, HanoiState, PuzzleKind, PuzzleMove,
    PuzzleState, Step,
};

/// Outcome of parsing an agent reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Truncated,
    Malformed,
}

/// How many steps a reply is expected to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    /// Exactly this many (atomic and lookahead replies). Extra records
    /// are dropped; fewer mark the reply truncated.
    Exactly(usize),
    /// One or more (iterative and single-shot replies).
    AtLeastOne,
}

// ---------------------------------------------------------------------------
// Writing

pub fn move_text(mv: &PuzzleMove) -> String {
    match mv {
        PuzzleMove::Checkers(m) => m.to_string(),
        PuzzleMove::Hanoi(m) => m.to_string(),
    }
}

pub fn state_text(state: &PuzzleState) -> String {
    match state {
        PuzzleState::Checkers(b) => b.to_string(),
        PuzzleState::Hanoi(s) => s.to_string(),
    }
}

fn record_text(step: &Step, state_key: &str) -> String {
    format!(
        "{{'move': {}, '{}': {}}}",
        move_text(&step.mv),
        state_key,
        state_text(&step.state)
    )
}

/// The canonical voting identity of a prediction: move plus claimed
/// state, without any step index.
pub fn canonical_key(step: &Step) -> String {
    record_text(step, "state")
}

fn render_listing(keyword: &str, steps: &[Step]) -> String {
    let mut out = format!("{keyword} = [\n");
    for step in steps {
        out.push_str("  ");
        out.push_str(&record_text(step, "state"));
        out.push_str(",\n");
    }
    out.push(']');
    out
}

/// Full-solution form, as in the expected-output listings.
pub fn render_solution_listing(steps: &[Step]) -> String {
    render_listing("solution", steps)
}

/// Continuation form used by iterative and lookahead replies.
pub fn render_moves_listing(steps: &[Step]) -> String {
    render_listing("moves", steps)
}

/// Single-step reply form. Hanoi answers carry the 1-based index of the
/// move under `new_step_id`.
pub fn render_atomic_solution(step: &Step) -> String {
    match step.step_id {
        Some(id) => format!(
            "solution = {{'new_step_id': {id}, 'move': {}, 'new_state': {}}}",
            move_text(&step.mv),
            state_text(&step.state)
        ),
        None => format!(
            "solution = {{'move': {}, 'new_state': {}}}",
            move_text(&step.mv),
            state_text(&step.state)
        ),
    }
}

// ---------------------------------------------------------------------------
// Reading

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Atom(String),
    List(Vec<Value>),
    Record(Vec<(String, Value)>),
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, pos: usize) -> Self {
        Cursor {
            bytes: text.as_bytes(),
            pos,
        }
    }

    fn skip_ws(&mut self) {
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_value(&mut self) -> Option<Value> {
        self.skip_ws();
        match self.peek()? {
            b'[' => self.parse_list(),
            b'{' => self.parse_record(),
            b'\'' | b'"' => self.parse_quoted().map(Value::Atom),
            b'-' | b'0'..=b'9' => self.parse_int(),
            b if b.is_ascii_alphabetic() || b == b'_' => Some(Value::Atom(self.parse_bare())),
            _ => None,
        }
    }

    fn parse_list(&mut self) -> Option<Value> {
        debug_assert!(self.eat(b'['));
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b']') {
                return Some(Value::List(items));
            }
            items.push(self.parse_value()?);
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                return self.eat(b']').then_some(Value::List(items));
            }
        }
    }

    fn parse_record(&mut self) -> Option<Value> {
        debug_assert!(self.eat(b'{'));
        let mut fields = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b'}') {
                return Some(Value::Record(fields));
            }
            let key = match self.peek()? {
                b'\'' | b'"' => self.parse_quoted()?,
                b if b.is_ascii_alphabetic() || b == b'_' => self.parse_bare(),
                _ => return None,
            };
            self.skip_ws();
            if !self.eat(b':') {
                return None;
            }
            fields.push((key, self.parse_value()?));
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                return self.eat(b'}').then_some(Value::Record(fields));
            }
        }
    }

    fn parse_quoted(&mut self) -> Option<String> {
        let quote = self.peek()?;
        self.pos += 1;
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b == quote {
                let s = std::str::from_utf8(&self.bytes[start..self.pos]).ok()?;
                self.pos += 1;
                return Some(s.to_string());
            }
            if b == b'\n' {
                return None;
            }
            self.pos += 1;
        }
        None
    }

    fn parse_bare(&mut self) -> String {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap_or_default()
            .to_string()
    }

    fn parse_int(&mut self) -> Option<Value> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
            .map(Value::Int)
    }
}

fn cell_from_token(token: &str) -> Option<Cell> {
    match token {
        "R" => Some(Cell::Red),
        "B" => Some(Cell::Blue),
        "_" => Some(Cell::Empty),
        _ => None,
    }
}

fn move_from_value(value: &Value, kind: PuzzleKind) -> Option<PuzzleMove> {
    let Value::List(items) = value else {
        return None;
    };
    if items.len() != 3 {
        return None;
    }
    match kind {
        PuzzleKind::Checkers => {
            let Value::Atom(color) = &items[0] else {
                return None;
            };
            let color = match color.as_str() {
                "R" => Color::Red,
                "B" => Color::Blue,
                _ => return None,
            };
            let (Value::Int(from), Value::Int(to)) = (&items[1], &items[2]) else {
                return None;
            };
            if *from < 0 || *to < 0 {
                return None;
            }
            Some(PuzzleMove::Checkers(CheckersMove::new(
                color,
                *from as usize,
                *to as usize,
            )))
        }
        PuzzleKind::Hanoi => {
            let (Value::Int(disk), Value::Int(from), Value::Int(to)) =
                (&items[0], &items[1], &items[2])
            else {
                return None;
            };
            if *disk < 1 || !(0..=2).contains(from) || !(0..=2).contains(to) {
                return None;
            }
            Some(PuzzleMove::Hanoi(HanoiMove::new(
                *disk as u32,
                *from as u8,
                *to as u8,
            )))
        }
    }
}

fn state_from_value(value: &Value, kind: PuzzleKind) -> Option<PuzzleState> {
    let Value::List(items) = value else {
        return None;
    };
    match kind {
        PuzzleKind::Checkers => {
            let mut cells = Vec::with_capacity(items.len());
            for item in items {
                let Value::Atom(token) = item else {
                    return None;
                };
                cells.push(cell_from_token(token)?);
            }
            Some(PuzzleState::Checkers(CheckersBoard::from_cells(cells)))
        }
        PuzzleKind::Hanoi => {
            if items.len() != 3 {
                return None;
            }
            let mut pegs: [Vec<u32>; 3] = Default::default();
            for (peg, item) in pegs.iter_mut().zip(items) {
                let Value::List(disks) = item else {
                    return None;
                };
                for d in disks {
                    let Value::Int(d) = d else {
                        return None;
                    };
                    if *d < 1 {
                        return None;
                    }
                    peg.push(*d as u32);
                }
            }
            Some(PuzzleState::Hanoi(HanoiState::from_pegs(pegs)))
        }
    }
}

fn step_from_record(fields: &[(String, Value)], kind: PuzzleKind) -> Option<Step> {
    let mut mv = None;
    let mut state = None;
    let mut step_id = None;
    for (key, value) in fields {
        match key.as_str() {
            "move" => mv = Some(move_from_value(value, kind)?),
            // 'new_state' wins over 'state' when a record carries both
            // (atomic replies sometimes echo the old state under 'state').
            "new_state" => state = Some(state_from_value(value, kind)?),
            "state" => {
                if state.is_none() {
                    state = Some(state_from_value(value, kind)?);
                }
            }
            "step_id" | "new_step_id" => {
                let Value::Int(id) = value else {
                    return None;
                };
                if *id < 0 {
                    return None;
                }
                step_id = Some(*id as u32);
            }
            // Other keys (e.g. 'old_state') are informational.
            _ => {}
        }
    }
    Some(Step {
        mv: mv?,
        state: state?,
        step_id,
    })
}

fn steps_from_value(value: &Value, kind: PuzzleKind) -> Option<Vec<Step>> {
    match value {
        Value::Record(fields) => Some(vec![step_from_record(fields, kind)?]),
        Value::List(items) => {
            let mut steps = Vec::with_capacity(items.len());
            for item in items {
                let Value::Record(fields) = item else {
                    return None;
                };
                steps.push(step_from_record(fields, kind)?);
            }
            Some(steps)
        }
        _ => None,
    }
}

fn is_word_boundary(bytes: &[u8], idx: usize) -> bool {
    idx == 0 || {
        let b = bytes[idx - 1];
        !(b.is_ascii_alphanumeric() || b == b'_')
    }
}

/// Extracts the steps of the last well-formed `solution = ...` or
/// `moves = ...` assignment in free text. Returns `None` when no
/// assignment parses.
pub fn parse_steps(text: &str, kind: PuzzleKind) -> Option<Vec<Step>> {
    let bytes = text.as_bytes();
    let mut best: Option<(usize, Vec<Step>)> = None;
    for keyword in ["solution", "moves"] {
        let mut search = 0;
        while let Some(found) = text[search..].find(keyword) {
            let at = search + found;
            search = at + keyword.len();
            if !is_word_boundary(bytes, at) {
                continue;
            }
            let mut cursor = Cursor::new(text, at + keyword.len());
            cursor.skip_ws();
            if !cursor.eat(b'=') {
                continue;
            }
            if let Some(steps) = cursor.parse_value().and_then(|v| steps_from_value(&v, kind)) {
                match &best {
                    Some((pos, _)) if *pos > at => {}
                    _ => best = Some((at, steps)),
                }
            }
        }
    }
    best.map(|(_, steps)| steps)
}

/// Parses an agent reply and grades it against the expected step count.
/// A sequence that ends at the goal for size `n` counts as complete even
/// when shorter than requested.
pub fn parse_solution_text(
    text: &str,
    kind: PuzzleKind,
    expect: Expect,
    n: usize,
) -> (Vec<Step>, ParseStatus) {
    let Some(mut steps) = parse_steps(text, kind) else {
        return (Vec::new(), ParseStatus::Malformed);
    };
    match expect {
        Expect::Exactly(k) => {
            if steps.len() >= k {
                steps.truncate(k);
                (steps, ParseStatus::Ok)
            } else if steps.last().is_some_and(|s| s.state.is_goal(n)) {
                (steps, ParseStatus::Ok)
            } else if steps.is_empty() {
                (steps, ParseStatus::Malformed)
            } else {
                (steps, ParseStatus::Truncated)
            }
        }
        Expect::AtLeastOne => {
            if steps.is_empty() {
                (steps, ParseStatus::Malformed)
            } else {
                (steps, ParseStatus::Ok)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puzzle::PuzzleKind;

    const LISTING_HANOI_N3: &str = "solution = [
  {'move': [1, 0, 2], 'state': [[3, 2], [], [1]]},
  {'move': [2, 0, 1], 'state': [[3], [2], [1]]},
  {'move': [1, 2, 1], 'state': [[3], [2, 1], []]},
  {'move': [3, 0, 2], 'state': [[], [2, 1], [3]]},
  {'move': [1, 1, 0], 'state': [[1], [2], [3]]},
  {'move': [2, 1, 2], 'state': [[1], [], [3, 2]]},
  {'move': [1, 0, 2], 'state': [[], [], [3, 2, 1]]},
]";

    #[test]
    fn parses_full_hanoi_listing() {
        let steps = parse_steps(LISTING_HANOI_N3, PuzzleKind::Hanoi).unwrap();
        assert_eq!(steps.len(), 7);
        assert_eq!(
            steps[3].mv,
            PuzzleMove::Hanoi(crate::puzzle::HanoiMove::new(3, 0, 2))
        );
        assert!(steps[6].state.is_goal(3));
    }

    #[test]
    fn writer_reproduces_the_listing_format() {
        let steps = PuzzleKind::Hanoi.oracle_solve(3).unwrap();
        assert_eq!(render_solution_listing(&steps), LISTING_HANOI_N3);
    }

    #[test]
    fn parses_single_record_with_new_state() {
        let text = "solution = {'move': ['B', 3, 1], 'new_state': ['R', 'B', 'R', '_', 'B']}";
        let steps = parse_steps(text, PuzzleKind::Checkers).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(
            canonical_key(&steps[0]),
            "{'move': ['B', 3, 1], 'state': ['R', 'B', 'R', '_', 'B']}"
        );
    }

    #[test]
    fn keeps_the_last_assignment_and_skips_drafts() {
        let text = "First try:\nsolution = {'move': ['R', 0, 1], 'new_state': ['_', 'R', 'B']}\n\
                    The format reminder says solution = {'move': <move>, 'new_state': <new state>}.\n\
                    Final answer:\nsolution = {'move': ['B', 2, 1], 'new_state': ['R', 'B', '_']}";
        let steps = parse_steps(text, PuzzleKind::Checkers).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(move_text(&steps[0].mv), "['B', 2, 1]");
    }

    #[test]
    fn tolerates_prose_double_quotes_and_trailing_commas() {
        let text = r#"Sure, here are the moves:
moves = [
  {"move": ["R", 0, 1], "state": ["_", "R", "B"],},
]
Hope this helps!"#;
        let steps = parse_steps(text, PuzzleKind::Checkers).unwrap();
        assert_eq!(steps.len(), 1);
    }

    #[test]
    fn accepts_step_id_variants_and_ignores_old_state() {
        let text = "solution = {'step_id': 4, 'move': [3, 0, 2], 'old_state': [[3], [2, 1], []], 'state': [[], [2, 1], [3]]}";
        let steps = parse_steps(text, PuzzleKind::Hanoi).unwrap();
        assert_eq!(steps[0].step_id, Some(4));
        assert_eq!(state_text(&steps[0].state), "[[], [2, 1], [3]]");

        let text = "solution = {'new_step_id': 1, 'move': [1, 0, 1], 'new_state': [[4, 3, 2], [1], []]}";
        let steps = parse_steps(text, PuzzleKind::Hanoi).unwrap();
        assert_eq!(steps[0].step_id, Some(1));
    }

    #[test]
    fn garbage_is_malformed() {
        let (steps, status) = parse_solution_text(
            "I cannot solve this.",
            PuzzleKind::Checkers,
            Expect::AtLeastOne,
            3,
        );
        assert!(steps.is_empty());
        assert_eq!(status, ParseStatus::Malformed);
    }

    #[test]
    fn expectation_grading() {
        let text = "moves = [
  {'move': ['R', 0, 1], 'state': ['_', 'R', 'B']},
  {'move': ['B', 2, 0], 'state': ['B', 'R', '_']},
]";
        let (steps, status) =
            parse_solution_text(text, PuzzleKind::Checkers, Expect::Exactly(2), 1);
        assert_eq!((steps.len(), status), (2, ParseStatus::Ok));

        // Fewer steps than requested, not ending at the goal.
        let (steps, status) =
            parse_solution_text(text, PuzzleKind::Checkers, Expect::Exactly(5), 1);
        assert_eq!((steps.len(), status), (2, ParseStatus::Truncated));

        // Extra records beyond the request are dropped.
        let (steps, status) =
            parse_solution_text(text, PuzzleKind::Checkers, Expect::Exactly(1), 1);
        assert_eq!((steps.len(), status), (1, ParseStatus::Ok));

        // A short reply that reaches the goal is complete.
        let goal_text = "moves = [
  {'move': ['R', 1, 2], 'state': ['B', '_', 'R']},
]";
        let (steps, status) =
            parse_solution_text(goal_text, PuzzleKind::Checkers, Expect::Exactly(4), 1);
        assert_eq!((steps.len(), status), (1, ParseStatus::Ok));
    }

    #[test]
    fn corrupted_boards_still_parse() {
        // A claim with the wrong board length must survive parsing: the
        // grader, not the parser, judges it.
        let text = "solution = {'move': ['R', 17, 19], 'new_state': ['B', 'B', 'R', '_']}";
        let steps = parse_steps(text, PuzzleKind::Checkers).unwrap();
        assert_eq!(steps.len(), 1);
    }

    #[test]
    fn atomic_render_round_trips() {
        let steps = PuzzleKind::Hanoi.oracle_solve(3).unwrap();
        let text = render_atomic_solution(&steps[3]);
        assert_eq!(
            text,
            "solution = {'new_step_id': 4, 'move': [3, 0, 2], 'new_state': [[], [2, 1], [3]]}"
        );
        let parsed = parse_steps(&text, PuzzleKind::Hanoi).unwrap();
        assert_eq!(parsed[0], steps[3]);
    }
}
