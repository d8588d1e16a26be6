//! Deterministic prompt rendering. Each puzzle has a fixed prefix with
//! the rules and the optimal solution strategy; only the task block at
//! the end varies with the execution strategy and the instance.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::agents::{AgentError, PromptVariant};
use crate::listing::state_text;
use crate::puzzle::{PuzzleKind, PuzzleState};

/// Extra task-block inputs beyond the anchor state.
#[derive(Debug, Clone, Default)]
pub struct PromptExtra {
    /// Rollout depth, required by the lookahead variant.
    pub depth: Option<usize>,
    /// Number of moves already played (the Hanoi configuration index).
    pub step_id: Option<usize>,
    /// Warm-up instance size for the curriculum variant.
    pub warmup_n: Option<usize>,
}

/// A rendered prompt plus what transcripts store in place of the full
/// text: a hash of the fixed template and the instance substitutions.
#[derive(Debug, Clone)]
pub struct RenderedPrompt {
    pub text: String,
    pub template_hash: String,
    pub substitutions: BTreeMap<String, String>,
}

const CHECKERS_RULES: &str = r#"Here is the puzzle.

I have a one-dimensional board with 2*N+1 cells, where N red checkers ('R') on the left, N blue checkers ('B') on the right, and one empty cell ('_') in between are arranged in a line.
The goal is to swap the positions of red and blue checkers, effectively mirroring the initial state.

Rules:
- Checkers can only move forward (towards the opposite side). More explicitly, red checkers can only move to the right, and blue checkers can only move to the left.
- A checker can slide forward into an adjacent cell, provided that this cell is empty.
- A checker can jump forward over one adjacent checker of opposite color, landing in the cell two spaces ahead (i.e., over the jumped checker), provided that this cell is empty. Note that the checker CAN NOT jump over the checker of its own color and CAN NOT jump over more than one checker.

The positions of the board are indexed from 0 (the leftmost cell) to 2*N (the rightmost cell).
We represent each move as a list of the form [<checker_color>, <position_from>, <position_to>].

Now, let's design a solution to this puzzle.

When we have a continuous block of the blue checkers adjacent to the left corner, these blue checkers have already arrived to their designated place and can not (and should not) be moved. The same with the continuous block of red checkers adjacent to the right corner. In both cases, we call such a block the ***complete block*** (in a sense that these checkers have already completed their movement).
Consequently, a blue checker is considered to be a part of a complete block, if all the cells to its left are occupied by the other blue checkers.
Similarly, a red checker is considered to be a part of a complete block, if all the cells to its right are occupied by the other red checkers.

Now, let's find out the losing position (i.e. the one for which it's impossible to reach the goal state) that we want to avoid:
 - (P1): if we have ['_', 'R', 'R'] segment on the board, and these two red checkers are not a part of a complete block, this position is losing.
 - (P2): similarly, if we have ['B', 'B', '_'] segment on the board, and these two blue checkers are not a part of a complete block, this position is losing.
 - (P3): besides, if we have ['B', '_', 'R'] segment on the board, where neither the 'B' nor the 'R' checker is a part of its complete block, this position is also losing.
Thus, when solving the puzzle, we have to avoid any move that leads to the positions (P1), (P2), or (P3).

Finally, it turns out that any valid move that does not lead to any of the losing positions (P1), (P2), or (P3), is an optimal move. It means that it's possible to solve the puzzle optimally after making such a move.

### Solution strategy
The following simple strategy will lead to the optimal solution of the puzzle: at each step, we have to select a move that does not lead to any of the losing positions (P1), (P2), or (P3).
If there multiple moves satisfying this condition, select any of them.
One may show that as long as we follow this strategy, we will always have at least one move satisfying this condition.
"#;

const CHECKERS_ALGORITHM: &str = r#"### Efficient Algorithm for Finding an Optimal Move and Executing It

Here's how to efficiently compute optimal moves for any board configuration:

**Step 1: Find the empty position**
- Scan the board once to find the position of '_'
- `empty_pos`: The index (0-based) of the empty cell on the board

**Step 2: Identify movement patterns around the empty cell**
Check the following patterns in O(1) time by examining cells adjacent to the empty position:

- `['R', '_']_pattern`: Boolean indicating if there's a red checker immediately to the left of the empty cell
  - Check: `board[empty_pos - 1] == 'R'` (if `empty_pos > 0`)
- `['_', 'B']_pattern`: Boolean indicating if there's a blue checker immediately to the right of the empty cell
  - Check: `board[empty_pos + 1] == 'B'` (if `empty_pos < len(board) - 1`)
- `['R', 'B', '_']_pattern`: Boolean indicating if there's a red checker that can jump over a blue checker into the empty cell
  - Check: `board[empty_pos - 2] == 'R'` and `board[empty_pos - 1] == 'B'` (if `empty_pos > 1`)
- `['_', 'R', 'B']_pattern`: Boolean indicating if there's a blue checker that can jump over a red checker into the empty cell
  - Check: `board[empty_pos + 1] == 'R'` and `board[empty_pos + 2] == 'B'` (if `empty_pos < len(board) - 2`)

**Step 3: Generate valid moves**
Based on the patterns above, construct the list of all valid moves:

- If `['R', '_']_pattern` is True -> add `['R', empty_pos - 1, empty_pos]` (red checker slides right)
- If `['_', 'B']_pattern` is True -> add `['B', empty_pos + 1, empty_pos]` (blue checker slides left)
- If `['R', 'B', '_']_pattern` is True -> add `['R', empty_pos - 2, empty_pos]` (red checker jumps over blue)
- If `['_', 'R', 'B']_pattern` is True -> add `['B', empty_pos + 2, empty_pos]` (blue checker jumps over red)

**Step 4: Filter optimal moves**
For each valid move, simulate the resulting board state and check if it creates any losing patterns:

For move `[color, from_pos, to_pos]`:

1. **Simulate the move:**
   - `next_state`: Copy of the current board with the move applied
     - Set `next_state[from_pos] = '_'` (source position becomes empty)
     - Set `next_state[to_pos] = color` (destination gets the checker)
   - `next_empty_pos`: Position of the empty cell after the move (equals `from_pos`)

2. **Find complete blocks in the resulting state:**
   - `next_left_block_end`: Rightmost position of the complete blue block from the left corner
     - Scan from left until first non-'B' cell, return position-1 (or -1 if no complete blue block exists)
   - `next_right_block_start`: Leftmost position of the complete red block from the right corner
     - Scan from right until first non-'R' cell, return position+1 (or `len(board)` if no complete red block exists)

3. **Check for losing patterns:**

   **Pattern P1 `['_', 'R', 'R']`:**
   - `p1_found`: Boolean indicating if the pattern `['_', 'R', 'R']` exists starting at `next_empty_pos`
     - Check: `next_empty_pos <= len(board)-3` and `next_state[next_empty_pos+1] == 'R'` and `next_state[next_empty_pos+2] == 'R'`
   - `is_red_complete`: Boolean indicating if the two red checkers in the pattern are part of a complete red block
     - Check: `next_empty_pos+2 >= next_right_block_start` (if `p1_found` is True)
   - `p1_losing`: Boolean indicating if this pattern makes the position losing
     - Value: `p1_found and not is_red_complete`

   **Pattern P2 `['B', 'B', '_']`:**
   - `p2_found`: Boolean indicating if the pattern `['B', 'B', '_']` exists ending at `next_empty_pos`
     - Check: `next_empty_pos >= 2` and `next_state[next_empty_pos-2] == 'B'` and `next_state[next_empty_pos-1] == 'B'`
   - `is_blue_complete`: Boolean indicating if the two blue checkers in the pattern are part of a complete blue block
     - Check: `next_empty_pos-2 <= next_left_block_end` (if `p2_found` is True)
   - `p2_losing`: Boolean indicating if this pattern makes the position losing
     - Value: `p2_found and not is_blue_complete`

   **Pattern P3 `['B', '_', 'R']`:**
   - `p3_found`: Boolean indicating if the pattern `['B', '_', 'R']` exists centered at `next_empty_pos`
     - Check: `next_empty_pos >= 1` and `next_empty_pos <= len(board)-2` and `next_state[next_empty_pos-1] == 'B'` and `next_state[next_empty_pos+1] == 'R'`
   - `is_blue_complete`: Boolean indicating if the blue checker in the pattern is part of a complete blue block
     - Check: `next_empty_pos-1 <= next_left_block_end` (if `p3_found` is True)
   - `is_red_complete`: Boolean indicating if the red checker in the pattern is part of a complete red block
     - Check: `next_empty_pos+1 >= next_right_block_start` (if `p3_found` is True)
   - `p3_losing`: Boolean indicating if this pattern makes the position losing
     - Value: `p3_found and not is_blue_complete and not is_red_complete`

4. **Determine if move is optimal:**
   - The move is optimal if `not (p1_losing or p2_losing or p3_losing)`

**Step 5: Execute the first optimal move**
Once all valid moves have been filtered:

1. **Select the move:**
   - `selected_move`: The first move from the `optimal_moves` list
     - Format: `[color, from_pos, to_pos]`

2. **Execute the move:**
   - `new_state`: Copy of the current board
   - Set `new_state[from_pos] = '_'` (source position becomes empty)
   - Set `new_state[to_pos] = color` (destination gets the checker)

3. **Return the result:**
   - Return a dictionary with the selected move and the resulting board state
   - Format: `{'move': selected_move, 'new_state': new_state}`
"#;

const CHECKERS_ATOMIC_INTRO: &str = r#"You DO NOT need to solve the puzzle.
Instead, you will be given an intermediate position of the game, and you have to find an optimal move for this position and execute it, outputting the subsequent state.

"#;

const CHECKERS_ATOMIC_EXAMPLE: &str = r#"You will be given a position of the board, and your task is to find an optimal move for this position and execute it, outputting the subsequent state (see example below).

For instance, assume N = 2 and the following position is given:

position = ['R', '_', 'R', 'B', 'B']

The solution for this query is the following:

solution = {'move': ['B', 3, 1], 'new_state': ['R', 'B', 'R', '_', 'B']}

"#;

const HANOI_RULES: &str = r#"Here is the puzzle.

There are three pegs and N disks of different sizes stacked on the first peg from the largest (on the bottom) to the smallest (on top).
The disks are numbered from 1 (smallest) to N (largest). We denote the pegs as peg_0, peg_1, and peg_2, where peg_0 is the first (starting peg), and peg_2 is the third (destination) peg.

Rules:
1. Only one disk can be moved at a time.
2. Each move consists of taking the upper disk from one stack and placing it on top of another stack.
3. A larger disk may not be placed on top of a smaller disk.

The goal is to move the entire stack to the third peg.

We represent each step as a dict with the following items:
- "step_id": int, index of the current move.
- "move": a list of the form [disk_number, peg_from, peg_to]
  - disk_number -> the number of the disk being moved (1 = smallest)
  - peg_from -> the index (0-2) of the peg the disk is moved from
  - peg_to -> the index (0-2) of the peg the disk is moved to
- "state": a list of three lists representing the configuration of the pegs after the move
  - Each inner list represents one peg (peg 0, peg 1, peg 2)
  - Each peg list contains the disks currently on that peg, ordered from bottom (on the left) to top (on the right)
"#;

const HANOI_ATOMIC_INTRO: &str = r#"You DO NOT need to solve the whole puzzle.
Instead, you will be given an intermediate position in the game (together witg the last step index), and your task is to output the next step (see example below).

For instance, assume N = 3 and the following configuration is given:

configuration = {'step_id': 3, 'state': [[3], [2, 1], []]}

The solution for this query is the following:

solution = {'step_id': 4, 'move': [3, 0, 2], 'old_state': [[3], [2, 1], []], 'state': [[], [2, 1], [3]]}

"#;

const HANOI_ALGORITHM: &str = r#"### Iterative Solution for Tower of Hanoi

Here is the algorithm how to perform the next step in the solution, given the current configuration as follows:

configuration = {step_id: <step_id>, state: <state>}

Algorithm:

1. Calculate number of completed moves:
    num_moves = step_id

2. Find a correct move:

    If num_moves is even:
        - Find the peg which contains disk 1 on its top. Denote this peg as peg_i
        - Define the movement cycle for the smallest disk based on the parity of N (total number of disks):
            - If N is odd: cycle = [peg_0, peg_2, peg_1]
            - If N is even: cycle = [peg_0, peg_1, peg_2]
        - Let peg_j be the next peg after peg_i in cycle (in cyclic order, meaning that the the next peg after cycle[-1] is cycle[0])
        - Move disk 1 from peg_i to peg_j:
            move = [1, peg_i, peg_j]

    If num_moves is odd:
        - Sort the three pegs by the size of their top disk in descending order (treating an empty peg as having an infinitely large top disk).
            Denote sorted pegs as peg_i, peg_j peg_k (meaning that peg_i has the largest disk on top, peg_k - the smallest).
            Let d be the number of the top disk on peg_j.
        - Move disk d from peg_j to peg_i:
            move = [d, peg_j, peg_i]

3. Execute the move:
    - Let the found move be
        move = [<disk_number>, <peg_from>, <peg_to>]
    - Update state:
        - create new_state as a copy of state
        - remove the last element from new_state[peg_from] list
        - append <disk_number> to new_state[peg_to] list

4. Update the step_id:
    - new_step_id = step_id + 1

5. Output the new step:
    solution = {'new_step_id': new_step_id, 'move': move, 'new_state': new_state}
"#;

fn checkers_task(variant: PromptVariant, extra: &PromptExtra) -> Result<String, AgentError> {
    Ok(match variant {
        PromptVariant::Atomic => "### Task
Consider this puzzle for N = {n} and the following position of the board:

position = {state}

Find an optimal move for this position and the new state after executing this move.

Requirements
- Your final answer must be in the following format:

solution = {'move': <move>, 'new_state': <new state>}
"
        .to_string(),
        PromptVariant::Iterative => "### Task
Consider this puzzle for N = {n} and the following position of the board:

position = {state}

Continue the solution from the given position.
If you can complete the solution, output the entire solution completion. Otherwise, output the partial solution that you were able to find.

Requirements
- Your final answer must be in the following format:

moves = [
  {'move': [<checker_color>, <position_from>, <position_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
        .to_string(),
        PromptVariant::Lookahead => {
            if extra.depth.is_none() {
                return Err(AgentError::UnsupportedVariant(
                    "lookahead prompt requires a rollout depth".into(),
                ));
            }
            "### Task
Consider this puzzle for N = {n} and the following position of the board:

position = {state}

Execute the next {k} optimal moves from the given position, outputting each move together with the subsequent state.
If the puzzle is solved in fewer than {k} moves, stop at the goal state.

Requirements
- Your final answer must be in the following format:

moves = [
  {'move': [<checker_color>, <position_from>, <position_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
            .to_string()
        }
        PromptVariant::SingleShot => "### Task
Consider this puzzle for N = {n} and the following initial position of the board:

position = {state}

Solve the puzzle completely, outputting every move together with the subsequent state.

Requirements
- Your final answer must be in the following format:

solution = [
  {'move': [<checker_color>, <position_from>, <position_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
        .to_string(),
        PromptVariant::Curriculum => "### Task
First, as a warm-up, solve this puzzle for N = {warmup_n} starting from the following position:

position = {warmup_state}

Then, within this same response, solve the target puzzle for N = {n} starting from the following position:

position = {state}

Requirements
- Your final answer must list the warm-up solution steps followed by the target solution steps, as a single list in the following format:

solution = [
  {'move': [<checker_color>, <position_from>, <position_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
        .to_string(),
    })
}

fn hanoi_task(variant: PromptVariant, extra: &PromptExtra) -> Result<String, AgentError> {
    Ok(match variant {
        PromptVariant::Atomic => "# Task:
Consider this puzzle for N = {n} and the following configuration of the game:

configuration = {step_id: {id}, state: {state}}

Requirements:
- Your final answer must be in the following format:

solution = {'new_step_id': <new_step_id>, 'move': <move>, 'new_state': <new_state>}
"
        .to_string(),
        PromptVariant::Iterative => "# Task:
Consider this puzzle for N = {n} and the following configuration of the game:

configuration = {step_id: {id}, state: {state}}

Continue the solution from the given configuration.
If you can complete the solution, output the entire solution completion. Otherwise, output the partial solution that you were able to find.

Requirements:
- Your final answer must be in the following format:

moves = [
  {'move': [<disk_number>, <peg_from>, <peg_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
        .to_string(),
        PromptVariant::Lookahead => {
            if extra.depth.is_none() {
                return Err(AgentError::UnsupportedVariant(
                    "lookahead prompt requires a rollout depth".into(),
                ));
            }
            "# Task:
Consider this puzzle for N = {n} and the following configuration of the game:

configuration = {step_id: {id}, state: {state}}

Execute the next {k} steps of the solution from the given configuration, outputting each move together with the subsequent state.
If the puzzle is solved in fewer than {k} moves, stop at the goal state.

Requirements:
- Your final answer must be in the following format:

moves = [
  {'move': [<disk_number>, <peg_from>, <peg_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
            .to_string()
        }
        PromptVariant::SingleShot => "# Task:
Consider this puzzle for N = {n} and the following configuration of the game:

configuration = {step_id: {id}, state: {state}}

Solve the puzzle completely, outputting every move together with the subsequent state.

Requirements:
- Your final answer must be in the following format:

solution = [
  {'move': [<disk_number>, <peg_from>, <peg_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
        .to_string(),
        PromptVariant::Curriculum => "# Task:
First, as a warm-up, solve this puzzle for N = {warmup_n} from the following configuration:

configuration = {step_id: 0, state: {warmup_state}}

Then, within this same response, solve the target puzzle for N = {n} from the following configuration:

configuration = {step_id: 0, state: {state}}

Requirements:
- Your final answer must list the warm-up solution steps followed by the target solution steps, as a single list in the following format:

solution = [
  {'move': [<disk_number>, <peg_from>, <peg_to>], 'state': <subsequent state>},
  ...
]

- Do not include any explanatory comments in the final output.
"
        .to_string(),
    })
}

fn template(
    variant: PromptVariant,
    kind: PuzzleKind,
    extra: &PromptExtra,
) -> Result<String, AgentError> {
    let mut t = String::new();
    match kind {
        PuzzleKind::Checkers => {
            t.push_str(CHECKERS_RULES);
            t.push('\n');
            if variant == PromptVariant::Atomic {
                t.push_str(CHECKERS_ATOMIC_INTRO);
            }
            t.push_str(CHECKERS_ALGORITHM);
            t.push('\n');
            if variant == PromptVariant::Atomic {
                t.push_str(CHECKERS_ATOMIC_EXAMPLE);
            }
            t.push_str(&checkers_task(variant, extra)?);
        }
        PuzzleKind::Hanoi => {
            t.push_str(HANOI_RULES);
            t.push('\n');
            if variant == PromptVariant::Atomic {
                t.push_str(HANOI_ATOMIC_INTRO);
            }
            t.push_str(HANOI_ALGORITHM);
            t.push('\n');
            t.push_str(&hanoi_task(variant, extra)?);
        }
    }
    Ok(t)
}

/// Renders the prompt together with its template hash and substitution
/// map. Pure in all arguments.
pub fn render_prompt_full(
    variant: PromptVariant,
    kind: PuzzleKind,
    n: usize,
    anchor_state: &PuzzleState,
    extra: &PromptExtra,
) -> Result<RenderedPrompt, AgentError> {
    let template = template(variant, kind, extra)?;
    let mut subs = BTreeMap::new();
    subs.insert("n".to_string(), n.to_string());
    subs.insert("state".to_string(), state_text(anchor_state));
    if matches!(kind, PuzzleKind::Hanoi) {
        subs.insert(
            "id".to_string(),
            extra.step_id.unwrap_or_default().to_string(),
        );
    }
    if let Some(k) = extra.depth {
        subs.insert("k".to_string(), k.to_string());
    }
    if variant == PromptVariant::Curriculum {
        let warmup_n = extra.warmup_n.unwrap_or(2);
        subs.insert("warmup_n".to_string(), warmup_n.to_string());
        subs.insert(
            "warmup_state".to_string(),
            state_text(&kind.initial(warmup_n)?),
        );
    }
    let mut text = template.clone();
    for (key, value) in &subs {
        text = text.replace(&format!("{{{key}}}"), value);
    }
    let template_hash = Sha256::digest(template.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    Ok(RenderedPrompt {
        text,
        template_hash,
        substitutions: subs,
    })
}

/// The prompt text alone.
pub fn render_prompt(
    variant: PromptVariant,
    kind: PuzzleKind,
    n: usize,
    anchor_state: &PuzzleState,
    extra: &PromptExtra,
) -> Result<String, AgentError> {
    Ok(render_prompt_full(variant, kind, n, anchor_state, extra)?.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puzzle::{Cell, CheckersBoard};

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
    fn atomic_checkers_prompt_contains_task_position() {
        let text = render_prompt(
            PromptVariant::Atomic,
            PuzzleKind::Checkers,
            3,
            &board("BBBR_RR"),
            &PromptExtra::default(),
        )
        .unwrap();
        assert!(text.contains("position = ['B', 'B', 'B', 'R', '_', 'R', 'R']"));
        assert!(text.contains("Consider this puzzle for N = 3"));
        assert!(text.contains("solution = {'move': <move>, 'new_state': <new state>}"));
    }

    #[test]
    fn iterative_checkers_prompt_asks_to_continue() {
        let text = render_prompt(
            PromptVariant::Iterative,
            PuzzleKind::Checkers,
            3,
            &PuzzleKind::Checkers.initial(3).unwrap(),
            &PromptExtra::default(),
        )
        .unwrap();
        assert!(text.contains("Continue the solution from the given position."));
        assert!(text.contains("position = ['R', 'R', 'R', '_', 'B', 'B', 'B']"));
    }

    #[test]
    fn atomic_hanoi_prompt_contains_configuration() {
        let text = render_prompt(
            PromptVariant::Atomic,
            PuzzleKind::Hanoi,
            4,
            &PuzzleKind::Hanoi.initial(4).unwrap(),
            &PromptExtra {
                step_id: Some(0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(text.contains("configuration = {step_id: 0, state: [[4, 3, 2, 1], [], []]}"));
        assert!(text.contains("Consider this puzzle for N = 4"));
    }

    #[test]
    fn lookahead_prompt_names_the_depth() {
        let text = render_prompt(
            PromptVariant::Lookahead,
            PuzzleKind::Checkers,
            3,
            &PuzzleKind::Checkers.initial(3).unwrap(),
            &PromptExtra {
                depth: Some(8),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(text.contains("Execute the next 8 optimal moves"));
        assert!(matches!(
            render_prompt(
                PromptVariant::Lookahead,
                PuzzleKind::Checkers,
                3,
                &PuzzleKind::Checkers.initial(3).unwrap(),
                &PromptExtra::default(),
            ),
            Err(AgentError::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn curriculum_prompt_prepends_the_warmup_instance() {
        let text = render_prompt(
            PromptVariant::Curriculum,
            PuzzleKind::Checkers,
            5,
            &PuzzleKind::Checkers.initial(5).unwrap(),
            &PromptExtra::default(),
        )
        .unwrap();
        let warmup = text.find("N = 2").unwrap();
        let target = text.find("N = 5").unwrap();
        assert!(warmup < target);
        assert!(text.contains("position = ['R', 'R', '_', 'B', 'B']"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let args = (
            PromptVariant::Atomic,
            PuzzleKind::Checkers,
            3,
            PuzzleKind::Checkers.initial(3).unwrap(),
        );
        let a = render_prompt_full(args.0, args.1, args.2, &args.3, &PromptExtra::default())
            .unwrap();
        let b = render_prompt_full(args.0, args.1, args.2, &args.3, &PromptExtra::default())
            .unwrap();
        assert_eq!(a.text, b.text);
        assert_eq!(a.template_hash, b.template_hash);
        assert_eq!(a.substitutions, b.substitutions);
    }
}
