//! The ground-truth agent: replays the deterministic optimal trajectory.

use crate::agents::{
    AgentError, PromptVariant, RolloutRequest, RolloutResponse, StepAgent,
};
use crate::puzzle::{PuzzleError, PuzzleKind, PuzzleState, Step};

/// Always answers with the next steps of the optimal solution. Requests
/// anchored anywhere else fail with [`AgentError::OffTrajectory`].
pub struct OracleAgent {
    kind: PuzzleKind,
    n: usize,
    /// `states[i]` is the position before step `i`; the last entry is
    /// the goal.
    states: Vec<PuzzleState>,
    steps: Vec<Step>,
    max_steps_per_call: Option<usize>,
    warmup_n: usize,
}

impl OracleAgent {
    pub fn new(kind: PuzzleKind, n: usize) -> Result<Self, PuzzleError> {
        let steps = kind.oracle_solve(n)?;
        let mut states = Vec::with_capacity(steps.len() + 1);
        states.push(kind.initial(n)?);
        states.extend(steps.iter().map(|s| s.state.clone()));
        Ok(OracleAgent {
            kind,
            n,
            states,
            steps,
            max_steps_per_call: None,
            warmup_n: 2,
        })
    }

    /// Caps how many steps a single reply carries, which makes the
    /// iterative-restart strategy take several rounds even with a
    /// perfect agent.
    pub fn with_max_steps_per_call(mut self, cap: usize) -> Self {
        self.max_steps_per_call = Some(cap.max(1));
        self
    }

    pub fn trajectory(&self) -> &[Step] {
        &self.steps
    }

    /// Position before step `index`.
    pub fn state_before(&self, index: usize) -> Option<&PuzzleState> {
        self.states.get(index)
    }
}

impl StepAgent for OracleAgent {
    fn rollout(&self, request: &RolloutRequest) -> Result<RolloutResponse, AgentError> {
        if request.kind != self.kind || request.n != self.n {
            return Err(AgentError::OffTrajectory);
        }
        if request.anchor_state.is_goal(self.n) {
            return Ok(RolloutResponse::from_steps(Vec::new(), request));
        }
        if self.states.get(request.anchor_index) != Some(&request.anchor_state) {
            return Err(AgentError::OffTrajectory);
        }
        let remaining = self.steps.len() - request.anchor_index;
        let take = request
            .depth
            .min(remaining)
            .min(self.max_steps_per_call.unwrap_or(usize::MAX));
        let mut steps: Vec<Step> = Vec::with_capacity(take + 8);
        if request.variant == PromptVariant::Curriculum {
            steps.extend(self.kind.oracle_solve(self.warmup_n)?);
        }
        steps.extend(
            self.steps[request.anchor_index..request.anchor_index + take]
                .iter()
                .cloned(),
        );
        Ok(RolloutResponse::from_steps(steps, request))
    }

    fn label(&self) -> String {
        "oracle".to_string()
    }
}
