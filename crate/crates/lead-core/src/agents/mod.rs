//! Step agents: anything that, given an anchor state, predicts one or
//! more future steps. Three implementations ship with the harness — a
//! perfect oracle, a seeded stochastic mock reproducing the error modes
//! observed in real models, and a remote chat-completion endpoint — plus
//! a scripted agent for structural tests.

pub mod endpoint;
pub mod mock;
pub mod oracle;
pub mod prompt;
pub mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::listing::{self, Expect};
use crate::puzzle::{PuzzleError, PuzzleKind, PuzzleState, Step};

pub use crate::listing::ParseStatus;
pub use endpoint::{EndpointAgent, EndpointConfig};
pub use mock::{MockAgent, MockErrorKind, MockErrorProfile};
pub use oracle::OracleAgent;
pub use prompt::{render_prompt, render_prompt_full, PromptExtra, RenderedPrompt};
pub use scripted::ScriptedAgent;

/// Which prompt family a request uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Atomic,
    Lookahead,
    Iterative,
    SingleShot,
    Curriculum,
}

/// A request for a rollout of up to `depth` future steps starting at
/// `anchor_state`, which the caller believes is the position before step
/// `anchor_index` (0-based). `attempt` is the resample ordinal; together
/// with the agent seed and the anchor index it fully determines a mock
/// agent's randomness, so concurrent calls stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRequest {
    pub kind: PuzzleKind,
    pub n: usize,
    pub anchor_state: PuzzleState,
    pub anchor_index: usize,
    pub depth: usize,
    pub variant: PromptVariant,
    pub attempt: u64,
}

impl RolloutRequest {
    /// Expected reply shape for this request.
    pub fn expectation(&self) -> Expect {
        match self.variant {
            PromptVariant::Atomic => Expect::Exactly(1),
            PromptVariant::Lookahead => Expect::Exactly(self.depth),
            PromptVariant::Iterative | PromptVariant::SingleShot | PromptVariant::Curriculum => {
                Expect::AtLeastOne
            }
        }
    }
}

/// Token accounting reported by an endpoint, when available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

/// An agent reply: the verbatim text, the parsed steps, and how the
/// parse went. Latency is reported only by remote agents, so local runs
/// serialize identically across machines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResponse {
    pub steps: Vec<Step>,
    pub raw_text: String,
    pub parse_status: ParseStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub usage: Option<Usage>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latency_ms: Option<u64>,
}

impl RolloutResponse {
    /// Builds a response from steps the agent produced itself, rendering
    /// the raw text in the reply format the variant calls for.
    pub fn from_steps(steps: Vec<Step>, request: &RolloutRequest) -> Self {
        let raw_text = match request.variant {
            PromptVariant::Atomic => match steps.first() {
                Some(step) => listing::render_atomic_solution(step),
                None => listing::render_moves_listing(&steps),
            },
            PromptVariant::Lookahead | PromptVariant::Iterative => {
                listing::render_moves_listing(&steps)
            }
            PromptVariant::SingleShot | PromptVariant::Curriculum => {
                listing::render_solution_listing(&steps)
            }
        };
        let parse_status = response_status(&steps, request);
        RolloutResponse {
            steps,
            raw_text,
            parse_status,
            usage: None,
            latency_ms: None,
        }
    }
}

fn response_status(steps: &[Step], request: &RolloutRequest) -> ParseStatus {
    // An empty reply is complete when the anchor already sits at the
    // goal; otherwise grade against the expected step count.
    if steps.is_empty() && request.anchor_state.is_goal(request.n) {
        return ParseStatus::Ok;
    }
    match request.expectation() {
        Expect::Exactly(k) => {
            if steps.len() >= k || steps.last().is_some_and(|s| s.state.is_goal(request.n)) {
                ParseStatus::Ok
            } else if steps.is_empty() {
                ParseStatus::Malformed
            } else {
                ParseStatus::Truncated
            }
        }
        Expect::AtLeastOne => {
            if steps.is_empty() {
                ParseStatus::Malformed
            } else {
                ParseStatus::Ok
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("anchor state is not on the oracle trajectory")]
    OffTrajectory,
    #[error("unsupported prompt variant: {0}")]
    UnsupportedVariant(String),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("scripted agent ran out of responses")]
    ScriptExhausted,
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
}

/// A step predictor. Implementations must be shareable across worker
/// threads; any internal state (rate limiting, scripts) is synchronized
/// internally.
pub trait StepAgent: Send + Sync {
    fn rollout(&self, request: &RolloutRequest) -> Result<RolloutResponse, AgentError>;

    /// Stable identifier used to group records (model id, mock profile
    /// name, "oracle").
    fn label(&self) -> String;
}
