//! An agent that replays a fixed sequence of responses, used to inject
//! recorded candidate streams into executors.

use std::collections::VecDeque;
use std::sync::Mutex;

use crate::agents::{AgentError, RolloutRequest, RolloutResponse, StepAgent};

pub struct ScriptedAgent {
    responses: Mutex<VecDeque<RolloutResponse>>,
    requests: Mutex<Vec<RolloutRequest>>,
    label: String,
}

impl ScriptedAgent {
    pub fn new(responses: Vec<RolloutResponse>) -> Self {
        ScriptedAgent {
            responses: Mutex::new(responses.into()),
            requests: Mutex::new(Vec::new()),
            label: "scripted".to_string(),
        }
    }

    /// Requests observed so far, in call order.
    pub fn seen_requests(&self) -> Vec<RolloutRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().unwrap().len()
    }
}

impl StepAgent for ScriptedAgent {
    fn rollout(&self, request: &RolloutRequest) -> Result<RolloutResponse, AgentError> {
        self.requests.lock().unwrap().push(request.clone());
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or(AgentError::ScriptExhausted)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
