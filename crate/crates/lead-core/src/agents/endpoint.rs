//! Remote step agent speaking the chat-completion wire format: one user
//! message per request, text reply parsed for the final solution
//! assignment. Retries with exponential backoff, caps in-flight
//! requests, and honors a requests-per-minute budget.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::agents::{
    prompt::{render_prompt_full, PromptExtra},
    AgentError, ParseStatus, RolloutRequest, RolloutResponse, StepAgent, Usage,
};
use crate::listing::parse_solution_text;

pub const API_KEY_ENV: &str = "LEAD_API_KEY";

/// Connection settings for a chat-completion endpoint. The request is a
/// POST to `{base_url}/chat/completions` with body
/// `{"model", "messages": [{"role": "user", "content": <prompt>}],
/// "max_tokens", "temperature"?, "reasoning_effort"?}`; the reply text is
/// read from `choices[0].message.content`. The API key comes from the
/// `LEAD_API_KEY` environment variable and is sent as a bearer token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Sampling temperature, passed through verbatim when set.
    #[serde(default)]
    pub temperature: Option<f64>,
    /// Opaque effort label, passed through verbatim when set.
    #[serde(default)]
    pub reasoning_effort: Option<String>,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Attempts per request, covering transport failures, retryable
    /// statuses, and unparseable replies.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_initial_ms")]
    pub backoff_initial_ms: u64,
    #[serde(default = "default_backoff_max_ms")]
    pub backoff_max_ms: u64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
}

fn default_max_output_tokens() -> u32 {
    8192
}
fn default_timeout_secs() -> u64 {
    300
}
fn default_max_attempts() -> u32 {
    3
}
fn default_backoff_initial_ms() -> u64 {
    500
}
fn default_backoff_max_ms() -> u64 {
    8000
}
fn default_max_in_flight() -> usize {
    4
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        if self.timeout_secs == 0 {
            return Err("timeout_secs must be positive".into());
        }
        if self.requests_per_minute == Some(0) {
            return Err("requests_per_minute must be positive".into());
        }
        Ok(())
    }
}

struct InFlightGate {
    active: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

impl InFlightGate {
    fn acquire(&self) -> InFlightPermit<'_> {
        let mut active = self.active.lock().unwrap();
        while *active >= self.cap {
            active = self.freed.wait(active).unwrap();
        }
        *active += 1;
        InFlightPermit { gate: self }
    }
}

struct InFlightPermit<'a> {
    gate: &'a InFlightGate,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        *self.gate.active.lock().unwrap() -= 1;
        self.gate.freed.notify_one();
    }
}

pub struct EndpointAgent {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    gate: InFlightGate,
    /// Send timestamps within the sliding one-minute window.
    window: Mutex<VecDeque<Instant>>,
}

impl EndpointAgent {
    pub fn new(config: EndpointConfig) -> Result<Self, AgentError> {
        config.validate().map_err(AgentError::Endpoint)?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| AgentError::Endpoint(e.to_string()))?;
        let cap = config.max_in_flight;
        Ok(EndpointAgent {
            config,
            client,
            api_key: std::env::var(API_KEY_ENV).ok(),
            gate: InFlightGate {
                active: Mutex::new(0),
                freed: Condvar::new(),
                cap,
            },
            window: Mutex::new(VecDeque::new()),
        })
    }

    fn wait_for_rate_slot(&self) {
        let Some(rpm) = self.config.requests_per_minute else {
            return;
        };
        loop {
            let wait = {
                let mut window = self.window.lock().unwrap();
                let now = Instant::now();
                while window
                    .front()
                    .is_some_and(|t| now.duration_since(*t) >= Duration::from_secs(60))
                {
                    window.pop_front();
                }
                if window.len() < rpm as usize {
                    window.push_back(now);
                    return;
                }
                Duration::from_secs(60) - now.duration_since(window.front().copied().unwrap())
            };
            std::thread::sleep(wait);
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .config
            .backoff_initial_ms
            .saturating_mul(1u64 << attempt.min(16))
            .min(self.config.backoff_max_ms);
        Duration::from_millis(ms)
    }

    fn prompt_extra(&self, request: &RolloutRequest) -> PromptExtra {
        PromptExtra {
            depth: (request.variant == crate::agents::PromptVariant::Lookahead)
                .then_some(request.depth),
            step_id: Some(request.anchor_index),
            warmup_n: None,
        }
    }

    fn send_once(&self, prompt: &str) -> Result<(String, Option<Usage>), (bool, AgentError)> {
        // (retryable, error)
        self.wait_for_rate_slot();
        let _permit = self.gate.acquire();
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": self.config.max_output_tokens,
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(effort) = &self.config.reasoning_effort {
            body["reasoning_effort"] = json!(effort);
        }
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let mut req = self.client.post(url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| (true, AgentError::Endpoint(e.to_string())))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err((
                true,
                AgentError::RateLimited(format!("endpoint returned {status}")),
            ));
        }
        if status.is_server_error() {
            return Err((
                true,
                AgentError::Endpoint(format!("endpoint returned {status}")),
            ));
        }
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err((
                false,
                AgentError::Endpoint(format!("endpoint returned {status}: {body}")),
            ));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| (true, AgentError::Endpoint(format!("bad reply body: {e}"))))?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| {
                (
                    true,
                    AgentError::Endpoint("reply carries no message content".to_string()),
                )
            })?
            .to_string();
        let usage = value.get("usage").map(|u| Usage {
            prompt_tokens: u["prompt_tokens"].as_u64(),
            completion_tokens: u["completion_tokens"].as_u64(),
        });
        Ok((content, usage))
    }
}

impl StepAgent for EndpointAgent {
    fn rollout(&self, request: &RolloutRequest) -> Result<RolloutResponse, AgentError> {
        let prompt = render_prompt_full(
            request.variant,
            request.kind,
            request.n,
            &request.anchor_state,
            &self.prompt_extra(request),
        )?;
        let mut last_err: Option<AgentError> = None;
        let mut last_malformed: Option<RolloutResponse> = None;
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            let sent_at = Instant::now();
            match self.send_once(&prompt.text) {
                Ok((content, usage)) => {
                    let (steps, parse_status) = parse_solution_text(
                        &content,
                        request.kind,
                        request.expectation(),
                        request.n,
                    );
                    let response = RolloutResponse {
                        steps,
                        raw_text: content,
                        parse_status,
                        usage,
                        latency_ms: Some(sent_at.elapsed().as_millis() as u64),
                    };
                    if response.parse_status == ParseStatus::Malformed {
                        // Resample; keep the raw text in case every
                        // attempt comes back unparseable.
                        last_malformed = Some(response);
                        continue;
                    }
                    return Ok(response);
                }
                Err((retryable, err)) => {
                    last_err = Some(err);
                    if !retryable {
                        break;
                    }
                }
            }
        }
        if let Some(resp) = last_malformed {
            return Ok(resp);
        }
        Err(last_err.unwrap_or_else(|| AgentError::Endpoint("request never sent".to_string())))
    }

    fn label(&self) -> String {
        self.config.model.clone()
    }
}
