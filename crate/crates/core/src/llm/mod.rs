//! Uniform completion interface over language-model backends.

mod http;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpLlm, HttpLlmConfig};
pub use scripted::{Rule, RuleSpec, ScriptedBackend, LIST_SEPARATOR};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("language model backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed backend response: {0}")]
    MalformedBackendResponse(String),
    #[error("language model request timed out")]
    Timeout,
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("invalid scripted rules: {0}")]
    Rules(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_k: u32,
    pub min_p: f64,
    /// 1.0 disables the penalty.
    pub repeat_penalty: f64,
    pub stop: Vec<String>,
    pub seed: u64,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::InvalidRequest(m.to_string()));
        if self.max_tokens < 1 {
            return bad("max_tokens must be at least 1");
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.min_p) {
            return bad("min_p must lie in [0, 1]");
        }
        if self.top_k < 1 {
            return bad("top_k must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    /// Generated continuation; never contains a stop sequence.
    pub text: String,
    pub finish_reason: FinishReason,
    pub backend_latency_ms: u64,
}

pub trait CompletionBackend: Send + Sync {
    fn name(&self) -> String;

    /// Whether identical seeded requests reproduce identical output.
    fn honors_seed(&self) -> bool;

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
/// Returns whether a cut happened.
pub fn apply_stop_sequences(text: &str, stops: &[String]) -> (String, bool) {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min();
    match cut {
        Some(pos) => (text[..pos].to_string(), true),
        None => (text.to_string(), false),
    }
}

/// Sampling parameters for one pipeline role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingProfile {
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_k: u32,
    pub min_p: f64,
    pub repeat_penalty: f64,
    pub stop: Vec<String>,
}

impl Default for SamplingProfile {
    fn default() -> Self {
        Self {
            max_tokens: 256,
            temperature: 0.3,
            top_k: 40,
            min_p: 0.05,
            repeat_penalty: 1.0,
            stop: Vec::new(),
        }
    }
}

impl SamplingProfile {
    pub fn request(&self, prompt: String, seed: u64) -> CompletionRequest {
        CompletionRequest {
            prompt,
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            top_k: self.top_k,
            min_p: self.min_p,
            repeat_penalty: self.repeat_penalty,
            stop: self.stop.clone(),
            seed,
        }
    }
}

/// One profile per pipeline role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Profiles {
    pub decomposition: SamplingProfile,
    pub sub_answer: SamplingProfile,
    pub reformulation: SamplingProfile,
    pub synthesis: SamplingProfile,
}

impl Default for Profiles {
    fn default() -> Self {
        let base = SamplingProfile::default();
        Self {
            decomposition: SamplingProfile {
                stop: vec!["<END>".into()],
                ..base.clone()
            },
            sub_answer: SamplingProfile {
                repeat_penalty: 1.1,
                ..base.clone()
            },
            reformulation: SamplingProfile {
                stop: vec!["?".into()],
                ..base.clone()
            },
            synthesis: SamplingProfile {
                max_tokens: 512,
                ..base
            },
        }
    }
}
