use std::sync::Once;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{apply_stop_sequences, CompletionBackend, CompletionRequest, CompletionResponse, FinishReason, LlmError};
use crate::http::{HttpFailure, JsonClient, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpLlmConfig {
    pub url: String,
    pub model: String,
    /// Environment variable holding a bearer token, if any.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// Request fields the endpoint rejects; they are dropped with a warning.
    pub unsupported_params: Vec<String>,
    /// Set when the server ignores `seed`; runs are then marked non-reproducible.
    pub ignores_seed: bool,
}

impl Default for HttpLlmConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8080/v1/completions".into(),
            model: "mistral-7b-instruct-v0.2.Q4_K_M".into(),
            api_key_env: None,
            timeout_secs: 120,
            unsupported_params: Vec::new(),
            ignores_seed: false,
        }
    }
}

/// Client for a JSON completion endpoint. Accepts `text`, `content`, or
/// `choices[0].text` in the response.
pub struct HttpLlm {
    client: JsonClient,
    config: HttpLlmConfig,
    warn_dropped: Once,
}

impl HttpLlm {
    pub fn new(config: HttpLlmConfig) -> Self {
        Self::with_retry(config, RetryPolicy::default())
    }

    pub fn with_retry(config: HttpLlmConfig, retry: RetryPolicy) -> Self {
        let bearer = config.api_key_env.as_deref().and_then(|k| std::env::var(k).ok());
        Self {
            client: JsonClient::new(&config.url, bearer, Duration::from_secs(config.timeout_secs), retry),
            config,
            warn_dropped: Once::new(),
        }
    }

    pub(crate) fn body(&self, request: &CompletionRequest) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), self.config.model.clone().into());
        body.insert("prompt".into(), request.prompt.clone().into());
        body.insert("max_tokens".into(), request.max_tokens.into());
        body.insert("temperature".into(), request.temperature.into());
        body.insert("top_k".into(), request.top_k.into());
        body.insert("min_p".into(), request.min_p.into());
        body.insert("repeat_penalty".into(), request.repeat_penalty.into());
        body.insert("stop".into(), request.stop.clone().into());
        body.insert("seed".into(), request.seed.into());
        let mut dropped = Vec::new();
        for p in &self.config.unsupported_params {
            if body.remove(p).is_some() {
                dropped.push(p.as_str());
            }
        }
        if !dropped.is_empty() {
            self.warn_dropped.call_once(|| {
                tracing::warn!(url = %self.config.url, ?dropped, "dropping sampling parameters the endpoint does not support");
            });
        }
        Value::Object(body)
    }
}

pub(crate) fn parse_completion(body: &Value) -> Result<(String, Option<String>), LlmError> {
    let choice = body.get("choices").and_then(|c| c.get(0));
    let text = body
        .get("text")
        .or_else(|| body.get("content"))
        .or_else(|| choice.and_then(|c| c.get("text")))
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::MalformedBackendResponse("no `text`, `content` or `choices[0].text`".into()))?;
    let finish = body
        .get("finish_reason")
        .or_else(|| choice.and_then(|c| c.get("finish_reason")))
        .and_then(Value::as_str)
        .map(str::to_string);
    Ok((text.to_string(), finish))
}

impl CompletionBackend for HttpLlm {
    fn name(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn honors_seed(&self) -> bool {
        !self.config.ignores_seed && !self.config.unsupported_params.iter().any(|p| p == "seed")
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        request.validate()?;
        let start = Instant::now();
        let body = self.client.post(&self.body(request)).map_err(|e| match e {
            HttpFailure::Unavailable { attempts, last } => {
                LlmError::BackendUnavailable(format!("{} unreachable after {attempts} attempts: {last}", self.config.url))
            }
            HttpFailure::Timeout => LlmError::Timeout,
            HttpFailure::Malformed(m) => LlmError::MalformedBackendResponse(m),
        })?;
        let (text, finish) = parse_completion(&body)?;
        let (text, cut) = apply_stop_sequences(&text, &request.stop);
        let finish_reason = match finish.as_deref() {
            _ if cut => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            _ => FinishReason::Stop,
        };
        Ok(CompletionResponse {
            text,
            finish_reason,
            backend_latency_ms: start.elapsed().as_millis() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::SamplingProfile;
    use serde_json::json;

    #[test]
    fn body_carries_all_parameters() {
        let llm = HttpLlm::new(HttpLlmConfig::default());
        let req = SamplingProfile::default().request("hi".into(), 7);
        let body = llm.body(&req);
        for key in ["model", "prompt", "max_tokens", "temperature", "top_k", "min_p", "repeat_penalty", "stop", "seed"] {
            assert!(body.get(key).is_some(), "{key}");
        }
        assert_eq!(body["seed"], 7);
    }

    #[test]
    fn unsupported_parameters_are_dropped() {
        let llm = HttpLlm::new(HttpLlmConfig {
            unsupported_params: vec!["min_p".into(), "top_k".into(), "seed".into()],
            ..Default::default()
        });
        let body = llm.body(&SamplingProfile::default().request("hi".into(), 0));
        assert!(body.get("min_p").is_none());
        assert!(body.get("top_k").is_none());
        assert!(!llm.honors_seed());
    }

    #[test]
    fn parses_response_shapes() {
        assert_eq!(parse_completion(&json!({"text": "a", "finish_reason": "stop"})).unwrap().0, "a");
        assert_eq!(parse_completion(&json!({"content": "b"})).unwrap().0, "b");
        let (t, f) = parse_completion(&json!({"choices": [{"text": "c", "finish_reason": "length"}]})).unwrap();
        assert_eq!((t.as_str(), f.as_deref()), ("c", Some("length")));
        assert!(parse_completion(&json!({"choices": []})).is_err());
    }
}
