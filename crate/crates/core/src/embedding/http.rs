use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Embedder, EmbeddingError, Fingerprint};
use crate::http::{HttpFailure, JsonClient, RetryPolicy};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpEmbedderConfig {
    pub url: String,
    pub model: String,
    pub dim: usize,
    /// Environment variable holding a bearer token, if any.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
}

impl Default for HttpEmbedderConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8080/v1/embeddings".into(),
            model: "multi-qa-mpnet-base-dot-v1".into(),
            dim: 768,
            api_key_env: None,
            timeout_secs: 120,
        }
    }
}

/// Client for `POST {"input": [...], "model": id}` returning
/// `{"data": [{"embedding": [...]}, ...]}`.
pub struct HttpEmbedder {
    client: JsonClient,
    model: String,
    dim: usize,
}

impl HttpEmbedder {
    pub fn new(config: &HttpEmbedderConfig) -> Self {
        Self::with_retry(config, RetryPolicy::default())
    }

    pub fn with_retry(config: &HttpEmbedderConfig, retry: RetryPolicy) -> Self {
        let bearer = config.api_key_env.as_deref().and_then(|k| std::env::var(k).ok());
        Self {
            client: JsonClient::new(&config.url, bearer, Duration::from_secs(config.timeout_secs), retry),
            model: config.model.clone(),
            dim: config.dim,
        }
    }
}

fn parse_embeddings(body: &Value) -> Result<Vec<Vec<f32>>, EmbeddingError> {
    let data = body
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| EmbeddingError::MalformedResponse("missing `data` array".into()))?;
    let mut rows: Vec<(usize, Vec<f32>)> = Vec::with_capacity(data.len());
    for (pos, item) in data.iter().enumerate() {
        let values = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| EmbeddingError::MalformedResponse(format!("item {pos} has no `embedding`")))?;
        let v = values
            .iter()
            .map(|x| x.as_f64().map(|f| f as f32))
            .collect::<Option<Vec<f32>>>()
            .ok_or_else(|| EmbeddingError::MalformedResponse(format!("item {pos} has non-numeric values")))?;
        let index = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
        rows.push((index, v));
    }
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

impl Embedder for HttpEmbedder {
    fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            model: self.model.clone(),
            dim: self.dim,
        }
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
        let body = self
            .client
            .post(&json!({ "input": texts, "model": self.model }))
            .map_err(|e| match e {
                HttpFailure::Unavailable { attempts, last } => {
                    EmbeddingError::BackendUnavailable(format!("{last} (after {attempts} attempts)"))
                }
                HttpFailure::Timeout => EmbeddingError::Timeout,
                HttpFailure::Malformed(m) => EmbeddingError::MalformedResponse(m),
            })?;
        let rows = parse_embeddings(&body)?;
        if rows.len() != texts.len() {
            return Err(EmbeddingError::MalformedResponse(format!(
                "{} vectors for {} inputs",
                rows.len(),
                texts.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|v| v.len() != self.dim) {
            return Err(EmbeddingError::DimensionMismatch(format!(
                "{} returned {} dims, configured {}",
                self.model,
                bad.len(),
                self.dim
            )));
        }
        Ok(rows)
    }
}
