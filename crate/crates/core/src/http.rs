//! Blocking JSON POST with bounded retries, shared by the HTTP backends.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    pub fn delay_for(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1 << attempt.min(16)).min(self.max_delay)
    }
}

#[derive(Debug)]
pub(crate) enum HttpFailure {
    /// Transport or server failure that persisted through every retry.
    Unavailable { attempts: u32, last: String },
    Timeout,
    /// The server answered, but not with JSON we can use.
    Malformed(String),
}

#[derive(Debug, Clone)]
pub(crate) struct JsonClient {
    agent: ureq::Agent,
    url: String,
    bearer: Option<String>,
    retry: RetryPolicy,
}

fn retryable(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Io(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound
        | ureq::Error::Protocol(_) => true,
        _ => false,
    }
}

impl JsonClient {
    pub(crate) fn new(url: impl Into<String>, bearer: Option<String>, timeout: Duration, retry: RetryPolicy) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            agent,
            url: url.into(),
            bearer,
            retry,
        }
    }

    pub(crate) fn post<B: Serialize>(&self, body: &B) -> Result<Value, HttpFailure> {
        let mut attempt = 0u32;
        loop {
            let mut req = self.agent.post(&self.url);
            if let Some(token) = &self.bearer {
                req = req.header("Authorization", &format!("Bearer {token}"));
            }
            let err = match req.send_json(body) {
                Ok(mut resp) => {
                    return resp
                        .body_mut()
                        .read_json::<Value>()
                        .map_err(|e| HttpFailure::Malformed(e.to_string()));
                }
                Err(ureq::Error::Timeout(_)) => return Err(HttpFailure::Timeout),
                Err(e) => e,
            };
            attempt += 1;
            if !retryable(&err) || attempt > self.retry.max_retries {
                return Err(HttpFailure::Unavailable {
                    attempts: attempt,
                    last: err.to_string(),
                });
            }
            let delay = self.retry.delay_for(attempt - 1);
            tracing::warn!(url = %self.url, attempt, error = %err, ?delay, "request failed, retrying");
            std::thread::sleep(delay);
        }
    }
}
