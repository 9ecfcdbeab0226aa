use std::fmt;

use kgrag::bench::BenchError;
use kgrag::config::ConfigError;
use kgrag::embedding::EmbeddingError;
use kgrag::{KgError, PipelineError};

/// A command failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration. Exit code 1.
    Usage(String),
    /// Unreadable or malformed input data, unknown entities. Exit code 2.
    Data(String),
    /// The model or embedding service failed. Exit code 3.
    Backend(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Data(m) => write!(f, "{m}"),
            Failure::Backend(m) => write!(
                f,
                "{m}\nhint: check that the endpoints in the [llm] and [embedder] config sections are reachable"
            ),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<KgError> for Failure {
    fn from(e: KgError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<EmbeddingError> for Failure {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::Cache(_) | EmbeddingError::Io(_) => Failure::Data(e.to_string()),
            _ => Failure::Backend(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Kg(e) => e.into(),
            PipelineError::Embedding(e) => e.into(),
            PipelineError::InvalidParams(_) => Failure::Usage(e.to_string()),
            PipelineError::Llm(_) => Failure::Backend(e.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidGrid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}
