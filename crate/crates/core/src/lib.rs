//! Training-free question answering over a knowledge graph.
//!
//! A question is decomposed into sub-questions, candidate triples are
//! gathered by breadth-first expansion around the question entities, the
//! most similar triples are selected per sub-question by embedding score,
//! and the sub-answers are merged into a final answer with an explicit
//! reasoning chain. Language models and embedders are pluggable backends.

pub mod bench;
pub mod config;
pub mod embedding;
mod http;
pub mod kg;
pub mod llm;
pub mod pipeline;
pub mod prompts;
pub mod retrieval;

pub use http::RetryPolicy;
pub use kg::{KgError, KnowledgeGraph};
pub use pipeline::{AnswerRecord, Pipeline, PipelineError, RetrievalParams, Variant};
pub use retrieval::Direction;
