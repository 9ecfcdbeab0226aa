//! Question answering flow: decomposition, candidate retrieval, iterative
//! sub-question answering with reformulation, and final synthesis. The
//! three baselines reuse the same stages with parts switched off.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{top_k, Embedding, EmbeddingError, EmbeddingStore, ScoredCandidate, Similarity};
use crate::kg::{KgError, KnowledgeGraph};
use crate::llm::{CompletionBackend, LlmError, Profiles};
use crate::prompts::{render, PromptSet};
use crate::retrieval::{flatten_candidates, retrieve_candidates, Direction};

pub const DEFAULT_MAX_SUB_QUESTIONS: usize = 5;
/// Pools above this size are logged.
const LARGE_POOL: usize = 50_000;

const NO_FACTS: &str = "No relevant facts were found in the knowledge graph.";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

impl PipelineError {
    /// True for failures of an external model backend, as opposed to bad
    /// input data.
    pub fn is_backend(&self) -> bool {
        matches!(self, PipelineError::Llm(_) | PipelineError::Embedding(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Zero-shot answer, no knowledge graph, no decomposition.
    Llm,
    /// Decomposition and reformulation, sub-questions answered without triples.
    LlmQd,
    /// Retrieve once, select against the whole question, answer once.
    LlmKg,
    /// Full system.
    KgRag,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Llm, Variant::LlmQd, Variant::LlmKg, Variant::KgRag];

    pub fn uses_retrieval(self) -> bool {
        matches!(self, Variant::LlmKg | Variant::KgRag)
    }

    pub fn uses_decomposition(self) -> bool {
        matches!(self, Variant::LlmQd | Variant::KgRag)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Llm => "llm",
            Variant::LlmQd => "llm_qd",
            Variant::LlmKg => "llm_kg",
            Variant::KgRag => "kg_rag",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "llm" => Ok(Variant::Llm),
            "llmqd" => Ok(Variant::LlmQd),
            "llmkg" => Ok(Variant::LlmKg),
            "kgrag" | "full" => Ok(Variant::KgRag),
            _ => Err(format!("unknown variant {s:?} (expected llm, llm_qd, llm_kg or kg_rag)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalParams {
    pub n_hops: usize,
    pub top_k: usize,
    pub direction: Direction,
    pub similarity: Similarity,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self {
            n_hops: 3,
            top_k: 30,
            direction: Direction::Bidirectional,
            similarity: Similarity::Dot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    DecompositionParseFailure,
    NoDecomposition,
    OverDecomposition,
    ContextEmpty,
    ReformulationEmpty,
    NoAnswerLine,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub chain_of_thought: String,
    pub sub_questions: Vec<String>,
    pub raw_output: String,
    #[serde(default)]
    pub parse_failed: bool,
    /// The model said the question needs no decomposition.
    #[serde(default)]
    pub declined: bool,
    /// More sub-questions were produced than the cap allows.
    #[serde(default)]
    pub truncated: bool,
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

fn numbered_item(line: &str) -> Option<&str> {
    let line = line.trim();
    let rest = line.trim_start_matches(|c: char| c.is_ascii_digit());
    if rest.len() == line.len() {
        return None;
    }
    let item = rest.strip_prefix(['.', ')'])?.trim();
    (!item.is_empty()).then_some(item)
}

/// Parses `Reasoning: ... Sub-questions: 1. ... 2. ...`. Anything else falls
/// back to answering the original question directly.
pub fn parse_decomposition(question: &str, raw: &str, max_sub_questions: usize) -> Decomposition {
    let text = raw.split("<END>").next().unwrap_or("");
    let lower = text.to_ascii_lowercase();
    let fallback = |cot: String, declined: bool| Decomposition {
        chain_of_thought: cot,
        sub_questions: vec![question.to_string()],
        raw_output: raw.to_string(),
        parse_failed: !declined,
        declined,
        truncated: false,
    };
    let reasoning = |s: &str| {
        let s = s.trim();
        strip_prefix_ci(s, "reasoning:").unwrap_or(s).trim().to_string()
    };

    let Some(pos) = lower.find("sub-questions:") else {
        if let Some(pos) = lower.find("no decomposition") {
            return fallback(reasoning(&text[..pos]), true);
        }
        return fallback(String::new(), false);
    };
    let mut subs: Vec<String> = text[pos + "sub-questions:".len()..]
        .lines()
        .filter_map(numbered_item)
        .map(str::to_string)
        .collect();
    if subs.is_empty() {
        return fallback(reasoning(&text[..pos]), false);
    }
    let truncated = subs.len() > max_sub_questions;
    subs.truncate(max_sub_questions);
    Decomposition {
        chain_of_thought: reasoning(&text[..pos]),
        sub_questions: subs,
        raw_output: raw.to_string(),
        parse_failed: false,
        declined: false,
        truncated,
    }
}

/// Splits synthesis output at its last `Answer:` line.
/// Returns `(answer, text before the line)`.
pub fn extract_answer_line(text: &str) -> Option<(String, String)> {
    let lines: Vec<&str> = text.lines().collect();
    let idx = lines
        .iter()
        .rposition(|l| strip_prefix_ci(l.trim_start(), "answer:").is_some_and(|a| !a.trim().is_empty()))?;
    let answer = strip_prefix_ci(lines[idx].trim_start(), "answer:")?.trim().to_string();
    Some((answer, lines[..idx].join("\n").trim().to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubQaTrace {
    pub index: usize,
    pub sub_question_original: String,
    pub sub_question_effective: String,
    pub selected: Vec<ScoredCandidate>,
    pub sub_answer: String,
    #[serde(default)]
    pub context_empty: bool,
    #[serde(default)]
    pub reformulation_empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    pub final_answer: String,
    pub explanation: String,
    pub raw_output: String,
    pub no_answer_line: bool,
}

/// Retrieval parameters as they applied to one record; `None` where the
/// variant does not retrieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RecordParams {
    pub n_hops: Option<usize>,
    pub top_k: Option<usize>,
    pub direction: Option<Direction>,
}

impl RecordParams {
    pub fn for_variant(variant: Variant, params: &RetrievalParams) -> Self {
        if variant.uses_retrieval() {
            Self {
                n_hops: Some(params.n_hops),
                top_k: Some(params.top_k),
                direction: Some(params.direction),
            }
        } else {
            Self::default()
        }
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct StageTimings {
    pub decomposition_ms: f64,
    pub retrieval_ms: f64,
    pub answering_ms: f64,
    pub synthesis_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question: String,
    pub question_entities: Vec<String>,
    pub variant: Variant,
    pub params: RecordParams,
    pub seed: u64,
    pub decomposition: Option<Decomposition>,
    pub traces: Vec<SubQaTrace>,
    /// The extracted answer; empty only on error records.
    pub final_answer: String,
    pub synthesis: Option<Synthesis>,
    pub reasoning_chain: String,
    pub candidate_pool_size: usize,
    pub flags: Vec<Flag>,
    pub error: Option<String>,
    #[serde(default)]
    pub timings: StageTimings,
}

impl AnswerRecord {
    fn empty(question: &str, entities: &[String], variant: Variant, params: &RetrievalParams, seed: u64) -> Self {
        Self {
            question: question.to_string(),
            question_entities: entities.to_vec(),
            variant,
            params: RecordParams::for_variant(variant, params),
            seed,
            decomposition: None,
            traces: Vec::new(),
            final_answer: String::new(),
            synthesis: None,
            reasoning_chain: String::new(),
            candidate_pool_size: 0,
            flags: Vec::new(),
            error: None,
            timings: StageTimings::default(),
        }
    }

    pub fn failed(
        question: &str,
        entities: &[String],
        variant: Variant,
        params: &RetrievalParams,
        seed: u64,
        err: &PipelineError,
    ) -> Self {
        let mut r = Self::empty(question, entities, variant, params, seed);
        r.error = Some(err.to_string());
        r.flags.push(Flag::Error);
        r
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// Copy with timings zeroed, for byte-level comparisons between runs.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }

    fn flag(&mut self, f: Flag) {
        if !self.flags.contains(&f) {
            self.flags.push(f);
        }
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn format_pairs(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .enumerate()
        .map(|(i, (q, a))| format!("Sub-question {n}: {q}\nSub-answer {n}: {a}", n = i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_triples(selected: &[ScoredCandidate]) -> String {
    if selected.is_empty() {
        return NO_FACTS.to_string();
    }
    selected
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}. {}", i + 1, c.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// An embedded candidate pool for one question.
pub type EmbeddedPool = Vec<(String, Embedding)>;

pub struct Pipeline {
    graph: Arc<KnowledgeGraph>,
    llm: Arc<dyn CompletionBackend>,
    embeddings: Arc<EmbeddingStore>,
    prompts: PromptSet,
    profiles: Profiles,
    max_sub_questions: usize,
}

impl Pipeline {
    pub fn new(graph: Arc<KnowledgeGraph>, llm: Arc<dyn CompletionBackend>, embeddings: Arc<EmbeddingStore>) -> Self {
        Self {
            graph,
            llm,
            embeddings,
            prompts: PromptSet::default(),
            profiles: Profiles::default(),
            max_sub_questions: DEFAULT_MAX_SUB_QUESTIONS,
        }
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn with_profiles(mut self, profiles: Profiles) -> Self {
        self.profiles = profiles;
        self
    }

    pub fn with_max_sub_questions(mut self, n: usize) -> Self {
        self.max_sub_questions = n.max(1);
        self
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        &self.graph
    }

    pub fn llm(&self) -> &dyn CompletionBackend {
        self.llm.as_ref()
    }

    pub fn embeddings(&self) -> &EmbeddingStore {
        &self.embeddings
    }

    pub fn decompose(&self, question: &str, seed: u64) -> Result<Decomposition, LlmError> {
        let prompt = render(
            &self.prompts.decompose,
            &[("examples", self.prompts.icl_examples.trim_end()), ("question", question)],
        );
        let resp = self.llm.complete(&self.profiles.decomposition.request(prompt, seed))?;
        Ok(parse_decomposition(question, &resp.text, self.max_sub_questions))
    }

    /// Verbalized candidates around the entities, flattened across hops and
    /// embedded.
    pub fn candidate_pool(&self, entities: &[String], params: &RetrievalParams) -> Result<EmbeddedPool, PipelineError> {
        let seeds = entities
            .iter()
            .map(|e| self.graph.resolve_entity(e))
            .collect::<Result<Vec<_>, _>>()?;
        let buckets = retrieve_candidates(&self.graph, &seeds, params.n_hops, params.direction);
        if buckets.total() > LARGE_POOL {
            tracing::warn!(?entities, candidates = buckets.total(), "large candidate pool; it is not truncated");
        }
        let texts: Vec<String> = flatten_candidates(&self.graph, &buckets)
            .into_iter()
            .map(|v| v.text)
            .collect();
        let vectors = self.embeddings.embed_texts(&texts)?;
        Ok(texts.into_iter().zip(vectors).collect())
    }

    pub fn select(
        &self,
        query: &str,
        pool: &EmbeddedPool,
        params: &RetrievalParams,
    ) -> Result<Vec<ScoredCandidate>, EmbeddingError> {
        if pool.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.embeddings.embed_one(query)?;
        top_k(&q, pool, params.top_k, params.similarity)
    }

    /// Returns the trimmed answer; an empty `selected` produces a prompt that
    /// states no facts were found.
    pub fn answer_sub_question(&self, sub_question: &str, selected: &[ScoredCandidate], seed: u64) -> Result<String, LlmError> {
        let prompt = render(
            &self.prompts.answer,
            &[("triples", &format_triples(selected)), ("question", sub_question)],
        );
        let resp = self.llm.complete(&self.profiles.sub_answer.request(prompt, seed))?;
        Ok(resp.text.trim().to_string())
    }

    pub fn answer_without_context(&self, question: &str, seed: u64) -> Result<String, LlmError> {
        let prompt = render(&self.prompts.answer_plain, &[("question", question)]);
        let resp = self.llm.complete(&self.profiles.sub_answer.request(prompt, seed))?;
        Ok(resp.text.trim().to_string())
    }

    /// Rewrites `next` using every prior `(sub-question, sub-answer)` pair.
    /// Returns the question (ending in exactly one `?`) and whether the model
    /// produced nothing, in which case `next` comes back unchanged.
    pub fn reformulate(&self, next: &str, prior: &[(String, String)], seed: u64) -> Result<(String, bool), LlmError> {
        let prompt = render(
            &self.prompts.reformulate,
            &[("pairs", &format_pairs(prior)), ("question", next)],
        );
        let resp = self.llm.complete(&self.profiles.reformulation.request(prompt, seed))?;
        let line = resp
            .text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or("")
            .trim_end_matches(|c: char| c == '?' || c.is_whitespace());
        if line.is_empty() {
            return Ok((next.to_string(), true));
        }
        Ok((format!("{line}?"), false))
    }

    pub fn synthesize(&self, question: &str, traces: &[SubQaTrace], seed: u64) -> Result<Synthesis, LlmError> {
        let pairs: Vec<(String, String)> = traces
            .iter()
            .map(|t| (t.sub_question_effective.clone(), t.sub_answer.clone()))
            .collect();
        let prompt = render(
            &self.prompts.synthesize,
            &[("question", question), ("pairs", &format_pairs(&pairs))],
        );
        let resp = self.llm.complete(&self.profiles.synthesis.request(prompt, seed))?;
        let raw = resp.text.trim().to_string();
        Ok(match extract_answer_line(&raw) {
            Some((answer, explanation)) => Synthesis {
                final_answer: answer,
                explanation,
                raw_output: raw,
                no_answer_line: false,
            },
            None => Synthesis {
                final_answer: raw.clone(),
                explanation: String::new(),
                raw_output: raw,
                no_answer_line: true,
            },
        })
    }

    fn reasoning_chain(cot: &str, traces: &[SubQaTrace], explanation: &str) -> String {
        let mut parts = Vec::new();
        if !cot.is_empty() {
            parts.push(cot.to_string());
        }
        for t in traces {
            parts.push(format!("{}. {} -> {}", t.index + 1, t.sub_question_effective, t.sub_answer));
        }
        if !explanation.is_empty() {
            parts.push(explanation.to_string());
        }
        parts.join("\n")
    }

    /// Runs one question end to end. Errors abort this question only; see
    /// [`Pipeline::answer_question_recorded`] for batch use.
    pub fn answer_question(
        &self,
        question: &str,
        entities: &[String],
        variant: Variant,
        params: &RetrievalParams,
        seed: u64,
    ) -> Result<AnswerRecord, PipelineError> {
        if params.n_hops == 0 || params.top_k == 0 {
            return Err(PipelineError::InvalidParams("n_hops and top_k must be at least 1".into()));
        }
        let total = Instant::now();
        let mut rec = AnswerRecord::empty(question, entities, variant, params, seed);

        // decomposition and retrieval depend only on the input
        let (decomposition, pool) = rayon::join(
            || {
                variant.uses_decomposition().then(|| {
                    let t = Instant::now();
                    self.decompose(question, seed).map(|d| (d, ms(t)))
                })
            },
            || {
                variant.uses_retrieval().then(|| {
                    let t = Instant::now();
                    self.candidate_pool(entities, params).map(|p| (p, ms(t)))
                })
            },
        );
        let pool = match pool.transpose()? {
            Some((p, t)) => {
                rec.timings.retrieval_ms = t;
                rec.candidate_pool_size = p.len();
                Some(p)
            }
            None => None,
        };
        let decomposition = match decomposition.transpose()? {
            Some((d, t)) => {
                rec.timings.decomposition_ms = t;
                if d.parse_failed {
                    rec.flag(Flag::DecompositionParseFailure);
                }
                if d.declined {
                    rec.flag(Flag::NoDecomposition);
                }
                if d.truncated {
                    rec.flag(Flag::OverDecomposition);
                }
                Some(d)
            }
            None => None,
        };

        let sub_questions = decomposition
            .as_ref()
            .map_or_else(|| vec![question.to_string()], |d| d.sub_questions.clone());
        let answering = Instant::now();
        let mut prior: Vec<(String, String)> = Vec::new();
        for (index, original) in sub_questions.iter().enumerate() {
            let (effective, reformulation_empty) = if index == 0 {
                (original.clone(), false)
            } else {
                self.reformulate(original, &prior, seed)?
            };
            if reformulation_empty {
                rec.flag(Flag::ReformulationEmpty);
            }
            let (selected, sub_answer, context_empty) = match &pool {
                Some(pool) => {
                    let selected = self.select(&effective, pool, params)?;
                    let answer = self.answer_sub_question(&effective, &selected, seed)?;
                    let empty = selected.is_empty();
                    (selected, answer, empty)
                }
                None => (Vec::new(), self.answer_without_context(&effective, seed)?, false),
            };
            if context_empty {
                rec.flag(Flag::ContextEmpty);
            }
            prior.push((effective.clone(), sub_answer.clone()));
            rec.traces.push(SubQaTrace {
                index,
                sub_question_original: original.clone(),
                sub_question_effective: effective,
                selected,
                sub_answer,
                context_empty,
                reformulation_empty,
            });
        }
        rec.timings.answering_ms = ms(answering);

        let cot = decomposition.as_ref().map_or("", |d| d.chain_of_thought.as_str());
        if variant.uses_decomposition() {
            let t = Instant::now();
            let synthesis = self.synthesize(question, &rec.traces, seed)?;
            rec.timings.synthesis_ms = ms(t);
            if synthesis.no_answer_line {
                rec.flag(Flag::NoAnswerLine);
            }
            rec.final_answer = synthesis.final_answer.clone();
            rec.reasoning_chain = Self::reasoning_chain(cot, &rec.traces, &synthesis.explanation);
            rec.synthesis = Some(synthesis);
        } else {
            let text = &rec.traces[0].sub_answer;
            rec.final_answer = extract_answer_line(text).map_or_else(|| text.clone(), |(a, _)| a);
            rec.reasoning_chain = Self::reasoning_chain("", &rec.traces, "");
        }
        rec.decomposition = decomposition;
        if rec.final_answer.is_empty() {
            rec.error = Some("backend produced an empty answer".into());
            rec.flag(Flag::Error);
        }
        rec.timings.total_ms = ms(total);
        Ok(rec)
    }

    /// Like [`Pipeline::answer_question`] but folds any failure into an error
    /// record.
    pub fn answer_question_recorded(
        &self,
        question: &str,
        entities: &[String],
        variant: Variant,
        params: &RetrievalParams,
        seed: u64,
    ) -> AnswerRecord {
        self.answer_question(question, entities, variant, params, seed)
            .unwrap_or_else(|e| {
                tracing::warn!(question, error = %e, "question failed");
                AnswerRecord::failed(question, entities, variant, params, seed, &e)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reasoning_and_numbered_lines() {
        let raw = "Reasoning: R\nSub-questions:\n1. A?\n2. B about {answer of 1}?\n<END>";
        let d = parse_decomposition("q", raw, 5);
        assert_eq!(d.chain_of_thought, "R");
        assert_eq!(d.sub_questions, ["A?", "B about {answer of 1}?"]);
        assert!(!d.parse_failed && !d.declined && !d.truncated);
    }

    #[test]
    fn declined_decomposition_falls_back_to_question() {
        let d = parse_decomposition("who directed Inception", "No decomposition needed.\n", 5);
        assert_eq!(d.sub_questions, ["who directed Inception"]);
        assert!(d.declined);
        assert!(!d.parse_failed);
    }

    #[test]
    fn garbage_is_a_parse_failure_not_an_error() {
        for raw in ["", "blah blah", "Sub-questions:\n(none)"] {
            let d = parse_decomposition("q", raw, 5);
            assert_eq!(d.sub_questions, ["q"], "{raw:?}");
            assert!(d.parse_failed);
        }
    }

    #[test]
    fn caps_sub_questions() {
        let raw = format!(
            "Sub-questions:\n{}",
            (1..=7).map(|i| format!("{i}. q{i}?")).collect::<Vec<_>>().join("\n")
        );
        let d = parse_decomposition("q", &raw, 5);
        assert_eq!(d.sub_questions.len(), 5);
        assert!(d.truncated);
    }

    #[test]
    fn answer_line_extraction() {
        assert_eq!(
            extract_answer_line("Because X.\nAnswer: Paul Schrader"),
            Some(("Paul Schrader".into(), "Because X.".into()))
        );
        assert_eq!(extract_answer_line("answer: a\nmore\nANSWER: b").unwrap().0, "b");
        assert_eq!(extract_answer_line("no line here"), None);
        assert_eq!(extract_answer_line("Answer:   "), None);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("LLM+KG".parse::<Variant>().unwrap(), Variant::LlmKg);
        assert_eq!("kg-rag".parse::<Variant>().unwrap(), Variant::KgRag);
        assert!("rag".parse::<Variant>().is_err());
    }

    #[test]
    fn triples_render_numbered_or_placeholder() {
        assert_eq!(format_triples(&[]), NO_FACTS);
        let c = ScoredCandidate {
            text: "(a, r, b)".into(),
            score: 1.0,
            original_index: 0,
        };
        assert_eq!(format_triples(&[c]), "1. (a, r, b)");
    }
}
