use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metaqa::QARecord;
use super::metric::{hit_at_1, mean_std, scoring_answer, MatchMode};
use super::sample::{sample, SamplePlan};
use super::BenchError;
use crate::embedding::Similarity;
use crate::pipeline::{Flag, Pipeline, RetrievalParams, Variant};
use crate::retrieval::Direction;

pub const CELLS_FILE: &str = "cells.jsonl";

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<QARecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub variants: Vec<Variant>,
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub sample_size: usize,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub similarity: Similarity,
    #[serde(default)]
    pub match_mode: MatchMode,
}

impl GridSpec {
    /// Every problem with the spec, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.variants.is_empty() {
            out.push("no variants".to_string());
        }
        if self.variants.iter().any(|v| v.uses_retrieval()) {
            if self.n_values.is_empty() {
                out.push("retrieval variants need at least one N value".to_string());
            }
            if self.k_values.is_empty() {
                out.push("retrieval variants need at least one K value".to_string());
            }
        }
        if self.n_values.contains(&0) {
            out.push("N values must be at least 1".to_string());
        }
        if self.k_values.contains(&0) {
            out.push("K values must be at least 1".to_string());
        }
        if self.seeds.is_empty() {
            out.push("no seeds".to_string());
        }
        if self.sample_size == 0 {
            out.push("sample size must be at least 1".to_string());
        }
        out
    }
}

/// One grid cell. `N` and `K` are null for variants that do not retrieve.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub variant: Variant,
    #[serde(rename = "N")]
    pub n_hops: Option<usize>,
    #[serde(rename = "K")]
    pub top_k: Option<usize>,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        write!(
            f,
            "{} {} N={} K={}",
            self.dataset,
            self.variant,
            opt(self.n_hops),
            opt(self.top_k)
        )
    }
}

/// Cells in dataset, variant, N, K order; non-retrieval variants appear once
/// per dataset.
pub fn plan_cells<S: AsRef<str>>(datasets: &[S], spec: &GridSpec) -> Vec<CellKey> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for d in datasets {
        for &variant in &spec.variants {
            for &n in &spec.n_values {
                for &k in &spec.k_values {
                    let retr = variant.uses_retrieval();
                    let key = CellKey {
                        dataset: d.as_ref().to_string(),
                        variant,
                        n_hops: retr.then_some(n),
                        top_k: retr.then_some(k),
                    };
                    if seen.insert(key.clone()) {
                        out.push(key);
                    }
                }
            }
            if !variant.uses_retrieval() && (spec.n_values.is_empty() || spec.k_values.is_empty()) {
                let key = CellKey {
                    dataset: d.as_ref().to_string(),
                    variant,
                    n_hops: None,
                    top_k: None,
                };
                if seen.insert(key.clone()) {
                    out.push(key);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub seed: u64,
    pub question: String,
    pub entities: Vec<String>,
    pub gold: Vec<String>,
    /// The full extracted answer.
    pub generated: String,
    /// The part of `generated` that was scored.
    pub scored: String,
    pub hit: u8,
    pub flags: Vec<Flag>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub key: CellKey,
    pub sample_size: usize,
    pub seeds: Vec<u64>,
    pub match_mode: MatchMode,
    pub per_seed_hit1: Vec<f64>,
    pub mean_hit1: f64,
    pub std_hit1: f64,
    pub records: Vec<QuestionResult>,
}

impl EvalResult {
    fn matches(&self, spec: &GridSpec) -> bool {
        self.sample_size == spec.sample_size && self.seeds == spec.seeds && self.match_mode == spec.match_mode
    }
}

/// Append-only JSON-lines log of finished cells, used to resume grids.
pub struct ResultStore {
    path: PathBuf,
    done: HashMap<CellKey, EvalResult>,
}

impl ResultStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, BenchError> {
        std::fs::create_dir_all(&dir)?;
        let path = dir.as_ref().join(CELLS_FILE);
        let mut done = HashMap::new();
        if path.exists() {
            let bytes = std::fs::read(&path)?;
            let valid = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            if valid < bytes.len() {
                tracing::warn!(path = %path.display(), "dropping incomplete trailing cell record");
                OpenOptions::new().write(true).open(&path)?.set_len(valid as u64)?;
            }
            for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let r: EvalResult = serde_json::from_str(&line)
                    .map_err(|e| BenchError::Results(format!("{} line {}: {e}", path.display(), i + 1)))?;
                done.insert(r.key.clone(), r);
            }
        }
        Ok(Self { path, done })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    /// A stored cell computed under the same seeds, sample size and match mode.
    pub fn get(&self, key: &CellKey, spec: &GridSpec) -> Option<&EvalResult> {
        self.done.get(key).filter(|r| r.matches(spec))
    }

    pub fn append(&mut self, result: &EvalResult) -> Result<(), BenchError> {
        let mut line = serde_json::to_string(result).map_err(|e| BenchError::Results(e.to_string()))?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        self.done.insert(result.key.clone(), result.clone());
        Ok(())
    }
}

fn run_cell(pipeline: &Pipeline, dataset: &Dataset, key: &CellKey, spec: &GridSpec) -> Result<EvalResult, BenchError> {
    let defaults = RetrievalParams::default();
    let params = RetrievalParams {
        n_hops: key.n_hops.unwrap_or(defaults.n_hops),
        top_k: key.top_k.unwrap_or(defaults.top_k),
        direction: spec.direction,
        similarity: spec.similarity,
    };
    let mut per_seed = Vec::with_capacity(spec.seeds.len());
    let mut records = Vec::new();
    for &seed in &spec.seeds {
        let questions = sample(
            &dataset.records,
            SamplePlan {
                size: spec.sample_size,
                seed,
            },
        )?;
        let results: Vec<QuestionResult> = questions
            .par_iter()
            .map(|q| {
                let rec = pipeline.answer_question_recorded(&q.question_text, &q.question_entities, key.variant, &params, seed);
                let scored = scoring_answer(&rec.final_answer).to_string();
                let hit = if rec.is_error() {
                    0
                } else {
                    hit_at_1(&scored, &q.gold_answers, spec.match_mode)
                };
                QuestionResult {
                    seed,
                    question: q.question_text.clone(),
                    entities: q.question_entities.clone(),
                    gold: q.gold_answers.clone(),
                    generated: rec.final_answer,
                    scored,
                    hit,
                    flags: rec.flags,
                    error: rec.error,
                }
            })
            .collect();
        let hits: usize = results.iter().map(|r| r.hit as usize).sum();
        per_seed.push(hits as f64 / results.len() as f64);
        records.extend(results);
    }
    let (mean_hit1, std_hit1) = mean_std(&per_seed);
    Ok(EvalResult {
        key: key.clone(),
        sample_size: spec.sample_size,
        seeds: spec.seeds.clone(),
        match_mode: spec.match_mode,
        per_seed_hit1: per_seed,
        mean_hit1,
        std_hit1,
        records,
    })
}

/// Evaluates every cell. Questions within a cell run on the current rayon
/// pool; cells run one after another. With a store, finished cells are
/// reused and new ones are appended as soon as they complete. `on_cell`
/// receives each result and whether it came from the store.
pub fn run_grid(
    pipeline: &Pipeline,
    datasets: &[Dataset],
    spec: &GridSpec,
    mut store: Option<&mut ResultStore>,
    on_cell: &mut dyn FnMut(&EvalResult, bool),
) -> Result<Vec<EvalResult>, BenchError> {
    let mut problems = spec.problems();
    for d in datasets {
        if d.records.len() < spec.sample_size {
            problems.push(format!(
                "dataset {} has {} questions, fewer than the sample size {}",
                d.name,
                d.records.len(),
                spec.sample_size
            ));
        }
    }
    if !problems.is_empty() {
        return Err(BenchError::InvalidGrid(problems.join("; ")));
    }
    let names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
    let mut out = Vec::new();
    for key in plan_cells(&names, spec) {
        if let Some(done) = store.as_deref().and_then(|s| s.get(&key, spec)) {
            on_cell(done, true);
            out.push(done.clone());
            continue;
        }
        let dataset = datasets.iter().find(|d| d.name == key.dataset).expect("planned from datasets");
        let result = run_cell(pipeline, dataset, &key, spec)?;
        if let Some(s) = store.as_deref_mut() {
            s.append(&result)?;
        }
        on_cell(&result, false);
        out.push(result);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const CSV_COLUMNS: [&str; 8] = [
    "dataset",
    "variant",
    "N",
    "K",
    "seed_count",
    "sample_size",
    "mean_hit1",
    "std_hit1",
];

pub fn write_results<W: Write>(results: &[EvalResult], format: OutputFormat, out: W) -> Result<(), BenchError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let err = |e: csv::Error| BenchError::Results(e.to_string());
            w.write_record(CSV_COLUMNS).map_err(err)?;
            let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
            for r in results {
                w.write_record([
                    r.key.dataset.clone(),
                    r.key.variant.to_string(),
                    opt(r.key.n_hops),
                    opt(r.key.top_k),
                    r.seeds.len().to_string(),
                    r.sample_size.to_string(),
                    r.mean_hit1.to_string(),
                    r.std_hit1.to_string(),
                ])
                .map_err(err)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, results).map_err(|e| BenchError::Results(e.to_string()))?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn emit_results(results: &[EvalResult], format: OutputFormat, path: impl AsRef<Path>) -> Result<(), BenchError> {
    let f = std::io::BufWriter::new(File::create(path)?);
    write_results(results, format, f)
}
