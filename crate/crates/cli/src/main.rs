//! `kgrag` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (malformed files, unknown entities), 3 backend error.

mod failure;
mod render;

use std::fmt::Write as _;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use kgrag::bench::{emit_results, plan_cells, run_grid, Dataset, OutputFormat, ResultStore, CELLS_FILE};
use kgrag::config::{Manifest, RunConfig};
use kgrag::embedding::{EmbeddingStore, Similarity};
use kgrag::kg::{KnowledgeGraph, LoadOptions};
use kgrag::retrieval::{buckets_to_json, retrieve_candidates, verbalize_triple};
use kgrag::{Direction, Pipeline, Variant};
use serde::Serialize;
use serde_json::json;

use crate::failure::Failure;

const VERSION: &str = env!("KGRAG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "kgrag", version = VERSION, about = "Knowledge-graph question answering with sub-question decomposition")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Global {
    /// TOML run configuration.
    #[arg(long, short, global = true, env = "KGRAG_CONFIG")]
    config: Option<PathBuf>,

    /// Emit machine-readable JSON, including the effective configuration.
    #[arg(long, global = true)]
    json: bool,

    /// Seed passed to every model call.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Repeat for more log output on stderr.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Triple file, overriding `kg_path`.
    #[arg(long, global = true)]
    kg: Option<PathBuf>,

    /// Retrieval depth, overriding `retrieval.n_hops`.
    #[arg(long, global = true)]
    n_hops: Option<usize>,

    /// Facts per sub-question, overriding `retrieval.top_k`.
    #[arg(long, global = true)]
    top_k: Option<usize>,

    /// `outgoing` or `bidirectional`.
    #[arg(long, global = true)]
    direction: Option<Direction>,

    /// `dot` or `cosine`.
    #[arg(long, global = true)]
    similarity: Option<Similarity>,

    /// Allow a retrieval depth above 3.
    #[arg(long, global = true)]
    force: bool,

    /// Worker threads for question-level parallelism.
    #[arg(long, global = true)]
    concurrency: Option<usize>,

    /// Embedding cache file, overriding `cache.embeddings`.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a triple file and print its statistics as JSON.
    Ingest {
        /// Triple file; defaults to the configured `kg_path`.
        path: Option<PathBuf>,

        /// Field delimiter.
        #[arg(long, default_value_t = '|')]
        delimiter: char,
    },
    /// Print entity, relation and degree statistics.
    Stats,
    /// Show the hop-bucketed candidate triples around some entities.
    Retrieve {
        /// Seed entity names, exactly as stored.
        #[arg(required = true)]
        entities: Vec<String>,
    },
    /// Answer one question.
    Ask {
        /// The question. Entities may be marked with brackets, as in
        /// "who directed [Inception]".
        question: String,

        /// Question entity; repeatable. Defaults to the bracketed spans.
        #[arg(long = "entity", short)]
        entities: Vec<String>,

        /// llm, llm_qd, llm_kg or kg_rag.
        #[arg(long, default_value = "kg_rag")]
        variant: Variant,

        /// Embed every triple before answering.
        #[arg(long)]
        warm_cache: bool,
    },
    /// Embed every triple of the graph into the embedding cache.
    WarmCache {
        /// Texts per embedding request.
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
    },
    /// Run an evaluation grid described by a manifest.
    Bench {
        /// Run manifest (TOML).
        manifest: PathBuf,

        /// Print the planned cells without calling any backend.
        #[arg(long)]
        dry_run: bool,

        /// Output directory, overriding the manifest's `out_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,

        /// Embed every triple before the first cell.
        #[arg(long)]
        warm_cache: bool,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        2 => tracing::Level::DEBUG,
        _ => tracing::Level::TRACE,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal())
        .without_time()
        .init();
}

impl Global {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.kg {
            cfg.kg_path = Some(p.clone());
        }
        if let Some(n) = self.n_hops {
            cfg.retrieval.n_hops = n;
        }
        if let Some(k) = self.top_k {
            cfg.retrieval.top_k = k;
        }
        if let Some(d) = self.direction {
            cfg.retrieval.direction = d;
        }
        if let Some(s) = self.similarity {
            cfg.retrieval.similarity = s;
        }
        if self.force {
            cfg.retrieval.force = true;
        }
        if let Some(c) = self.concurrency {
            cfg.concurrency = c;
        }
        if let Some(c) = &self.cache {
            cfg.cache.embeddings = Some(c.clone());
        }
    }

    fn base_config(&self) -> Result<RunConfig, Failure> {
        Ok(match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        })
    }

    fn config(&self) -> Result<RunConfig, Failure> {
        let mut cfg = self.base_config()?;
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn kg_path(cfg: &RunConfig) -> Result<&Path, Failure> {
    cfg.kg_path
        .as_deref()
        .ok_or_else(|| Failure::Usage("no triple file: set kg_path in the config or pass --kg".into()))
}

fn load_graph(cfg: &RunConfig, opts: &LoadOptions) -> Result<KnowledgeGraph, Failure> {
    let path = kg_path(cfg)?;
    let graph = KnowledgeGraph::load(path, opts)?;
    if graph.triple_count() == 0 {
        tracing::warn!(path = %path.display(), "triple file contains no triples");
    }
    Ok(graph)
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

/// Splits `who directed [Inception]` into the plain question and its
/// bracketed entities.
fn bracketed(question: &str) -> (String, Vec<String>) {
    let mut text = String::new();
    let mut entities = Vec::new();
    let mut rest = question;
    while let Some(open) = rest.find('[') {
        let Some(close) = rest[open..].find(']').map(|c| open + c) else { break };
        text.push_str(&rest[..open]);
        let entity = &rest[open + 1..close];
        text.push_str(entity);
        if !entity.trim().is_empty() {
            entities.push(entity.trim().to_string());
        }
        rest = &rest[close + 1..];
    }
    text.push_str(rest);
    (text.trim().to_string(), entities)
}

fn warm(graph: &KnowledgeGraph, store: &EmbeddingStore, batch: usize) -> Result<usize, Failure> {
    let texts: Vec<String> = graph.triples().iter().map(|&t| verbalize_triple(graph, t).text).collect();
    let chunk = (batch * 64).max(1);
    for (i, part) in texts.chunks(chunk).enumerate() {
        store.embed_texts(part)?;
        tracing::info!(done = ((i + 1) * chunk).min(texts.len()), total = texts.len(), "embedding triples");
    }
    store.cache().flush()?;
    Ok(texts.len())
}

fn cmd_ingest(g: &Global, path: Option<PathBuf>, delimiter: char) -> Result<(), Failure> {
    let mut cfg = g.base_config()?;
    g.apply(&mut cfg);
    if let Some(p) = path {
        cfg.kg_path = Some(p);
    }
    cfg.validate()?;
    let opts = LoadOptions {
        delimiter,
        ..LoadOptions::default()
    };
    let stats = load_graph(&cfg, &opts)?.degree_stats();
    if g.json {
        print_json(&json!({ "config": cfg, "stats": stats }))
    } else {
        print_json(&stats)
    }
}

fn cmd_stats(g: &Global) -> Result<(), Failure> {
    let cfg = g.config()?;
    let stats = load_graph(&cfg, &LoadOptions::default())?.degree_stats();
    if g.json {
        print_json(&json!({ "config": cfg, "stats": stats }))
    } else {
        emit(&render::stats(&stats))
    }
}

fn cmd_retrieve(g: &Global, entities: &[String]) -> Result<(), Failure> {
    let cfg = g.config()?;
    let graph = load_graph(&cfg, &LoadOptions::default())?;
    let seeds = entities
        .iter()
        .map(|e| graph.resolve_entity(e))
        .collect::<Result<Vec<_>, _>>()?;
    let params = cfg.retrieval.params();
    let buckets = retrieve_candidates(&graph, &seeds, params.n_hops, params.direction);
    let hops = buckets_to_json(&graph, &buckets);
    if g.json {
        print_json(&json!({ "config": cfg, "hops": hops }))
    } else {
        emit(&render::hops(&hops))
    }
}

fn cmd_ask(g: &Global, question: &str, entities: &[String], variant: Variant, warm_cache: bool) -> Result<(), Failure> {
    let cfg = g.config()?;
    let (text, found) = bracketed(question);
    let entities = if entities.is_empty() { found } else { entities.to_vec() };
    if entities.is_empty() && variant.uses_retrieval() {
        return Err(Failure::Usage(
            "no question entity: pass --entity or mark it in brackets, e.g. \"who directed [Inception]\"".into(),
        ));
    }
    let graph = if variant.uses_retrieval() {
        load_graph(&cfg, &LoadOptions::default())?
    } else {
        KnowledgeGraph::build(std::iter::empty())
    };
    let pipeline = cfg.build_pipeline(Arc::new(graph))?;
    if warm_cache && variant.uses_retrieval() {
        warm(pipeline.graph(), pipeline.embeddings(), 64)?;
    }
    let record = pipeline.answer_question(&text, &entities, variant, &cfg.retrieval.params(), g.seed);
    pipeline.embeddings().cache().flush()?;
    let record = record?;
    if g.json {
        print_json(&json!({ "config": cfg, "record": record }))
    } else {
        emit(&render::record(&record))
    }
}

fn cmd_warm_cache(g: &Global, batch_size: usize) -> Result<(), Failure> {
    let cfg = g.config()?;
    if cfg.cache.embeddings.is_none() {
        return Err(Failure::Usage(
            "no embedding cache configured: set cache.embeddings or pass --cache".into(),
        ));
    }
    let graph = load_graph(&cfg, &LoadOptions::default())?;
    let store = cfg.build_embedding_store()?.with_batch_size(batch_size);
    let before = store.cache().len();
    let triples = warm(&graph, &store, batch_size)?;
    let summary = json!({
        "triples": triples,
        "cached_before": before,
        "cached_after": store.cache().len(),
        "fingerprint": store.fingerprint(),
    });
    if g.json {
        print_json(&json!({ "config": cfg, "warm_cache": summary }))
    } else {
        emit(&format!(
            "{triples} triples; cache grew from {before} to {} entries\n",
            store.cache().len()
        ))
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Serialize)]
struct ManifestEcho<'a> {
    name: &'a str,
    version: &'a str,
    manifest_path: &'a Path,
    config: &'a RunConfig,
    grid: kgrag::bench::GridSpec,
    datasets: Vec<DatasetEcho<'a>>,
    cells: usize,
    llm_backend: String,
    honors_seed: bool,
    embedder: kgrag::embedding::Fingerprint,
    inference_seed: &'static str,
    started_unix: u64,
    finished_unix: Option<u64>,
}

#[derive(Serialize)]
struct DatasetEcho<'a> {
    name: &'a str,
    questions: usize,
}

fn write_echo(dir: &Path, echo: &ManifestEcho) -> Result<(), Failure> {
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(echo)? + "\n")?;
    Ok(())
}

fn cmd_bench(
    g: &Global,
    manifest_path: &Path,
    dry_run: bool,
    out_dir: Option<PathBuf>,
    warm_cache: bool,
) -> Result<(), Failure> {
    let manifest = Manifest::load(manifest_path)?;
    let base = match (&g.config, &manifest.config) {
        (Some(p), _) | (None, Some(p)) => RunConfig::load(p)?,
        (None, None) => RunConfig::default(),
    };
    let mut cfg = manifest.effective_config(base);
    g.apply(&mut cfg);
    let mut problems = manifest.problems(&cfg);
    let spec = manifest.grid_spec();
    let datasets: Vec<Dataset> = if problems.is_empty() {
        manifest.load_datasets(&cfg)?
    } else {
        Vec::new()
    };
    for d in &datasets {
        if d.records.len() < spec.sample_size {
            problems.push(format!(
                "dataset {} has {} questions, fewer than the sample size {}",
                d.name,
                d.records.len(),
                spec.sample_size
            ));
        }
    }
    let problem_failure = |problems: &[String]| {
        Failure::Usage(format!(
            "manifest {} has {} problem(s):\n  - {}",
            manifest_path.display(),
            problems.len(),
            problems.join("\n  - ")
        ))
    };
    let names = manifest.dataset_names();
    let cells = plan_cells(&names, &spec);
    let out_dir = out_dir
        .or_else(|| manifest.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&manifest.name));

    if dry_run {
        let stored = if out_dir.join(CELLS_FILE).exists() {
            let store = ResultStore::open(&out_dir)?;
            cells.iter().filter(|k| store.get(k, &spec).is_some()).count()
        } else {
            0
        };
        let per_cell = spec.seeds.len() * spec.sample_size;
        if g.json {
            print_json(&json!({
                "config": cfg,
                "grid": spec,
                "cells": cells,
                "questions_per_cell": per_cell,
                "stored_cells": stored,
                "out_dir": out_dir,
                "problems": problems,
            }))?;
        } else {
            let mut text = String::new();
            for (i, k) in cells.iter().enumerate() {
                let _ = writeln!(text, "{:>4}  {k}", i + 1);
            }
            let _ = writeln!(
                text,
                "{} cells x {} questions ({} seeds x {}); {} already stored in {}",
                cells.len(),
                per_cell,
                spec.seeds.len(),
                spec.sample_size,
                stored,
                out_dir.display()
            );
            emit(&text)?;
        }
    }
    if !problems.is_empty() {
        return Err(problem_failure(&problems));
    }
    if dry_run {
        return Ok(());
    }

    let needs_graph = spec.variants.iter().any(|v| v.uses_retrieval());
    let graph = if needs_graph {
        load_graph(&cfg, &LoadOptions::default())?
    } else {
        KnowledgeGraph::build(std::iter::empty())
    };
    let pipeline: Pipeline = cfg.build_pipeline(Arc::new(graph))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.concurrency)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {} worker threads: {e}", cfg.concurrency)))?;
    let mut store = ResultStore::open(&out_dir)?;

    let mut echo = ManifestEcho {
        name: &manifest.name,
        version: VERSION,
        manifest_path,
        config: &cfg,
        grid: spec.clone(),
        datasets: datasets
            .iter()
            .map(|d| DatasetEcho {
                name: &d.name,
                questions: d.records.len(),
            })
            .collect(),
        cells: cells.len(),
        llm_backend: pipeline.llm().name(),
        honors_seed: pipeline.llm().honors_seed(),
        embedder: pipeline.embeddings().fingerprint(),
        inference_seed: "sampling seed",
        started_unix: unix_now(),
        finished_unix: None,
    };
    write_echo(&out_dir, &echo)?;
    if !echo.honors_seed {
        tracing::warn!(backend = %echo.llm_backend, "language model backend does not honor seeds; runs are not reproducible");
    }

    if warm_cache && needs_graph {
        pool.install(|| warm(pipeline.graph(), pipeline.embeddings(), 64))?;
    }

    let total = cells.len();
    let mut done = 0;
    let mut progress = |r: &kgrag::bench::EvalResult, cached: bool| {
        done += 1;
        let errors = r.records.iter().filter(|q| q.error.is_some()).count();
        eprintln!(
            "[{done}/{total}] {}  hit@1 {:.4} ± {:.4}{}{}",
            r.key,
            r.mean_hit1,
            r.std_hit1,
            if errors > 0 { format!("  ({errors} failed questions)") } else { String::new() },
            if cached { "  (stored)" } else { "" }
        );
    };
    let results = pool.install(|| run_grid(&pipeline, &datasets, &spec, Some(&mut store), &mut progress));
    pipeline.embeddings().cache().flush()?;
    let results = results?;

    let mut written = Vec::new();
    for format in &manifest.formats {
        let file = out_dir.join(match format {
            OutputFormat::Csv => "results.csv",
            OutputFormat::Json => "results.json",
        });
        emit_results(&results, *format, &file)?;
        written.push(file);
    }
    echo.finished_unix = Some(unix_now());
    write_echo(&out_dir, &echo)?;

    if g.json {
        let summary: Vec<_> = results
            .iter()
            .map(|r| {
                json!({
                    "key": r.key,
                    "seeds": r.seeds.len(),
                    "sample_size": r.sample_size,
                    "per_seed_hit1": r.per_seed_hit1,
                    "mean_hit1": r.mean_hit1,
                    "std_hit1": r.std_hit1,
                })
            })
            .collect();
        print_json(&json!({ "config": cfg, "results": summary, "files": written }))
    } else {
        let mut text = render::results_table(&results);
        for f in written {
            let _ = writeln!(text, "wrote {}", f.display());
        }
        emit(&text)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Ingest { path, delimiter } => cmd_ingest(g, path, delimiter),
        Command::Stats => cmd_stats(g),
        Command::Retrieve { entities } => cmd_retrieve(g, &entities),
        Command::Ask {
            question,
            entities,
            variant,
            warm_cache,
        } => cmd_ask(g, &question, &entities, variant, warm_cache),
        Command::WarmCache { batch_size } => cmd_warm_cache(g, batch_size),
        Command::Bench {
            manifest,
            dry_run,
            out_dir,
            warm_cache,
        } => cmd_bench(g, &manifest, dry_run, out_dir, warm_cache),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.global.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
