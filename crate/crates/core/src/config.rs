//! TOML run configuration and benchmark manifests. Relative paths resolve
//! against the directory of the file that names them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{load_metaqa_qa, BenchError, Dataset, GridSpec, MatchMode};
use crate::embedding::{Embedder, EmbeddingCache, EmbeddingStore, HashEmbedder, HttpEmbedder, HttpEmbedderConfig, Similarity};
use crate::kg::{KgError, KnowledgeGraph, LoadOptions};
use crate::llm::{CompletionBackend, HttpLlm, HttpLlmConfig, Profiles, ScriptedBackend};
use crate::pipeline::{Pipeline, RetrievalParams};
use crate::prompts::PromptSet;
use crate::retrieval::Direction;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("cannot set up backend: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum LlmConfig {
    Http(HttpLlmConfig),
    Scripted { rules: PathBuf },
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig::Http(HttpLlmConfig::default())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum EmbedderConfig {
    /// Deterministic offline embedder.
    Hash,
    Http(HttpEmbedderConfig),
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Http(HttpEmbedderConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalDefaults {
    pub n_hops: usize,
    pub top_k: usize,
    pub direction: Direction,
    pub similarity: Similarity,
    /// Allows `n_hops` above 3.
    pub force: bool,
}

impl Default for RetrievalDefaults {
    fn default() -> Self {
        let p = RetrievalParams::default();
        Self {
            n_hops: p.n_hops,
            top_k: p.top_k,
            direction: p.direction,
            similarity: p.similarity,
            force: false,
        }
    }
}

impl RetrievalDefaults {
    pub fn params(&self) -> RetrievalParams {
        RetrievalParams {
            n_hops: self.n_hops,
            top_k: self.top_k,
            direction: self.direction,
            similarity: self.similarity,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CacheConfig {
    /// Persistent embedding cache; in-memory when unset.
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kg_path: Option<PathBuf>,
    /// QA file per dataset name, e.g. `"1-hop"`.
    pub qa_paths: BTreeMap<String, PathBuf>,
    pub prompt_dir: Option<PathBuf>,
    pub icl_examples: Option<PathBuf>,
    /// Worker threads for concurrent questions.
    pub concurrency: usize,
    pub max_sub_questions: usize,
    pub llm: LlmConfig,
    pub embedder: EmbedderConfig,
    pub retrieval: RetrievalDefaults,
    pub cache: CacheConfig,
    pub profiles: Profiles,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kg_path: None,
            qa_paths: BTreeMap::new(),
            prompt_dir: None,
            icl_examples: None,
            concurrency: 4,
            max_sub_questions: crate::pipeline::DEFAULT_MAX_SUB_QUESTIONS,
            llm: LlmConfig::default(),
            embedder: EmbedderConfig::default(),
            retrieval: RetrievalDefaults::default(),
            cache: CacheConfig::default(),
            profiles: Profiles::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        parse(Path::new("<inline>"), text)
    }

    /// Parses and resolves relative paths; does not check that files exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let mut cfg: Self = parse(path, &read(path)?)?;
        cfg.resolve_paths(&base_dir(path));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.kg_path, &mut self.prompt_dir, &mut self.icl_examples, &mut self.cache.embeddings]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        for p in self.qa_paths.values_mut() {
            resolve(base, p);
        }
        if let LlmConfig::Scripted { rules } = &mut self.llm {
            resolve(base, rules);
        }
    }

    /// Every validation problem, including missing files.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut must_exist = |what: &str, p: &Path| {
            if !p.exists() {
                out.push(format!("{what} {} does not exist", p.display()));
            }
        };
        if let Some(p) = &self.kg_path {
            must_exist("kg_path", p);
        }
        for (name, p) in &self.qa_paths {
            must_exist(&format!("qa_paths.{name}"), p);
        }
        if let Some(p) = &self.prompt_dir {
            must_exist("prompt_dir", p);
        }
        if let Some(p) = &self.icl_examples {
            must_exist("icl_examples", p);
        }
        if let LlmConfig::Scripted { rules } = &self.llm {
            must_exist("llm.rules", rules);
        }
        out.extend(self.parameter_problems());
        out
    }

    pub fn parameter_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let r = &self.retrieval;
        if r.n_hops == 0 {
            out.push("retrieval.n_hops must be at least 1".into());
        } else if r.n_hops > 3 && !r.force {
            out.push(format!(
                "retrieval.n_hops = {} is outside 1..=3; set retrieval.force = true to allow it",
                r.n_hops
            ));
        }
        if r.top_k == 0 {
            out.push("retrieval.top_k must be at least 1".into());
        }
        if self.concurrency == 0 {
            out.push("concurrency must be at least 1".into());
        }
        if self.max_sub_questions == 0 {
            out.push("max_sub_questions must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(p))
        }
    }

    pub fn load_graph(&self) -> Result<KnowledgeGraph, KgError> {
        let path = self.kg_path.as_ref().ok_or_else(|| {
            KgError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no kg_path configured",
            ))
        })?;
        KnowledgeGraph::load(path, &LoadOptions::default())
    }

    pub fn build_llm(&self) -> Result<Arc<dyn CompletionBackend>, ConfigError> {
        Ok(match &self.llm {
            LlmConfig::Http(c) => Arc::new(HttpLlm::new(c.clone())),
            LlmConfig::Scripted { rules } => {
                Arc::new(ScriptedBackend::from_file(rules).map_err(|e| ConfigError::Backend(e.to_string()))?)
            }
        })
    }

    pub fn build_embedder(&self) -> Arc<dyn Embedder> {
        match &self.embedder {
            EmbedderConfig::Hash => Arc::new(HashEmbedder),
            EmbedderConfig::Http(c) => Arc::new(HttpEmbedder::new(c)),
        }
    }

    pub fn build_embedding_store(&self) -> Result<EmbeddingStore, ConfigError> {
        let backend = self.build_embedder();
        let Some(path) = &self.cache.embeddings else {
            return Ok(EmbeddingStore::ephemeral(backend));
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| ConfigError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        let cache = EmbeddingCache::open(path, backend.fingerprint()).map_err(|e| ConfigError::Backend(e.to_string()))?;
        EmbeddingStore::new(backend, cache).map_err(|e| ConfigError::Backend(e.to_string()))
    }

    pub fn prompts(&self) -> Result<PromptSet, ConfigError> {
        let mut set = match &self.prompt_dir {
            Some(dir) => PromptSet::load_dir(dir, self.icl_examples.as_deref()).map_err(|source| ConfigError::Io {
                path: dir.clone(),
                source,
            })?,
            None => PromptSet::default(),
        };
        if let (None, Some(icl)) = (&self.prompt_dir, &self.icl_examples) {
            set.icl_examples = read(icl)?;
        }
        Ok(set)
    }

    pub fn build_pipeline(&self, graph: Arc<KnowledgeGraph>) -> Result<Pipeline, ConfigError> {
        Ok(Pipeline::new(graph, self.build_llm()?, Arc::new(self.build_embedding_store()?))
            .with_prompts(self.prompts()?)
            .with_profiles(self.profiles.clone())
            .with_max_sub_questions(self.max_sub_questions))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    /// QA file; when absent the run config's `qa_paths[name]` is used.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub hop: Option<u8>,
}

fn default_formats() -> Vec<crate::bench::OutputFormat> {
    vec![crate::bench::OutputFormat::Csv, crate::bench::OutputFormat::Json]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestGrid {
    pub variants: Vec<crate::pipeline::Variant>,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
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

/// A benchmark run: datasets, parameter grid, and optionally the backend
/// configuration (inline or by reference).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    /// Base run configuration file.
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<crate::bench::OutputFormat>,
    pub grid: ManifestGrid,
    pub datasets: Vec<DatasetEntry>,
    /// Overrides for the base configuration.
    #[serde(default)]
    pub kg_path: Option<PathBuf>,
    #[serde(default)]
    pub llm: Option<LlmConfig>,
    #[serde(default)]
    pub embedder: Option<EmbedderConfig>,
    #[serde(default)]
    pub concurrency: Option<usize>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        parse(Path::new("<inline>"), text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let mut m: Self = parse(path, &read(path)?)?;
        let base = base_dir(path);
        for p in [&mut m.config, &mut m.out_dir, &mut m.kg_path].into_iter().flatten() {
            resolve(&base, p);
        }
        for d in &mut m.datasets {
            if let Some(p) = &mut d.path {
                resolve(&base, p);
            }
        }
        if let Some(LlmConfig::Scripted { rules }) = &mut m.llm {
            resolve(&base, rules);
        }
        Ok(m)
    }

    pub fn grid_spec(&self) -> GridSpec {
        let g = &self.grid;
        GridSpec {
            variants: g.variants.clone(),
            n_values: g.n_values.clone(),
            k_values: g.k_values.clone(),
            seeds: g.seeds.clone(),
            sample_size: g.sample_size,
            direction: g.direction,
            similarity: g.similarity,
            match_mode: g.match_mode,
        }
    }

    pub fn dataset_names(&self) -> Vec<&str> {
        self.datasets.iter().map(|d| d.name.as_str()).collect()
    }

    /// Applies this manifest's overrides to `base`.
    pub fn effective_config(&self, base: RunConfig) -> RunConfig {
        let mut cfg = base;
        if let Some(p) = &self.kg_path {
            cfg.kg_path = Some(p.clone());
        }
        if let Some(l) = &self.llm {
            cfg.llm = l.clone();
        }
        if let Some(e) = &self.embedder {
            cfg.embedder = e.clone();
        }
        if let Some(c) = self.concurrency {
            cfg.concurrency = c;
        }
        cfg
    }

    fn dataset_path<'a>(&'a self, entry: &'a DatasetEntry, cfg: &'a RunConfig) -> Option<&'a PathBuf> {
        entry.path.as_ref().or_else(|| cfg.qa_paths.get(&entry.name))
    }

    /// Every problem with the manifest against an effective configuration.
    pub fn problems(&self, cfg: &RunConfig) -> Vec<String> {
        let mut out = self.grid_spec().problems();
        if self.datasets.is_empty() {
            out.push("no datasets".into());
        }
        let mut names = std::collections::HashSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                out.push(format!("dataset {} listed twice", d.name));
            }
            match self.dataset_path(d, cfg) {
                None => out.push(format!("dataset {} has no path and no qa_paths entry", d.name)),
                Some(p) if !p.exists() => out.push(format!("dataset {} file {} does not exist", d.name, p.display())),
                Some(_) => {}
            }
        }
        if cfg.kg_path.is_none() && self.grid.variants.iter().any(|v| v.uses_retrieval()) {
            out.push("retrieval variants need kg_path".into());
        }
        out.extend(cfg.problems());
        out.sort();
        out.dedup();
        out
    }

    /// Loads every dataset; hop labels default to the digit in the name.
    pub fn load_datasets(&self, cfg: &RunConfig) -> Result<Vec<Dataset>, BenchError> {
        self.datasets
            .iter()
            .map(|d| {
                let path = self.dataset_path(d, cfg).ok_or_else(|| {
                    BenchError::InvalidGrid(format!("dataset {} has no path", d.name))
                })?;
                let hop = d
                    .hop
                    .or_else(|| d.name.chars().find(|c| c.is_ascii_digit()).and_then(|c| c.to_digit(10)).map(|h| h as u8))
                    .unwrap_or(0);
                Ok(Dataset {
                    name: d.name.clone(),
                    records: load_metaqa_qa(path, hop)?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = RunConfig::default();
        assert_eq!((c.retrieval.n_hops, c.retrieval.top_k), (3, 30));
        assert_eq!(c.retrieval.direction, Direction::Bidirectional);
        assert!(c.parameter_problems().is_empty());
    }

    #[test]
    fn parses_sections_and_backends() {
        let c = RunConfig::from_toml(
            r#"
            kg_path = "kb.txt"
            concurrency = 2
            [qa_paths]
            "1-hop" = "qa1.txt"
            [llm]
            backend = "scripted"
            rules = "rules.json"
            [embedder]
            backend = "hash"
            [retrieval]
            top_k = 10
            direction = "outgoing"
            "#,
        )
        .unwrap();
        assert!(matches!(c.llm, LlmConfig::Scripted { .. }));
        assert!(matches!(c.embedder, EmbedderConfig::Hash));
        assert_eq!(c.retrieval.top_k, 10);
        assert_eq!(c.retrieval.n_hops, 3);
        assert_eq!(c.retrieval.direction, Direction::Outgoing);

        let c = RunConfig::from_toml("[llm]\nbackend = \"http\"\nmodel = \"m\"\n").unwrap();
        match c.llm {
            LlmConfig::Http(h) => {
                assert_eq!(h.model, "m");
                assert_eq!(h.timeout_secs, 120);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("kg_pth = \"x\"").is_err());
    }

    #[test]
    fn hop_range_needs_force() {
        let mut c = RunConfig::default();
        c.retrieval.n_hops = 4;
        assert_eq!(c.parameter_problems().len(), 1);
        c.retrieval.force = true;
        assert!(c.parameter_problems().is_empty());
    }

    #[test]
    fn problems_are_listed_together() {
        let c = RunConfig {
            kg_path: Some("/nonexistent/kb.txt".into()),
            concurrency: 0,
            ..Default::default()
        };
        assert_eq!(c.problems().len(), 2);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "kg_path = \"kb.txt\"\n[llm]\nbackend = \"scripted\"\nrules = \"r.json\"\n").unwrap();
        let c = RunConfig::load(&p).unwrap();
        assert_eq!(c.kg_path.unwrap(), dir.path().join("kb.txt"));
        match c.llm {
            LlmConfig::Scripted { rules } => assert_eq!(rules, dir.path().join("r.json")),
            _ => panic!(),
        }
    }
}
