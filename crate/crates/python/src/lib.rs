//! Python bindings: graph loading and statistics, candidate retrieval,
//! single-question answering, and the benchmark helpers.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use kgrag::bench::{self, MatchMode};
use kgrag::config::{ConfigError, RunConfig};
use kgrag::embedding::{hash_embed as core_hash_embed, EmbeddingStore, HashEmbedder};
use kgrag::kg::{KnowledgeGraph as CoreGraph, LoadOptions, RawTriple};
use kgrag::llm::ScriptedBackend;
use kgrag::retrieval::{buckets_to_json, retrieve_candidates};
use kgrag::{Direction, KgError, Pipeline as CorePipeline, PipelineError, RetrievalParams, Variant};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(kgrag_py, KgragError, PyException);
create_exception!(kgrag_py, DataError, KgragError);
create_exception!(kgrag_py, EntityNotFoundError, DataError);
create_exception!(kgrag_py, BackendError, KgragError);
create_exception!(kgrag_py, ConfigurationError, KgragError);

fn kg_err(e: KgError) -> PyErr {
    match e {
        KgError::EntityNotFound(_) => EntityNotFoundError::new_err(e.to_string()),
        _ => DataError::new_err(e.to_string()),
    }
}

fn pipeline_err(e: PipelineError) -> PyErr {
    match e {
        PipelineError::Kg(e) => kg_err(e),
        PipelineError::InvalidParams(_) => PyValueError::new_err(e.to_string()),
        _ => BackendError::new_err(e.to_string()),
    }
}

fn config_err(e: ConfigError) -> PyErr {
    ConfigurationError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

/// Converts a JSON value into plain Python objects.
fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| KgragError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// An immutable, interned triple store.
#[pyclass(frozen, module = "kgrag_py")]
struct KnowledgeGraph {
    inner: Arc<CoreGraph>,
}

#[pymethods]
impl KnowledgeGraph {
    /// Loads a `subject|relation|object` file.
    #[staticmethod]
    #[pyo3(signature = (path, delimiter = '|'))]
    fn load(py: Python<'_>, path: PathBuf, delimiter: char) -> PyResult<Self> {
        let opts = LoadOptions {
            delimiter,
            ..LoadOptions::default()
        };
        let graph = py.detach(|| CoreGraph::load(&path, &opts)).map_err(kg_err)?;
        Ok(Self { inner: Arc::new(graph) })
    }

    /// Builds a graph from `(subject, relation, object)` tuples.
    #[staticmethod]
    fn from_triples(triples: Vec<(String, String, String)>) -> Self {
        let raw = triples.into_iter().map(|(s, r, o)| RawTriple::new(s, r, o));
        Self {
            inner: Arc::new(CoreGraph::build(raw)),
        }
    }

    #[getter]
    fn entity_count(&self) -> usize {
        self.inner.entity_count()
    }

    #[getter]
    fn relation_count(&self) -> usize {
        self.inner.relation_count()
    }

    #[getter]
    fn triple_count(&self) -> usize {
        self.inner.triple_count()
    }

    fn __len__(&self) -> usize {
        self.inner.triple_count()
    }

    fn __contains__(&self, entity: &str) -> bool {
        self.inner.resolve_entity(entity).is_ok()
    }

    /// Degree statistics as a dict.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &self.inner.degree_stats())
    }

    /// Verbalized triples around `entities`, keyed by 1-based hop.
    #[pyo3(signature = (entities, n_hops = 3, direction = "bidirectional"))]
    fn retrieve(&self, entities: Vec<String>, n_hops: usize, direction: &str) -> PyResult<BTreeMap<usize, Vec<String>>> {
        let direction: Direction = parse(direction)?;
        let seeds = entities
            .iter()
            .map(|e| self.inner.resolve_entity(e))
            .collect::<Result<Vec<_>, _>>()
            .map_err(kg_err)?;
        let buckets = retrieve_candidates(&self.inner, &seeds, n_hops, direction);
        Ok(buckets_to_json(&self.inner, &buckets))
    }

    fn __repr__(&self) -> String {
        format!(
            "KnowledgeGraph(entities={}, relations={}, triples={})",
            self.inner.entity_count(),
            self.inner.relation_count(),
            self.inner.triple_count()
        )
    }
}

/// The question answering pipeline.
#[pyclass(frozen, module = "kgrag_py")]
struct Pipeline {
    inner: CorePipeline,
    graph: Arc<CoreGraph>,
    defaults: RetrievalParams,
}

#[pymethods]
impl Pipeline {
    /// Builds everything from a TOML run configuration.
    #[staticmethod]
    fn from_config(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        let cfg = RunConfig::load(&path).map_err(config_err)?;
        cfg.validate().map_err(config_err)?;
        let graph = match cfg.kg_path {
            Some(_) => py.detach(|| cfg.load_graph()).map_err(kg_err)?,
            None => CoreGraph::build(std::iter::empty()),
        };
        let graph = Arc::new(graph);
        let inner = cfg.build_pipeline(graph.clone()).map_err(config_err)?;
        Ok(Self {
            inner,
            graph,
            defaults: cfg.retrieval.params(),
        })
    }

    /// Offline pipeline: a scripted rule file and the hash embedder.
    #[staticmethod]
    fn scripted(graph: &KnowledgeGraph, rules: PathBuf) -> PyResult<Self> {
        let llm = ScriptedBackend::from_file(&rules).map_err(|e| ConfigurationError::new_err(e.to_string()))?;
        let store = EmbeddingStore::ephemeral(Arc::new(HashEmbedder));
        Ok(Self {
            inner: CorePipeline::new(graph.inner.clone(), Arc::new(llm), Arc::new(store)),
            graph: graph.inner.clone(),
            defaults: RetrievalParams::default(),
        })
    }

    #[getter]
    fn graph(&self) -> KnowledgeGraph {
        KnowledgeGraph {
            inner: self.graph.clone(),
        }
    }

    /// Answers one question and returns the full record as a dict.
    #[pyo3(signature = (question, entities, variant = "kg_rag", n_hops = None, top_k = None, direction = None, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn ask<'py>(
        &self,
        py: Python<'py>,
        question: &str,
        entities: Vec<String>,
        variant: &str,
        n_hops: Option<usize>,
        top_k: Option<usize>,
        direction: Option<&str>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let variant: Variant = parse(variant)?;
        let params = RetrievalParams {
            n_hops: n_hops.unwrap_or(self.defaults.n_hops),
            top_k: top_k.unwrap_or(self.defaults.top_k),
            direction: direction.map(parse).transpose()?.unwrap_or(self.defaults.direction),
            similarity: self.defaults.similarity,
        };
        let record = py
            .detach(|| self.inner.answer_question(question, &entities, variant, &params, seed))
            .map_err(pipeline_err)?;
        serialize(py, &record)
    }
}

/// Deterministic 64-dimensional unit-norm text embedding.
#[pyfunction]
fn hash_embed(text: &str) -> Vec<f32> {
    core_hash_embed(text)
}

/// 1 if the answer matches any gold answer after normalization, else 0.
#[pyfunction]
#[pyo3(signature = (answer, gold, mode = "exact"))]
fn hit_at_1(answer: &str, gold: Vec<String>, mode: &str) -> PyResult<u8> {
    let mode: MatchMode = parse(mode)?;
    Ok(bench::hit_at_1(answer, &gold, mode))
}

/// Indices of a seeded sample without replacement.
#[pyfunction]
fn sample_indices(n: usize, size: usize, seed: u64) -> PyResult<Vec<usize>> {
    bench::sample_indices(n, size, seed).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Population mean and standard deviation.
#[pyfunction]
fn mean_std(values: Vec<f64>) -> (f64, f64) {
    bench::mean_std(&values)
}

#[pymodule]
fn kgrag_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<KnowledgeGraph>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(hash_embed, m)?)?;
    m.add_function(wrap_pyfunction!(hit_at_1, m)?)?;
    m.add_function(wrap_pyfunction!(sample_indices, m)?)?;
    m.add_function(wrap_pyfunction!(mean_std, m)?)?;
    m.add("KgragError", py.get_type::<KgragError>())?;
    m.add("DataError", py.get_type::<DataError>())?;
    m.add("EntityNotFoundError", py.get_type::<EntityNotFoundError>())?;
    m.add("BackendError", py.get_type::<BackendError>())?;
    m.add("ConfigurationError", py.get_type::<ConfigurationError>())?;
    m.add("VARIANTS", Variant::ALL.iter().map(|v| v.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
