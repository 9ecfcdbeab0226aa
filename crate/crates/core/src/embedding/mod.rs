//! Text embeddings behind a pluggable backend, a fingerprinted cache, and
//! exact top-K selection.

mod cache;
mod hash;
mod http;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::EmbeddingCache;
pub use hash::{hash_embed, HashEmbedder, HASH_EMBED_DIM};
pub use http::{HttpEmbedder, HttpEmbedderConfig};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("embedding dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed embedding response: {0}")]
    MalformedResponse(String),
    #[error("embedding backend timed out")]
    Timeout,
    #[error("embedding cache file: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifies which model produced a vector. Vectors from different
/// fingerprints are never compared.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub model: String,
    pub dim: usize,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.model, self.dim)
    }
}

/// Shared, immutable vector.
pub type Embedding = Arc<[f32]>;

pub trait Embedder: Send + Sync {
    fn fingerprint(&self) -> Fingerprint;

    /// Embeds a batch; the result has one vector per input, in order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbeddingError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    #[default]
    Dot,
    Cosine,
}

/// Dot product with f64 accumulation.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Similarity::Dot => "dot",
            Similarity::Cosine => "cosine",
        })
    }
}

impl std::str::FromStr for Similarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(Similarity::Dot),
            "cosine" | "cos" => Ok(Similarity::Cosine),
            other => Err(format!("unknown similarity {other:?}")),
        }
    }
}

impl Similarity {
    pub fn score(self, a: &[f32], b: &[f32]) -> f64 {
        match self {
            Similarity::Dot => dot(a, b),
            Similarity::Cosine => {
                let denom = norm(a) * norm(b);
                if denom == 0.0 {
                    0.0
                } else {
                    dot(a, b) / denom
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub text: String,
    pub score: f64,
    pub original_index: usize,
}

/// Heap entry ordered so that the *worst* candidate is the heap maximum.
struct Ranked {
    score: f64,
    index: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.index.cmp(&other.index))
    }
}

/// Returns the `k` best candidates by descending score; equal scores keep
/// input order. Runs in `O(n log k)` with a bounded heap.
pub fn top_k<T: AsRef<str>>(
    query: &[f32],
    candidates: &[(T, Embedding)],
    k: usize,
    similarity: Similarity,
) -> Result<Vec<ScoredCandidate>, EmbeddingError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut heap = BinaryHeap::with_capacity(k + 1);
    for (index, (_, v)) in candidates.iter().enumerate() {
        if v.len() != query.len() {
            return Err(EmbeddingError::DimensionMismatch(format!(
                "candidate {index} has {} dims, query has {}",
                v.len(),
                query.len()
            )));
        }
        let entry = Ranked {
            score: similarity.score(query, v),
            index,
        };
        if heap.len() < k {
            heap.push(entry);
        } else if let Some(worst) = heap.peek() {
            if entry < *worst {
                heap.pop();
                heap.push(entry);
            }
        }
    }
    Ok(heap
        .into_sorted_vec()
        .into_iter()
        .map(|r| ScoredCandidate {
            text: candidates[r.index].0.as_ref().to_string(),
            score: r.score,
            original_index: r.index,
        })
        .collect())
}

/// A backend paired with its cache. All vectors handed out by one store
/// share a fingerprint.
pub struct EmbeddingStore {
    backend: Arc<dyn Embedder>,
    cache: EmbeddingCache,
    batch_size: usize,
}

impl EmbeddingStore {
    pub fn new(backend: Arc<dyn Embedder>, cache: EmbeddingCache) -> Result<Self, EmbeddingError> {
        let fp = backend.fingerprint();
        if cache.fingerprint() != &fp {
            return Err(EmbeddingError::DimensionMismatch(format!(
                "cache was built for {}, backend is {}",
                cache.fingerprint(),
                fp
            )));
        }
        Ok(Self {
            backend,
            cache,
            batch_size: 64,
        })
    }

    /// In-memory cache only.
    pub fn ephemeral(backend: Arc<dyn Embedder>) -> Self {
        let cache = EmbeddingCache::in_memory(backend.fingerprint());
        Self {
            backend,
            cache,
            batch_size: 64,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.backend.fingerprint()
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    pub fn embed_one(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        Ok(self.embed_texts(&[text])?.remove(0))
    }

    /// Order-preserving; consults the cache first and sends each distinct
    /// missing text to the backend once.
    pub fn embed_texts<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>, EmbeddingError> {
        let fp = self.backend.fingerprint();
        if self.cache.fingerprint() != &fp {
            return Err(EmbeddingError::DimensionMismatch(format!(
                "cache holds {}, backend now reports {}",
                self.cache.fingerprint(),
                fp
            )));
        }
        let mut out: Vec<Option<Embedding>> = texts.iter().map(|t| self.cache.get(t.as_ref())).collect();
        let mut missing: Vec<&str> = Vec::new();
        let mut seen = HashSet::new();
        for (t, slot) in texts.iter().zip(&out) {
            if slot.is_none() && seen.insert(t.as_ref()) {
                missing.push(t.as_ref());
            }
        }
        for chunk in missing.chunks(self.batch_size) {
            let vectors = self.backend.embed_batch(chunk)?;
            if vectors.len() != chunk.len() {
                return Err(EmbeddingError::MalformedResponse(format!(
                    "asked for {} embeddings, got {}",
                    chunk.len(),
                    vectors.len()
                )));
            }
            for (text, v) in chunk.iter().zip(vectors) {
                if v.len() != fp.dim {
                    return Err(EmbeddingError::DimensionMismatch(format!(
                        "backend declared {} dims but returned {}",
                        fp.dim,
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(EmbeddingError::MalformedResponse("non-finite embedding value".into()));
                }
                self.cache.insert(text, v.into())?;
            }
        }
        for (t, slot) in texts.iter().zip(out.iter_mut()) {
            if slot.is_none() {
                *slot = self.cache.get(t.as_ref());
            }
        }
        Ok(out.into_iter().map(|v| v.expect("every text cached")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

    struct Fixed {
        calls: AtomicUsize,
        texts: AtomicUsize,
        dim: usize,
        model: &'static str,
    }

    impl Fixed {
        fn new(model: &'static str, dim: usize) -> Self {
            Self {
                calls: AtomicUsize::new(0),
                texts: AtomicUsize::new(0),
                dim,
                model,
            }
        }
    }

    impl Embedder for Fixed {
        fn fingerprint(&self) -> Fingerprint {
            Fingerprint {
                model: self.model.into(),
                dim: self.dim,
            }
        }

        fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
            self.calls.fetch_add(1, AtomicOrdering::SeqCst);
            self.texts.fetch_add(texts.len(), AtomicOrdering::SeqCst);
            Ok(texts.iter().map(|t| hash_embed(t)[..self.dim].to_vec()).collect())
        }
    }

    fn cands(vs: &[&[f32]]) -> Vec<(String, Embedding)> {
        vs.iter()
            .enumerate()
            .map(|(i, v)| (format!("c{i}"), Embedding::from(v.to_vec())))
            .collect()
    }

    #[test]
    fn top_k_hand_example() {
        let c = cands(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        let got = top_k(&[1.0, 0.0], &c, 2, Similarity::Dot).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!((got[0].original_index, got[0].score), (0, 1.0));
        assert_eq!((got[1].original_index, got[1].score), (2, 0.5));
    }

    #[test]
    fn top_k_ties_prefer_earlier() {
        let c = cands(&[&[0.3, 0.4], &[0.3, 0.4]]);
        let got = top_k(&[1.0, 1.0], &c, 1, Similarity::Dot).unwrap();
        assert_eq!(got[0].original_index, 0);
    }

    #[test]
    fn top_k_underfull_pool() {
        let vs: Vec<Vec<f32>> = (0..7).map(|i| vec![i as f32, 1.0]).collect();
        let c: Vec<(String, Embedding)> = vs.iter().map(|v| ("x".to_string(), Embedding::from(v.clone()))).collect();
        let got = top_k(&[1.0, 0.0], &c, 30, Similarity::Dot).unwrap();
        assert_eq!(got.len(), 7);
        assert_eq!(got[0].original_index, 6);
    }

    #[test]
    fn top_k_rejects_mismatched_dims() {
        let c = cands(&[&[1.0, 0.0, 0.0]]);
        assert!(matches!(
            top_k(&[1.0, 0.0], &c, 1, Similarity::Dot),
            Err(EmbeddingError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn cosine_ignores_magnitude() {
        let c = cands(&[&[10.0, 0.0], &[0.6, 0.8]]);
        let got = top_k(&[0.0, 1.0], &c, 2, Similarity::Cosine).unwrap();
        assert_eq!(got[0].original_index, 1);
        assert!((got[0].score - 0.8).abs() < 1e-7);
    }

    #[test]
    fn dot_is_symmetric() {
        let a = hash_embed("alpha beta");
        let b = hash_embed("beta gamma");
        assert_eq!(dot(&a, &b), dot(&b, &a));
    }

    #[test]
    fn repeated_text_hits_backend_once() {
        let backend = Arc::new(Fixed::new("fixed", 8));
        let store = EmbeddingStore::ephemeral(backend.clone());
        let v = store.embed_texts(&["a", "a"]).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(backend.texts.load(AtomicOrdering::SeqCst), 1);
        store.embed_texts(&["a"]).unwrap();
        assert_eq!(backend.calls.load(AtomicOrdering::SeqCst), 1);
    }

    #[test]
    fn warm_cache_equals_cold() {
        let texts = ["one", "two", "three", "two"];
        let cold = EmbeddingStore::ephemeral(Arc::new(HashEmbedder)).embed_texts(&texts).unwrap();
        let store = EmbeddingStore::ephemeral(Arc::new(HashEmbedder));
        store.embed_texts(&texts[1..]).unwrap();
        let warm = store.embed_texts(&texts).unwrap();
        assert_eq!(cold, warm);
    }

    #[test]
    fn cache_from_other_fingerprint_is_rejected() {
        let cache = EmbeddingCache::in_memory(Fingerprint {
            model: "other".into(),
            dim: 8,
        });
        cache.insert("a", vec![0.0; 8].into()).unwrap();
        let err = EmbeddingStore::new(Arc::new(Fixed::new("fixed", 8)), cache).err().unwrap();
        assert!(matches!(err, EmbeddingError::DimensionMismatch(_)));
    }

    #[test]
    fn batches_respect_batch_size() {
        let backend = Arc::new(Fixed::new("fixed", 4));
        let store = EmbeddingStore::ephemeral(backend.clone()).with_batch_size(2);
        store.embed_texts(&["a", "b", "c", "d", "e"]).unwrap();
        assert_eq!(backend.calls.load(AtomicOrdering::SeqCst), 3);
    }
}
