//! Deterministic bag-of-tokens embedder for offline tests.
//!
//! Each lowercase alphanumeric token is hashed to one signed coordinate; the
//! counts are L2-normalized. Texts sharing tokens get larger dot products.

use sha2::{Digest, Sha256};

use super::{Embedder, EmbeddingError, Fingerprint};

pub const HASH_EMBED_DIM: usize = 64;
const MODEL_ID: &str = "hash-embed-v1";

fn tokens(text: &str) -> Vec<String> {
    let toks: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    if toks.is_empty() {
        vec![text.to_string()]
    } else {
        toks
    }
}

pub fn hash_embed(text: &str) -> Vec<f32> {
    let mut acc = [0f64; HASH_EMBED_DIM];
    for tok in tokens(text) {
        let digest = Sha256::digest(tok.as_bytes());
        let h = u64::from_le_bytes(digest[..8].try_into().expect("digest length"));
        let slot = (h % HASH_EMBED_DIM as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[slot] += sign;
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        // every token cancelled out; fall back to a fixed unit vector
        let mut v = vec![0f32; HASH_EMBED_DIM];
        v[0] = 1.0;
        return v;
    }
    acc.iter().map(|x| (x / norm) as f32).collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HashEmbedder;

impl Embedder for HashEmbedder {
    fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            model: MODEL_ID.into(),
            dim: HASH_EMBED_DIM,
        }
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
        Ok(texts.iter().map(|t| hash_embed(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::dot;

    #[test]
    fn deterministic_and_unit_norm() {
        for t in ["who directed Inception", "", "???", "a a a a", "(X, has genre, Y)"] {
            let v = hash_embed(t);
            assert_eq!(v, hash_embed(t));
            assert_eq!(v.len(), HASH_EMBED_DIM);
            assert!((dot(&v, &v).sqrt() - 1.0).abs() < 1e-6, "{t:?}");
        }
    }

    #[test]
    fn shared_tokens_score_higher() {
        let q = hash_embed("who directed Inception");
        let hit = hash_embed("(Inception, directed by, X)");
        let miss = hash_embed("(Y, has genre, Z)");
        assert!(dot(&q, &hit) > dot(&q, &miss));
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        assert_eq!(hash_embed("Tom Hardy"), hash_embed("(tom, hardy)"));
    }
}
