use serde::{Deserialize, Serialize};

use super::BenchError;

/// splitmix64; the sequence is fixed so samples reproduce in any language.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish integer in `0..bound` by plain modulo.
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub size: usize,
    pub seed: u64,
}

/// First `size` positions of a partial Fisher–Yates shuffle of `0..n`.
pub fn sample_indices(n: usize, size: usize, seed: u64) -> Result<Vec<usize>, BenchError> {
    if size > n {
        return Err(BenchError::SampleTooLarge { size, available: n });
    }
    let mut rng = SplitMix64::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = rng.below(n - i) + i;
        idx.swap(i, j);
    }
    idx.truncate(size);
    Ok(idx)
}

pub fn sample<T: Clone>(records: &[T], plan: SamplePlan) -> Result<Vec<T>, BenchError> {
    Ok(sample_indices(records.len(), plan.size, plan.seed)?
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}
