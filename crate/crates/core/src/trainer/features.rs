//! Hashed bag-of-n-grams features for a premise/hypothesis pair.

use crate::dataset::Sample;
use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Sparse feature vector: strictly increasing indices with nonzero values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    /// Builds a vector from unsorted indices, each contributing a count of one.
    pub fn from_counts(mut raw: Vec<u32>) -> Self {
        raw.sort_unstable();
        let mut indices = Vec::with_capacity(raw.len());
        let mut values: Vec<f64> = Vec::with_capacity(raw.len());
        for idx in raw {
            if indices.last() == Some(&idx) {
                *values.last_mut().unwrap() += 1.0;
            } else {
                indices.push(idx);
                values.push(1.0);
            }
        }
        Self { indices, values }
    }
}

/// Lowercases and splits on whitespace and punctuation; punctuation itself
/// is dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    hash_dim: usize,
    cross_cap: usize,
}

impl Featurizer {
    pub const DEFAULT_CROSS_CAP: usize = 30;

    pub fn new(hash_dim: usize, cross_cap: usize) -> Result<Self> {
        if hash_dim < 2 || !hash_dim.is_power_of_two() || hash_dim > (1 << 31) {
            return Err(Error::Config(format!(
                "hash_dim must be a power of two in [2, 2^31], got {hash_dim}"
            )));
        }
        Ok(Self { hash_dim, cross_cap })
    }

    pub fn hash_dim(&self) -> usize {
        self.hash_dim
    }

    /// The namespaced terms for `sample`, in emission order, before hashing.
    pub fn terms(&self, sample: &Sample) -> Vec<String> {
        let premise = tokenize(&sample.sentence1);
        let hypothesis = tokenize(&sample.sentence2);
        let mut terms = Vec::new();
        push_ngrams(&mut terms, "p", &premise);
        push_ngrams(&mut terms, "h", &hypothesis);
        for wp in premise.iter().take(self.cross_cap) {
            for wh in hypothesis.iter().take(self.cross_cap) {
                terms.push(format!("x:{wp}|{wh}"));
            }
        }
        terms
    }

    pub fn featurize(&self, sample: &Sample) -> FeatureVector {
        let mask = (self.hash_dim - 1) as u64;
        let raw = self
            .terms(sample)
            .iter()
            .map(|t| (fnv1a64(t.as_bytes()) & mask) as u32)
            .collect();
        FeatureVector::from_counts(raw)
    }
}

fn push_ngrams(terms: &mut Vec<String>, side: &str, tokens: &[String]) {
    for t in tokens {
        terms.push(format!("{side}1:{t}"));
    }
    for pair in tokens.windows(2) {
        terms.push(format!("{side}2:{}_{}", pair[0], pair[1]));
    }
}
