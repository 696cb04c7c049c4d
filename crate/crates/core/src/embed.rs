//! Signed feature-hashing text embedder.
//!
//! Text is lowercased and split on non-alphanumeric characters; token
//! n-grams are hashed into a fixed number of buckets with a sign bit, and
//! the resulting sparse count vector is L2-normalized. The same embedder
//! serves article retrieval, stance detection, and node features, so two
//! texts are comparable whenever they were embedded under the same
//! [`EmbedderConfig`].
//!
//! Embedding is fully deterministic: equal `(text, config)` pairs produce
//! bit-identical vectors on every platform.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Default number of hash buckets (vector dimensionality).
pub const DEFAULT_DIMENSION: usize = 256;
/// Smallest permitted dimensionality; below this, hash collisions dominate.
pub const MIN_DIMENSION: usize = 8;

/// Configuration for the hashing embedder.
///
/// `seed` perturbs the hash function, so embeddings from different seeds
/// are mutually incomparable. `ngram_min..=ngram_max` selects which token
/// n-gram lengths contribute features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbedderConfig {
    pub dimension: usize,
    pub seed: u64,
    pub ngram_min: usize,
    pub ngram_max: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            dimension: DEFAULT_DIMENSION,
            seed: 0,
            ngram_min: 1,
            ngram_max: 2,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension < MIN_DIMENSION {
            return Err(EmbedError::InvalidConfig {
                reason: "dimension below minimum",
            });
        }
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max {
            return Err(EmbedError::InvalidConfig {
                reason: "require 1 <= ngram_min <= ngram_max",
            });
        }
        Ok(())
    }
}

/// Dense embedding vector. Unit 2-norm by construction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Wraps raw values without normalizing. Intended for test fixtures and
    /// for vectors already normalized by [`Embedding::normalized`].
    pub fn from_raw(values: Vec<f64>) -> Embedding {
        Embedding(values)
    }

    /// Normalizes `values` to unit 2-norm.
    pub fn normalized(values: Vec<f64>) -> Result<Embedding, EmbedError> {
        let mut v = values;
        if !l2_normalize(&mut v) {
            return Err(EmbedError::CancelledToZero);
        }
        Ok(Embedding(v))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    /// The input tokenized to zero tokens (empty, whitespace, punctuation).
    #[error("text contains no alphanumeric tokens")]
    EmptyText,
    /// Pathological case: every hash bucket cancelled to exactly zero, so no
    /// unit vector exists. Impossible with the default 1..=2 n-gram range
    /// (the feature count is odd there) but reachable with custom ranges.
    #[error("hashed features cancelled to a zero vector")]
    CancelledToZero,
    #[error("invalid embedder config: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    /// Cosine similarity is undefined against a zero-norm vector.
    #[error("cosine undefined for zero-norm vector")]
    ZeroNorm,
}

/// Lowercases `text` and splits it on non-alphanumeric characters.
///
/// Alphanumeric is the Unicode property, so accented words and non-Latin
/// scripts survive tokenization.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// Embeds `text` under `cfg`: hash each token n-gram into a signed bucket,
/// then L2-normalize.
///
/// Errors with [`EmbedError::EmptyText`] when nothing tokenizes.
pub fn embed(text: &str, cfg: &EmbedderConfig) -> Result<Embedding, EmbedError> {
    cfg.validate()?;
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let mut values = vec![0.0f64; cfg.dimension];
    let hash_seed = splitmix64(cfg.seed);
    let mut gram = String::new();
    for n in cfg.ngram_min..=cfg.ngram_max {
        if n > tokens.len() {
            break;
        }
        for window in tokens.windows(n) {
            gram.clear();
            for (i, tok) in window.iter().enumerate() {
                if i > 0 {
                    // Unit separator cannot appear inside tokens, so joined
                    // grams are unambiguous.
                    gram.push('\u{1f}');
                }
                gram.push_str(tok);
            }
            let h = fnv1a64(gram.as_bytes(), hash_seed);
            let bucket = (h % cfg.dimension as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
    }
    if !l2_normalize(&mut values) {
        return Err(EmbedError::CancelledToZero);
    }
    Ok(Embedding(values))
}

/// Inner product of two equal-dimension vectors.
pub fn dot(a: &Embedding, b: &Embedding) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(dot_slices(a.values(), b.values()))
}

/// Cosine similarity; errors when either vector has zero norm.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let na = norm(a.values());
    let nb = norm(b.values());
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok(dot_slices(a.values(), b.values()) / (na * nb))
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn norm(values: &[f64]) -> f64 {
    math::sqrt(dot_slices(values, values))
}

/// Scales `values` to unit 2-norm in place; returns false when the norm is
/// zero (nothing to normalize).
fn l2_normalize(values: &mut [f64]) -> bool {
    let n = norm(values);
    if n == 0.0 {
        return false;
    }
    for v in values.iter_mut() {
        *v /= n;
    }
    true
}

/// FNV-1a over `bytes`, with the offset basis perturbed by `seed_mix`.
fn fnv1a64(bytes: &[u8], seed_mix: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET ^ seed_mix;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// SplitMix64 finalizer; spreads small seeds across all 64 bits.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
