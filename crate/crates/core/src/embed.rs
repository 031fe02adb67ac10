//! Offline phrase embedding by signed feature hashing.
//!
//! A phrase is tokenised, the tokens are re-joined with single spaces, and
//! two kinds of features are hashed into [`EMBEDDING_DIM`] buckets:
//!
//! * every word unigram, keyed as `w:<token>`;
//! * every character 3-gram of the joined string (spaces included), keyed as
//!   `c:<trigram>`.
//!
//! Each feature adds `±1` to bucket `h % 512`, where `h` is the 64-bit FNV-1a
//! hash of the key and the sign is `+` when bit 32 of `h` is clear. The
//! result is L2-normalised. Text with no tokens maps to the zero vector.

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

pub const EMBEDDING_DIM: usize = 512;

/// A 512-dimensional phrase embedding: unit norm, or zero for empty text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zeros() -> Self {
        EmbeddingVector(vec![0.0; EMBEDDING_DIM])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        let (a, b) = (self.norm(), other.norm());
        if a == 0.0 || b == 0.0 {
            return 0.0;
        }
        self.0.iter().zip(&other.0).map(|(x, y)| x * y).sum::<f64>() / (a * b)
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Something that turns a phrase into an [`EmbeddingVector`].
pub trait Embedder: Sync {
    fn embed(&self, text: &str) -> EmbeddingVector;
}

/// The deterministic hashing embedder described in the module docs.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashingEmbedder;

impl Embedder for HashingEmbedder {
    fn embed(&self, text: &str) -> EmbeddingVector {
        embed_text(text)
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

fn add_feature(acc: &mut [f64], key: &str) {
    let h = fnv1a(key.as_bytes());
    let bucket = (h % EMBEDDING_DIM as u64) as usize;
    acc[bucket] += if h & (1 << 32) == 0 { 1.0 } else { -1.0 };
}

pub fn embed_text(text: &str) -> EmbeddingVector {
    let tokens = tokenize(text);
    let mut acc = vec![0.0; EMBEDDING_DIM];
    if tokens.is_empty() {
        return EmbeddingVector(acc);
    }
    for t in &tokens {
        add_feature(&mut acc, &format!("w:{t}"));
    }
    let joined: Vec<char> = tokens.join(" ").chars().collect();
    for gram in joined.windows(3) {
        let gram: String = gram.iter().collect();
        add_feature(&mut acc, &format!("c:{gram}"));
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    // Signed hashing can cancel every feature out; leave the zero vector then.
    if norm > 0.0 {
        acc.iter_mut().for_each(|v| *v /= norm);
    }
    EmbeddingVector(acc)
}
