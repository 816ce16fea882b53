//! Text embedding providers for cue construction.
//!
//! The hash provider derives a deterministic unit vector per word from an
//! FNV-1a seed and mean-pools over words, so the same string embeds to the
//! same vector on every platform. The file-backed provider serves
//! precomputed vectors from a tensor container, keyed by the exact text.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::f3t::F3tContainer;
use crate::rng::Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64-bit hash of a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

#[derive(Debug, Clone)]
pub enum EmbeddingProvider {
    /// Deterministic hash embedder of the given dimension.
    DeskHash { dim_t: usize },
    /// Exact-match lookup over precomputed vectors.
    FileBacked {
        dim_t: usize,
        table: HashMap<String, Vec<f64>>,
    },
}

fn normalize_in_place(v: &mut [f64]) -> Result<()> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm < 1e-12 {
        return Err(Error::invalid("embedding has zero or non-finite norm"));
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(())
}

impl EmbeddingProvider {
    pub fn desk_hash(dim_t: usize) -> Result<Self> {
        if dim_t == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(EmbeddingProvider::DeskHash { dim_t })
    }

    /// Loads a file-backed provider from a tensor container. Every entry
    /// must be a rank-1 vector of one shared dimension; vectors are
    /// normalized at load.
    pub fn from_f3t(path: impl AsRef<Path>) -> Result<Self> {
        let container = F3tContainer::read_file(path)?;
        Self::from_container(&container)
    }

    pub fn from_container(container: &F3tContainer) -> Result<Self> {
        let mut table = HashMap::new();
        let mut dim_t = 0usize;
        for entry in container.entries() {
            if entry.dims.len() != 1 {
                return Err(Error::malformed(format!(
                    "embedding entry {:?} must be rank 1, got rank {}",
                    entry.key,
                    entry.dims.len()
                )));
            }
            let dim = entry.dims[0] as usize;
            if dim_t == 0 {
                dim_t = dim;
            } else if dim != dim_t {
                return Err(Error::malformed(format!(
                    "embedding entry {:?} has dimension {dim}, expected {dim_t}",
                    entry.key
                )));
            }
            let mut v: Vec<f64> = entry.data.iter().map(|&x| x as f64).collect();
            normalize_in_place(&mut v)?;
            table.insert(entry.key.clone(), v);
        }
        if table.is_empty() {
            return Err(Error::malformed("embedding container holds no entries"));
        }
        Ok(EmbeddingProvider::FileBacked { dim_t, table })
    }

    pub fn dim_t(&self) -> usize {
        match self {
            EmbeddingProvider::DeskHash { dim_t } => *dim_t,
            EmbeddingProvider::FileBacked { dim_t, .. } => *dim_t,
        }
    }

    /// Embeds `text` to a unit vector of dimension `dim_t`.
    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::invalid("cannot embed empty text"));
        }
        match self {
            EmbeddingProvider::DeskHash { dim_t } => embed_hash(trimmed, *dim_t),
            EmbeddingProvider::FileBacked { table, .. } => table
                .get(trimmed)
                .cloned()
                .ok_or_else(|| Error::MissingEmbedding(trimmed.to_string())),
        }
    }
}

/// Deterministic hash vector for a single word: FNV-1a seeds the generator,
/// which draws `dim_t` gaussians, normalized to unit length.
pub fn word_vector(word: &str, dim_t: usize) -> Result<Vec<f64>> {
    let mut rng = Rng::new(fnv1a64(word.as_bytes()));
    let mut v = rng.gaussian_vec(dim_t);
    normalize_in_place(&mut v)?;
    Ok(v)
}

fn embed_hash(text: &str, dim_t: usize) -> Result<Vec<f64>> {
    let lower = text.to_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    if words.is_empty() {
        return Err(Error::invalid("cannot embed whitespace-only text"));
    }
    let mut pooled = vec![0.0; dim_t];
    for word in &words {
        let v = word_vector(word, dim_t)?;
        for (p, x) in pooled.iter_mut().zip(v.iter()) {
            *p += x;
        }
    }
    let count = words.len() as f64;
    for p in pooled.iter_mut() {
        *p /= count;
    }
    normalize_in_place(&mut pooled)?;
    Ok(pooled)
}
