//! Embedding providers: a remote endpoint client with retry, and a
//! deterministic hashing embedder used for stub/offline runs.

use std::thread::sleep;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::scalar::Scalar;
use crate::text::tokenize;

pub trait Embedder<S: Scalar>: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<S>>;
}

/// Deterministic token-hashing embedder: each token lands in an FNV-1a
/// bucket with alternating sign, then the vector is returned un-normalized
/// (the index normalizes at insert). Stable across platforms and runs.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    pub dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        HashEmbedder { dimension }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl<S: Scalar> Embedder<S> for HashEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<S>> {
        let mut vector = vec![S::zero(); self.dimension];
        let tokens = tokenize(text);
        if tokens.is_empty() {
            // Deterministic unit direction for empty text.
            vector[0] = S::one();
            return Ok(vector);
        }
        for token in tokens {
            let h = fnv1a(token.as_bytes());
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if (h >> 32) & 1 == 0 { S::one() } else { -S::one() };
            vector[bucket] = vector[bucket] + sign;
        }
        if vector.iter().all(|v| *v == S::zero()) {
            // Sign cancellation; fall back to a stable direction.
            vector[0] = S::one();
        }
        Ok(vector)
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

/// Remote embedding endpoint: POST {"text": ...} -> {"vector": [...]}.
/// Retries transport failures 3 times with exponential backoff.
pub struct HttpEmbedder {
    endpoint: String,
    client: reqwest::blocking::Client,
    max_retries: u32,
    base_backoff: Duration,
    expected_dimension: usize,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, expected_dimension: usize) -> Self {
        HttpEmbedder {
            endpoint: endpoint.into(),
            client: reqwest::blocking::Client::new(),
            max_retries: 3,
            base_backoff: Duration::from_millis(100),
            expected_dimension,
        }
    }

    fn request(&self, text: &str) -> Result<Vec<f64>> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "text": text }))
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| HarnessError::Embedding(format!("transport: {e}")))?;
        let body: EmbedResponse = response
            .json()
            .map_err(|e| HarnessError::Embedding(format!("bad response: {e}")))?;
        Ok(body.vector)
    }
}

impl<S: Scalar> Embedder<S> for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<S>> {
        let mut last_err = None;
        for attempt in 0..self.max_retries {
            match self.request(text) {
                Ok(vector) => {
                    if vector.len() != self.expected_dimension {
                        return Err(HarnessError::Embedding(format!(
                            "endpoint returned dimension {}, expected {}",
                            vector.len(),
                            self.expected_dimension
                        )));
                    }
                    return Ok(vector.into_iter().map(S::from_f64_lossy).collect());
                }
                Err(e) => {
                    last_err = Some(e);
                    sleep(self.base_backoff * 2u32.pow(attempt));
                }
            }
        }
        Err(last_err.unwrap_or_else(|| HarnessError::Embedding("unreachable endpoint".into())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_embedder_is_deterministic() {
        let e = HashEmbedder::new(16);
        let a: Vec<f64> = e.embed("salience driven pruning").unwrap();
        let b: Vec<f64> = e.embed("salience driven pruning").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hash_embedder_never_zero() {
        let e = HashEmbedder::new(8);
        let v: Vec<f64> = e.embed("").unwrap();
        assert!(v.iter().any(|x| *x != 0.0));
    }
}
