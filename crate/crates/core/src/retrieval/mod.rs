//! Search tools exposed to the agent: a lexical BM25 index and an exact
//! full-scan vector index over truncated document text. Hits carry titles and
//! abstracts only, never full bodies.

pub mod embed;
pub mod lexical;
pub mod vector;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::scalar::Scalar;

/// Indexed text is truncated to this many tokens per document.
pub const INDEX_TOKEN_LIMIT: usize = 32_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    #[default]
    Lexical,
    Vector,
}

/// Per-search configuration: results per call and which index answers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k: usize,
    pub index_kind: IndexKind,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: 5,
            index_kind: IndexKind::Lexical,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(HarnessError::Index("k must be >= 1".into()));
        }
        Ok(())
    }
}

/// One retrieved document. Display fields only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit<S: Scalar> {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub score: S,
}

/// Ordered result list: scores non-increasing, ties broken by ascending
/// doc_id, at most k hits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult<S: Scalar> {
    pub hits: Vec<Hit<S>>,
}

/// The search interface handed to the agent loop: one text sub-query in, one
/// ranked result list out.
pub trait SearchTool<S: Scalar>: Send + Sync {
    fn search(&self, query: &str, k: usize) -> Result<SearchResult<S>>;
}

pub(crate) fn rank_hits<S: Scalar>(mut hits: Vec<Hit<S>>, k: usize) -> Vec<Hit<S>> {
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    hits.truncate(k);
    hits
}
