//! Exact full-scan vector index: unit-norm vectors, cosine similarity via dot
//! product. No approximate structure; the brute-force scan is the contract.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{HarnessError, Result};
use crate::scalar::Scalar;
use crate::text::truncate_tokens;

use super::embed::Embedder;
use super::{rank_hits, Hit, SearchResult, SearchTool, INDEX_TOKEN_LIMIT};

pub const VECTOR_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct VectorEntry<S: Scalar> {
    pub vector: Vec<S>,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Serialize",
    deserialize = "S: serde::de::DeserializeOwned"
))]
pub struct VectorIndex<S: Scalar + Serialize> {
    pub format_version: u32,
    pub dimension: usize,
    entries: BTreeMap<String, VectorEntry<S>>,
}

impl<S: Scalar + Serialize + serde::de::DeserializeOwned> VectorIndex<S> {
    pub fn new(dimension: usize) -> Self {
        VectorIndex {
            format_version: VECTOR_FORMAT_VERSION,
            dimension,
            entries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert a vector, normalizing to unit Euclidean norm. Rejects dimension
    /// mismatches and zero vectors.
    pub fn insert(
        &mut self,
        doc_id: &str,
        vector: Vec<S>,
        title: &str,
        abstract_text: &str,
    ) -> Result<()> {
        let vector = normalize(vector, self.dimension)?;
        self.entries.insert(
            doc_id.to_string(),
            VectorEntry {
                vector,
                title: title.to_string(),
                abstract_text: abstract_text.to_string(),
            },
        );
        Ok(())
    }

    pub fn get_vector(&self, doc_id: &str) -> Option<&[S]> {
        self.entries.get(doc_id).map(|e| e.vector.as_slice())
    }

    /// Top-k by cosine similarity against a query vector.
    pub fn search_vector(&self, query: &[S], k: usize) -> Result<SearchResult<S>> {
        if k < 1 {
            return Err(HarnessError::Index("k must be >= 1".into()));
        }
        if query.len() != self.dimension {
            return Err(HarnessError::Index(format!(
                "query dimension {} != index dimension {}",
                query.len(),
                self.dimension
            )));
        }
        let query = normalize(query.to_vec(), self.dimension)?;
        let hits = self
            .entries
            .iter()
            .map(|(doc_id, entry)| Hit {
                doc_id: doc_id.clone(),
                title: entry.title.clone(),
                abstract_text: entry.abstract_text.clone(),
                score: dot(&query, &entry.vector),
            })
            .collect();
        Ok(SearchResult {
            hits: rank_hits(hits, k),
        })
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let index: Self = serde_json::from_reader(reader)?;
        if index.format_version != VECTOR_FORMAT_VERSION {
            return Err(HarnessError::Index(format!(
                "unsupported vector index format version {}",
                index.format_version
            )));
        }
        Ok(index)
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| *x * *y).fold(S::zero(), |acc, v| acc + v)
}

fn normalize<S: Scalar>(mut vector: Vec<S>, dimension: usize) -> Result<Vec<S>> {
    if vector.len() != dimension {
        return Err(HarnessError::Index(format!(
            "vector dimension {} != expected {}",
            vector.len(),
            dimension
        )));
    }
    let norm = dot(&vector, &vector).sqrt();
    if norm == S::zero() || !norm.is_finite() {
        return Err(HarnessError::Index("cannot normalize zero vector".into()));
    }
    for v in &mut vector {
        *v = *v / norm;
    }
    Ok(vector)
}

/// Per-document failures collected while building a vector index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedDoc {
    pub doc_id: String,
    pub reason: String,
}

/// Embed every document (truncated to the index token limit) and build the
/// index. Embedding failures skip the document and are reported, never fatal.
pub fn build_vector_index<S: Scalar + Serialize + serde::de::DeserializeOwned>(
    corpus: &Corpus,
    embedder: &dyn Embedder<S>,
    dimension: usize,
) -> Result<(VectorIndex<S>, Vec<SkippedDoc>)> {
    if corpus.is_empty() {
        return Err(HarnessError::Index("cannot index an empty corpus".into()));
    }
    let mut index = VectorIndex::new(dimension);
    let mut skipped = Vec::new();
    for doc in corpus.iter() {
        let text = format!("{}\n{}\n{}", doc.title, doc.abstract_text, doc.body);
        let text = truncate_tokens(&text, INDEX_TOKEN_LIMIT);
        match embedder.embed(text) {
            Ok(vector) => {
                if let Err(e) = index.insert(&doc.doc_id, vector, &doc.title, &doc.abstract_text) {
                    skipped.push(SkippedDoc {
                        doc_id: doc.doc_id.clone(),
                        reason: e.to_string(),
                    });
                }
            }
            Err(e) => skipped.push(SkippedDoc {
                doc_id: doc.doc_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok((index, skipped))
}

/// Load a precomputed vector file: one line per document, `doc_id v1 .. vd`.
/// Display fields are resolved from the corpus; vectors for unknown doc_ids
/// are skipped and reported.
pub fn load_vector_file<S: Scalar + Serialize + serde::de::DeserializeOwned, R: Read>(
    reader: R,
    corpus: &Corpus,
    dimension: usize,
) -> Result<(VectorIndex<S>, Vec<SkippedDoc>)> {
    let mut index = VectorIndex::new(dimension);
    let mut skipped = Vec::new();
    for (line_no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let doc_id = parts
            .next()
            .ok_or_else(|| HarnessError::Index(format!("line {}: empty", line_no + 1)))?;
        let vector: std::result::Result<Vec<S>, _> = parts
            .map(|p| {
                p.parse::<f64>()
                    .map(S::from_f64_lossy)
                    .map_err(|e| HarnessError::Index(format!("line {}: {e}", line_no + 1)))
            })
            .collect();
        let vector = vector?;
        let Some(doc) = corpus.get(doc_id) else {
            skipped.push(SkippedDoc {
                doc_id: doc_id.to_string(),
                reason: "doc_id not in corpus".into(),
            });
            continue;
        };
        if let Err(e) = index.insert(doc_id, vector, &doc.title, &doc.abstract_text) {
            skipped.push(SkippedDoc {
                doc_id: doc_id.to_string(),
                reason: e.to_string(),
            });
        }
    }
    Ok((index, skipped))
}

/// A vector index paired with a query embedder, usable as an agent search
/// tool.
pub struct VectorSearchTool<S: Scalar + Serialize> {
    pub index: VectorIndex<S>,
    pub embedder: Box<dyn Embedder<S>>,
}

impl<S: Scalar + Serialize + serde::de::DeserializeOwned> SearchTool<S> for VectorSearchTool<S> {
    fn search(&self, query: &str, k: usize) -> Result<SearchResult<S>> {
        let vector = self.embedder.embed(query)?;
        self.index.search_vector(&vector, k)
    }
}
