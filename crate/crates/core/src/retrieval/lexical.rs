//! Okapi BM25 inverted index.
//!
//! idf(term) = ln(1 + (N - df + 0.5) / (df + 0.5)), score contribution per
//! query term is idf * tf*(k1+1) / (tf + k1*(1 - b + b*len/avg_len)).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{HarnessError, Result};
use crate::scalar::Scalar;
use crate::text::{count_tokens, tokenize, truncate_tokens};

use super::{rank_hits, Hit, SearchResult, SearchTool, INDEX_TOKEN_LIMIT};

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params<S: Scalar> {
    pub k1: S,
    pub b: S,
}

impl<S: Scalar> Default for Bm25Params<S> {
    fn default() -> Self {
        // Conventional Okapi defaults; overridable in config.
        Bm25Params {
            k1: S::from_f64_lossy(1.2),
            b: S::from_f64_lossy(0.75),
        }
    }
}

/// Which document fields feed the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FieldPolicy {
    /// title + abstract + body
    #[default]
    FullText,
    BodyOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: String,
    pub term_frequency: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct DocDisplay {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Serialize",
    deserialize = "S: serde::de::DeserializeOwned"
))]
pub struct LexicalIndex<S: Scalar + Serialize> {
    pub format_version: u32,
    pub params: Bm25Params<S>,
    pub field_policy: FieldPolicy,
    pub doc_count: usize,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: BTreeMap<String, u64>,
    display: BTreeMap<String, DocDisplay>,
    total_len: u64,
}

impl<S: Scalar + Serialize + serde::de::DeserializeOwned> LexicalIndex<S> {
    /// Build the index over a corpus. Indexed text per document is the
    /// configured field set, truncated to 32,000 tokens. Deterministic for a
    /// given corpus.
    pub fn build(corpus: &Corpus, params: Bm25Params<S>, field_policy: FieldPolicy) -> Result<Self> {
        if corpus.is_empty() {
            return Err(HarnessError::Index("cannot index an empty corpus".into()));
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = BTreeMap::new();
        let mut display = BTreeMap::new();
        let mut total_len = 0u64;

        for doc in corpus.iter() {
            let text = match field_policy {
                FieldPolicy::FullText => {
                    format!("{}\n{}\n{}", doc.title, doc.abstract_text, doc.body)
                }
                FieldPolicy::BodyOnly => doc.body.clone(),
            };
            let text = truncate_tokens(&text, INDEX_TOKEN_LIMIT);
            let tokens = tokenize(text);
            let len = tokens.len() as u64;
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for token in tokens {
                *tf.entry(token).or_insert(0) += 1;
            }
            for (term, freq) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc_id: doc.doc_id.clone(),
                    term_frequency: freq,
                });
            }
            doc_lengths.insert(doc.doc_id.clone(), len);
            display.insert(
                doc.doc_id.clone(),
                DocDisplay {
                    title: doc.title.clone(),
                    abstract_text: doc.abstract_text.clone(),
                },
            );
            total_len += len;
        }
        // BTreeMap iteration over docs already yields doc_id-sorted postings.
        Ok(LexicalIndex {
            format_version: INDEX_FORMAT_VERSION,
            params,
            field_policy,
            doc_count: doc_lengths.len(),
            postings,
            doc_lengths,
            display,
            total_len,
        })
    }

    pub fn avg_doc_len(&self) -> S {
        S::from_f64_lossy(self.total_len as f64) / S::from_usize_lossy(self.doc_count)
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u64> {
        self.doc_lengths.get(doc_id).copied()
    }

    fn idf(&self, df: usize) -> S {
        let n = S::from_usize_lossy(self.doc_count);
        let df = S::from_usize_lossy(df);
        let half = S::from_f64_lossy(0.5);
        (S::one() + (n - df + half) / (df + half)).ln()
    }

    fn term_contribution(&self, tf: u32, df: usize, doc_len: u64) -> S {
        let k1 = self.params.k1;
        let b = self.params.b;
        let tf = S::from_f64_lossy(f64::from(tf));
        let len_ratio = S::from_f64_lossy(doc_len as f64) / self.avg_doc_len();
        let denom = tf + k1 * (S::one() - b + b * len_ratio);
        self.idf(df) * tf * (k1 + S::one()) / denom
    }

    /// BM25 score of one document for a tokenized query. Zero when no query
    /// term occurs in the document.
    pub fn bm25_score(&self, query_tokens: &[String], doc_id: &str) -> Result<S> {
        let doc_len = self
            .doc_lengths
            .get(doc_id)
            .copied()
            .ok_or_else(|| HarnessError::Index(format!("unknown doc_id {doc_id}")))?;
        let mut score = S::zero();
        for term in query_tokens {
            if let Some(postings) = self.postings.get(term) {
                if let Ok(pos) = postings.binary_search_by(|p| p.doc_id.as_str().cmp(doc_id)) {
                    score = score
                        + self.term_contribution(
                            postings[pos].term_frequency,
                            postings.len(),
                            doc_len,
                        );
                }
            }
        }
        Ok(score)
    }

    /// Top-k candidates for a text query. Only documents containing at least
    /// one query term are candidates; ties break by ascending doc_id.
    pub fn search_text(&self, query: &str, k: usize) -> Result<SearchResult<S>> {
        if k < 1 {
            return Err(HarnessError::Index("k must be >= 1".into()));
        }
        let query_tokens = tokenize(query);
        let mut scores: BTreeMap<&str, S> = BTreeMap::new();
        for term in &query_tokens {
            if let Some(postings) = self.postings.get(term) {
                let df = postings.len();
                for posting in postings {
                    let doc_len = self.doc_lengths[&posting.doc_id];
                    let contribution =
                        self.term_contribution(posting.term_frequency, df, doc_len);
                    let entry = scores.entry(posting.doc_id.as_str()).or_insert_with(S::zero);
                    *entry = *entry + contribution;
                }
            }
        }
        let hits = scores
            .into_iter()
            .map(|(doc_id, score)| {
                let display = &self.display[doc_id];
                Hit {
                    doc_id: doc_id.to_string(),
                    title: display.title.clone(),
                    abstract_text: display.abstract_text.clone(),
                    score,
                }
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
        if index.format_version != INDEX_FORMAT_VERSION {
            return Err(HarnessError::Index(format!(
                "unsupported index format version {}",
                index.format_version
            )));
        }
        Ok(index)
    }
}

impl<S: Scalar + Serialize + serde::de::DeserializeOwned> SearchTool<S> for LexicalIndex<S> {
    fn search(&self, query: &str, k: usize) -> Result<SearchResult<S>> {
        self.search_text(query, k)
    }
}

/// Token count of the indexed text for one document, before truncation.
pub fn raw_doc_tokens(title: &str, abstract_text: &str, body: &str) -> usize {
    count_tokens(title) + count_tokens(abstract_text) + count_tokens(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn doc(id: &str, body: &str) -> Document {
        let mut d = Document::new(id, format!("title {id}"));
        d.body = body.into();
        d
    }

    fn corpus(docs: Vec<Document>) -> Corpus {
        Corpus::from_documents("c", docs).unwrap()
    }

    fn index(docs: Vec<Document>) -> LexicalIndex<f64> {
        LexicalIndex::build(&corpus(docs), Bm25Params::default(), FieldPolicy::FullText).unwrap()
    }

    #[test]
    fn shared_term_postings_length() {
        let idx = index(vec![
            doc("a", "shared alpha"),
            doc("b", "shared beta"),
            doc("c", "shared gamma"),
        ]);
        assert_eq!(idx.postings["shared"].len(), 3);
    }

    #[test]
    fn long_doc_length_capped_at_limit() {
        let long_body = "word ".repeat(40_000);
        let idx = index(vec![doc("a", &long_body), doc("b", "short")]);
        assert_eq!(idx.doc_length("a"), Some(32_000));
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let docs = vec![doc("a", "alpha beta"), doc("b", "beta gamma")];
        let one = index(docs.clone());
        let two = index(docs);
        let mut buf1 = Vec::new();
        let mut buf2 = Vec::new();
        one.save(&mut buf1).unwrap();
        two.save(&mut buf2).unwrap();
        assert_eq!(buf1, buf2);
    }

    #[test]
    fn empty_corpus_is_error() {
        let c = Corpus::from_documents("c", Vec::new()).unwrap();
        assert!(LexicalIndex::<f64>::build(&c, Bm25Params::default(), FieldPolicy::FullText).is_err());
    }

    #[test]
    fn absent_term_scores_zero() {
        let idx = index(vec![doc("a", "alpha"), doc("b", "beta")]);
        for id in ["a", "b"] {
            let s = idx.bm25_score(&["missing".into()], id).unwrap();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn identical_documents_score_equal() {
        let idx = index(vec![doc("a", "same words here"), doc("b", "same words here")]);
        let q = vec!["same".to_string(), "words".to_string()];
        assert_eq!(
            idx.bm25_score(&q, "a").unwrap(),
            idx.bm25_score(&q, "b").unwrap()
        );
    }

    #[test]
    fn unknown_doc_is_error() {
        let idx = index(vec![doc("a", "alpha")]);
        assert!(idx.bm25_score(&["alpha".into()], "zz").is_err());
    }

    #[test]
    fn single_term_score_matches_reference_formula() {
        // 3-doc toy corpus, k1 = 1.2, b = 0.75, query "alpha".
        let idx = index(vec![
            doc("a", "alpha alpha beta"),
            doc("b", "alpha gamma"),
            doc("c", "delta epsilon"),
        ]);
        // Reference scorer, hand-rolled from the Okapi formula over the full
        // indexed text (title tokens included).
        let reference = |tf: f64, df: f64, len: f64, avg: f64| {
            let idf = (1.0 + (3.0 - df + 0.5) / (df + 0.5)).ln();
            idf * tf * (1.2 + 1.0) / (tf + 1.2 * (1.0 - 0.75 + 0.75 * len / avg))
        };
        let avg = (5.0 + 4.0 + 4.0) / 3.0;
        let got = idx.bm25_score(&["alpha".into()], "a").unwrap();
        assert!((got - reference(2.0, 2.0, 5.0, avg)).abs() < 1e-12);
        let got_b = idx.bm25_score(&["alpha".into()], "b").unwrap();
        assert!((got_b - reference(1.0, 2.0, 4.0, avg)).abs() < 1e-12);
    }

    #[test]
    fn search_k_larger_than_corpus_returns_all_ranked() {
        let idx = index(vec![doc("a", "alpha alpha"), doc("b", "alpha")]);
        let result = idx.search_text("alpha", 50).unwrap();
        assert_eq!(result.hits.len(), 2);
        assert!(result.hits[0].score >= result.hits[1].score);
    }

    #[test]
    fn hits_carry_title_and_abstract_only() {
        let mut d = doc("a", "alpha body text");
        d.abstract_text = "the abstract".into();
        let idx = index(vec![d]);
        let result = idx.search_text("alpha", 5).unwrap();
        assert_eq!(result.hits[0].title, "title a");
        assert_eq!(result.hits[0].abstract_text, "the abstract");
    }

    #[test]
    fn search_order_consistent_with_pairwise_scores() {
        let idx = index(vec![
            doc("a", "alpha alpha beta beta"),
            doc("b", "alpha beta"),
            doc("c", "alpha alpha alpha"),
            doc("d", "other things"),
        ]);
        let result = idx.search_text("alpha beta", usize::MAX).unwrap();
        let q = vec!["alpha".to_string(), "beta".to_string()];
        for pair in result.hits.windows(2) {
            let s0 = idx.bm25_score(&q, &pair[0].doc_id).unwrap();
            let s1 = idx.bm25_score(&q, &pair[1].doc_id).unwrap();
            assert!(s0 > s1 || (s0 == s1 && pair[0].doc_id < pair[1].doc_id));
        }
    }

    #[test]
    fn padding_doc_isolation_of_score_changes() {
        // With N and df held fixed (swap one query-term-free doc for
        // another), existing scores move only through avg_doc_len; when the
        // replacement also has average length, scores are bit-identical.
        let a = doc("a", "alpha beta gamma");
        let b = doc("b", "alpha delta xx");
        let q = vec!["alpha".to_string()];

        let idx1 = index(vec![a.clone(), b.clone(), doc("z", "pad pad pad")]);
        // Same length (5 tokens with title), still no query terms.
        let idx2 = index(vec![a.clone(), b.clone(), doc("z", "qqq www eee")]);
        assert_eq!(idx1.avg_doc_len(), idx2.avg_doc_len());
        for id in ["a", "b"] {
            let s1: f64 = idx1.bm25_score(&q, id).unwrap();
            let s2: f64 = idx2.bm25_score(&q, id).unwrap();
            assert_eq!(s1.to_bits(), s2.to_bits());
        }

        // Different padding length: avg_doc_len shifts, so scores shift.
        let idx3 = index(vec![a, b, doc("z", "pad pad pad pad pad pad pad")]);
        assert_ne!(idx1.avg_doc_len(), idx3.avg_doc_len());
        let s1: f64 = idx1.bm25_score(&q, "a").unwrap();
        let s3: f64 = idx3.bm25_score(&q, "a").unwrap();
        assert_ne!(s1, s3);
    }

    #[test]
    fn proportional_scaling_preserves_relative_order() {
        let small = vec![
            doc("a", "alpha alpha beta"),
            doc("b", "alpha beta beta beta"),
            doc("c", "gamma delta"),
        ];
        let doubled: Vec<Document> = small
            .iter()
            .map(|d| {
                let mut dd = d.clone();
                dd.body = format!("{} {}", d.body, d.body);
                dd.title = format!("{} {}", d.title, d.title);
                dd
            })
            .collect();
        let order = |docs: Vec<Document>| {
            let idx: LexicalIndex<f64> = index(docs);
            idx.search_text("alpha beta", 10)
                .unwrap()
                .hits
                .into_iter()
                .map(|h| h.doc_id)
                .collect::<Vec<_>>()
        };
        assert_eq!(order(small), order(doubled));
    }

    #[test]
    fn save_load_roundtrip() {
        let idx = index(vec![doc("a", "alpha beta"), doc("b", "gamma")]);
        let mut buf = Vec::new();
        idx.save(&mut buf).unwrap();
        let loaded = LexicalIndex::<f64>::load(&buf[..]).unwrap();
        assert_eq!(idx, loaded);
    }
}
