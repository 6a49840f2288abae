//! Corpus ingest, validation, and persistence.
//!
//! The corpus file is line-delimited JSON, one document per line. Invalid
//! records are collected into a rejection report, never silently dropped.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::text::normalize_ref_key;

pub const MIN_YEAR: i32 = 1800;

/// Upper bound for plausible publication years: next calendar year.
pub fn max_year() -> i32 {
    time::OffsetDateTime::now_utc().year() + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    ComputerScience,
    NaturalScience,
    Healthcare,
    Humanities,
    #[default]
    Other,
}

impl DomainTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            DomainTag::ComputerScience => "computer_science",
            DomainTag::NaturalScience => "natural_science",
            DomainTag::Healthcare => "healthcare",
            DomainTag::Humanities => "humanities",
            DomainTag::Other => "other",
        }
    }
}

/// One entry in a document's reference list. Serialized as the raw title
/// string; the normalized key is derived on construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct RefEntry {
    pub raw_title: String,
    pub norm_key: String,
}

impl RefEntry {
    pub fn new(raw_title: impl Into<String>) -> Self {
        let raw_title = raw_title.into();
        let norm_key = normalize_ref_key(&raw_title);
        RefEntry { raw_title, norm_key }
    }
}

impl From<String> for RefEntry {
    fn from(raw: String) -> Self {
        RefEntry::new(raw)
    }
}

impl From<RefEntry> for String {
    fn from(entry: RefEntry) -> Self {
        entry.raw_title
    }
}

/// One paper: identity, text, bibliographic metadata, and reference list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_count: Option<u64>,
    #[serde(default)]
    pub references: Vec<RefEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(default)]
    pub domain_tag: DomainTag,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub augmented: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation_status: Option<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            title: title.into(),
            abstract_text: String::new(),
            body: String::new(),
            venue: None,
            year: None,
            authors: Vec::new(),
            citation_count: None,
            references: Vec::new(),
            source_url: None,
            domain_tag: DomainTag::Other,
            augmented: false,
            augmentation_status: None,
        }
    }

    /// Normalized key of this document's own title (used for closed-corpus
    /// reference resolution).
    pub fn title_key(&self) -> String {
        normalize_ref_key(&self.title)
    }

    /// Validate this document's invariants; on success, returns a copy with
    /// duplicate normalized reference keys removed (first occurrence wins).
    fn validated(mut self) -> std::result::Result<Self, String> {
        if self.doc_id.trim().is_empty() {
            return Err("doc_id is empty".into());
        }
        if self.title.trim().is_empty() {
            return Err("title is empty".into());
        }
        if let Some(year) = self.year {
            let max = max_year();
            if !(MIN_YEAR..=max).contains(&year) {
                return Err(format!("year {year} outside [{MIN_YEAR}, {max}]"));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        self.references
            .retain(|r| r.norm_key.is_empty() || seen.insert(r.norm_key.clone()));
        Ok(self)
    }
}

/// An immutable set of documents keyed by `doc_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub corpus_id: String,
    pub documents: BTreeMap<String, Document>,
    pub created_at: SystemTime,
    pub augmented: bool,
}

impl Corpus {
    pub fn from_documents(
        corpus_id: impl Into<String>,
        docs: impl IntoIterator<Item = Document>,
    ) -> Result<Self> {
        let mut documents = BTreeMap::new();
        for doc in docs {
            let doc = doc
                .validated()
                .map_err(|e| HarnessError::Corpus(format!("invalid document: {e}")))?;
            if documents.insert(doc.doc_id.clone(), doc).is_some() {
                return Err(HarnessError::Corpus("duplicate doc_id".into()));
            }
        }
        let augmented = !documents.is_empty() && documents.values().all(|d| d.augmented);
        Ok(Corpus {
            corpus_id: corpus_id.into(),
            documents,
            created_at: SystemTime::UNIX_EPOCH,
            augmented,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    /// Map from normalized title key to doc_id. On collisions the smallest
    /// doc_id wins, keeping resolution deterministic.
    pub fn title_index(&self) -> BTreeMap<String, String> {
        let mut index = BTreeMap::new();
        for doc in self.documents.values() {
            let key = doc.title_key();
            if key.is_empty() {
                continue;
            }
            index.entry(key).or_insert_with(|| doc.doc_id.clone());
        }
        index
    }
}

/// One rejected input record plus the reason it was rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejection {
    pub record: serde_json::Value,
    pub reason: String,
}

/// Result of ingesting a corpus file: the accepted documents plus every
/// rejected record. Accepted + rejected = input record count.
#[derive(Debug)]
pub struct IngestOutcome {
    pub corpus: Corpus,
    pub rejections: Vec<Rejection>,
}

/// Ingest a line-delimited corpus file. Duplicate doc_ids reject the later
/// record; records missing a title are rejected; an entirely empty corpus is
/// an error.
pub fn ingest_corpus(path: &Path) -> Result<IngestOutcome> {
    let file = File::open(path)
        .map_err(|e| HarnessError::Corpus(format!("unreadable file {}: {e}", path.display())))?;
    let reader = BufReader::new(file);

    let mut documents: BTreeMap<String, Document> = BTreeMap::new();
    let mut rejections = Vec::new();
    let mut saw_record = false;

    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        saw_record = true;
        let value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                rejections.push(Rejection {
                    record: serde_json::Value::String(line.clone()),
                    reason: format!("line {}: invalid json: {e}", line_no + 1),
                });
                continue;
            }
        };
        let doc: Document = match serde_json::from_value(value.clone()) {
            Ok(d) => d,
            Err(e) => {
                rejections.push(Rejection {
                    record: value,
                    reason: format!("line {}: schema mismatch: {e}", line_no + 1),
                });
                continue;
            }
        };
        let doc = match doc.validated() {
            Ok(d) => d,
            Err(reason) => {
                rejections.push(Rejection {
                    record: value,
                    reason: format!("line {}: {reason}", line_no + 1),
                });
                continue;
            }
        };
        if documents.contains_key(&doc.doc_id) {
            rejections.push(Rejection {
                record: value,
                reason: format!("line {}: duplicate doc_id {}", line_no + 1, doc.doc_id),
            });
            continue;
        }
        documents.insert(doc.doc_id.clone(), doc);
    }

    if !saw_record {
        return Err(HarnessError::Corpus(format!(
            "empty corpus file {}",
            path.display()
        )));
    }

    let corpus_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    let augmented = !documents.is_empty() && documents.values().all(|d| d.augmented);
    Ok(IngestOutcome {
        corpus: Corpus {
            corpus_id,
            documents,
            created_at: SystemTime::UNIX_EPOCH,
            augmented,
        },
        rejections,
    })
}

/// Serialize a corpus to line-delimited JSON, one document per line, in
/// doc_id order. Deterministic bytes for a given corpus.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut writer: W) -> Result<()> {
    for doc in corpus.documents.values() {
        serde_json::to_writer(&mut writer, doc)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Serialize a rejection report: the original record fields plus a reason.
pub fn write_rejections<W: Write>(rejections: &[Rejection], mut writer: W) -> Result<()> {
    for rejection in rejections {
        let mut value = rejection.record.clone();
        if let serde_json::Value::Object(map) = &mut value {
            map.insert(
                "reason".into(),
                serde_json::Value::String(rejection.reason.clone()),
            );
            serde_json::to_writer(&mut writer, &value)?;
        } else {
            serde_json::to_writer(&mut writer, rejection)?;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f
    }

    #[test]
    fn ingest_three_valid_records() {
        let f = write_lines(&[
            r#"{"doc_id":"p1","title":"Paper One"}"#,
            r#"{"doc_id":"p2","title":"Paper Two"}"#,
            r#"{"doc_id":"p3","title":"Paper Three"}"#,
        ]);
        let out = ingest_corpus(f.path()).unwrap();
        assert_eq!(out.corpus.len(), 3);
        assert!(out.rejections.is_empty());
    }

    #[test]
    fn ingest_rejects_duplicate_doc_id() {
        let f = write_lines(&[
            r#"{"doc_id":"p1","title":"Paper One"}"#,
            r#"{"doc_id":"p1","title":"Paper One Again"}"#,
        ]);
        let out = ingest_corpus(f.path()).unwrap();
        assert_eq!(out.corpus.len(), 1);
        assert_eq!(out.rejections.len(), 1);
        assert_eq!(out.corpus.get("p1").unwrap().title, "Paper One");
    }

    #[test]
    fn ingest_rejects_missing_title() {
        let f = write_lines(&[r#"{"doc_id":"p1","title":""}"#]);
        let out = ingest_corpus(f.path()).unwrap();
        assert_eq!(out.corpus.len(), 0);
        assert_eq!(out.rejections.len(), 1);
    }

    #[test]
    fn ingest_rejects_bad_year() {
        let f = write_lines(&[
            r#"{"doc_id":"p1","title":"Old","year":1700}"#,
            r#"{"doc_id":"p2","title":"Fine","year":2021}"#,
        ]);
        let out = ingest_corpus(f.path()).unwrap();
        assert_eq!(out.corpus.len(), 1);
        assert_eq!(out.rejections.len(), 1);
    }

    #[test]
    fn ingest_empty_file_is_error() {
        let f = write_lines(&[]);
        assert!(ingest_corpus(f.path()).is_err());
    }

    #[test]
    fn accepted_plus_rejected_equals_input() {
        let f = write_lines(&[
            r#"{"doc_id":"p1","title":"A"}"#,
            r#"{"doc_id":"p2","title":""}"#,
            r#"not json"#,
            r#"{"doc_id":"p1","title":"Dup"}"#,
        ]);
        let out = ingest_corpus(f.path()).unwrap();
        assert_eq!(out.corpus.len() + out.rejections.len(), 4);
    }

    #[test]
    fn duplicate_reference_keys_deduped() {
        let f = write_lines(&[
            r#"{"doc_id":"p1","title":"A","references":["Fine-Tuning Models","Fine Tuning Models","Other Work"]}"#,
        ]);
        let out = ingest_corpus(f.path()).unwrap();
        let doc = out.corpus.get("p1").unwrap();
        assert_eq!(doc.references.len(), 2);
    }

    #[test]
    fn roundtrip_preserves_documents() {
        let f = write_lines(&[
            r#"{"doc_id":"p2","title":"B","abstract":"b","body":"text here","venue":"ACL","year":2024,"authors":["X","Y"],"citation_count":3,"references":["R One","R Two"],"domain_tag":"computer_science"}"#,
            r#"{"doc_id":"p1","title":"A"}"#,
        ]);
        let out = ingest_corpus(f.path()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&out.corpus, &mut buf).unwrap();
        let mut f2 = tempfile::NamedTempFile::new().unwrap();
        f2.write_all(&buf).unwrap();
        let out2 = ingest_corpus(f2.path()).unwrap();
        assert_eq!(out.corpus.documents, out2.corpus.documents);
        assert!(out2.rejections.is_empty());
    }

    #[test]
    fn rejection_report_carries_reason_field() {
        let rejections = vec![Rejection {
            record: serde_json::json!({"doc_id":"p1","title":""}),
            reason: "line 1: title is empty".into(),
        }];
        let mut buf = Vec::new();
        write_rejections(&rejections, &mut buf).unwrap();
        let line: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(line["doc_id"], "p1");
        assert!(line["reason"].as_str().unwrap().contains("title"));
    }
}
