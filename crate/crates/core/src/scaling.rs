//! Corpus augmentation for retrieval at scale: prepend a metadata block and
//! eight LLM-extracted keywords to each document body so lexical search can
//! match on venue, year, authors, and topic terms.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{HarnessError, Result};
use crate::llm::{ChatRequest, LlmClient};
use crate::prompts::PromptSet;

/// Marker line separating the augmentation block from the original body.
/// Its presence means a document must not be augmented again.
pub const AUGMENT_MARKER: &str = "<!--augmented-v1-->";

/// Characters of body text offered to keyword extraction.
pub const KEYWORD_CONTENT_CHARS: usize = 20_000;

/// Keywords required per document.
pub const KEYWORD_COUNT: usize = 8;

/// Extraction attempts before falling back to metadata-only augmentation.
pub const KEYWORD_RETRY_BUDGET: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentStatus {
    /// Metadata block plus keywords.
    Full,
    /// Keywords could not be extracted; metadata block only.
    MetadataOnly,
}

impl AugmentStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AugmentStatus::Full => "full",
            AugmentStatus::MetadataOnly => "metadata_only",
        }
    }
}

/// Per-document outcome of a scaling run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub doc_id: String,
    pub status: AugmentStatus,
    pub retries: usize,
}

/// The metadata lines prepended to a body. Only fields present on the
/// document produce a line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AugmentationBlock {
    pub venue: Option<String>,
    pub year: Option<i32>,
    pub authors: Vec<String>,
    pub citation_count: Option<u64>,
    pub keywords: Vec<String>,
}

impl AugmentationBlock {
    pub fn from_document(doc: &Document, keywords: Vec<String>) -> Self {
        AugmentationBlock {
            venue: doc.venue.clone(),
            year: doc.year,
            authors: doc.authors.clone(),
            citation_count: doc.citation_count,
            keywords,
        }
    }

    /// Exact line format of the block, marker line last.
    pub fn render(&self) -> String {
        let mut lines = Vec::new();
        if let Some(venue) = &self.venue {
            lines.push(format!("**Venue:** {venue}"));
        }
        if let Some(year) = self.year {
            lines.push(format!("**Year:** {year}"));
        }
        if !self.authors.is_empty() {
            lines.push(format!("**Authors:** {}", self.authors.join("; ")));
        }
        if let Some(count) = self.citation_count {
            lines.push(format!("**Citations:** {count}"));
        }
        if !self.keywords.is_empty() {
            lines.push(format!("**Keywords:** {}", self.keywords.join(", ")));
        }
        lines.push(AUGMENT_MARKER.to_string());
        lines.join("\n")
    }
}

fn parse_keywords(raw: &str) -> std::result::Result<Vec<String>, String> {
    let keywords: Vec<String> = raw
        .trim()
        .split(',')
        .map(|k| k.trim().to_string())
        .filter(|k| !k.is_empty())
        .collect();
    if keywords.len() != KEYWORD_COUNT {
        return Err(format!(
            "expected {KEYWORD_COUNT} keywords, got {}",
            keywords.len()
        ));
    }
    Ok(keywords)
}

/// Extract exactly eight keywords from the first 20,000 characters of the
/// body. Returns the keywords and the number of rejected attempts; `None`
/// keywords means the retry budget ran out.
pub fn extract_keywords(
    doc: &Document,
    llm: &dyn LlmClient,
    prompts: &PromptSet,
) -> Result<(Option<Vec<String>>, usize)> {
    let template = prompts.get("keyword_extraction")?;
    let content: String = doc.body.chars().take(KEYWORD_CONTENT_CHARS).collect();
    let mut bindings = std::collections::BTreeMap::new();
    bindings.insert("content", content);
    let rendered = template.render(&bindings)?;
    let request = ChatRequest::user(rendered.system, rendered.user);

    let mut retries = 0;
    for _ in 0..KEYWORD_RETRY_BUDGET {
        let raw = llm.complete(&request)?;
        match parse_keywords(&raw) {
            Ok(keywords) => return Ok((Some(keywords), retries)),
            Err(_) => retries += 1,
        }
    }
    Ok((None, retries))
}

/// Prepend the augmentation block to the document body. A document carrying
/// the marker (or flagged augmented) is refused.
pub fn augment_document(doc: &Document, keywords: Option<Vec<String>>) -> Result<Document> {
    if doc.augmented || doc.body.contains(AUGMENT_MARKER) {
        return Err(HarnessError::Corpus(format!(
            "document {} is already augmented",
            doc.doc_id
        )));
    }
    let status = if keywords.is_some() {
        AugmentStatus::Full
    } else {
        AugmentStatus::MetadataOnly
    };
    let block = AugmentationBlock::from_document(doc, keywords.unwrap_or_default());
    let mut out = doc.clone();
    out.body = if doc.body.is_empty() {
        block.render()
    } else {
        format!("{}\n{}", block.render(), doc.body)
    };
    out.augmented = true;
    out.augmentation_status = Some(status.as_str().to_string());
    Ok(out)
}

/// Augment every document of a corpus into a new snapshot. The input corpus
/// is untouched; the output is flagged augmented and carries a per-document
/// report. Token-limit truncation happens later, at index build, so the block
/// always survives indexing.
pub fn scale_corpus(
    corpus: &Corpus,
    llm: &dyn LlmClient,
    prompts: &PromptSet,
) -> Result<(Corpus, Vec<ScaleRecord>)> {
    if corpus.augmented {
        return Err(HarnessError::Corpus(format!(
            "corpus {} is already augmented",
            corpus.corpus_id
        )));
    }
    let mut docs = Vec::new();
    let mut records = Vec::new();
    for doc in corpus.iter() {
        let (keywords, retries) = extract_keywords(doc, llm, prompts)?;
        let status = if keywords.is_some() {
            AugmentStatus::Full
        } else {
            AugmentStatus::MetadataOnly
        };
        docs.push(augment_document(doc, keywords)?);
        records.push(ScaleRecord {
            doc_id: doc.doc_id.clone(),
            status,
            retries,
        });
    }
    let scaled = Corpus::from_documents(format!("{}-augmented", corpus.corpus_id), docs)?;
    Ok((scaled, records))
}
