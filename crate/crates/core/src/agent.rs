//! ReAct-style search agent: a loop of THINK / SEARCH / ANSWER actions driven
//! by an LLM over a retrieval tool, with a hard tool-call budget and a forced
//! answer when the budget runs out.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{HarnessError, Result};
use crate::llm::{ChatRequest, LlmClient};
use crate::retrieval::{SearchResult, SearchTool};
use crate::text::normalize_ref_key;

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

/// Attempts to get a parseable action before the run is flagged failed.
pub const ACTION_PARSE_RETRIES: usize = 3;

const AGENT_SYSTEM: &str = "You are a scientific-literature search agent. On each turn respond with exactly one action line:\nTHINK: <reasoning about what to search next>\nSEARCH: <keyword sub-query for the paper index>\nANSWER: <final answer naming the paper(s) by exact title>\nSearch with short keyword queries, refine based on the evidence titles and abstracts, and answer only when the evidence supports it.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum AgentAction {
    Think(String),
    Tool(String),
    Answer(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub action: AgentAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<SearchResult<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub schema_version: u32,
    pub query_id: String,
    pub steps: Vec<TranscriptStep>,
    pub final_answer: String,
    pub cited_doc_ids: Vec<String>,
    pub search_count: usize,
    pub wall_time_ms: u64,
    pub status: RunStatus,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Hard cap on tool calls per query.
    pub max_iterations: usize,
    /// Hits requested per search.
    pub k: usize,
    /// Rendered evidence budget in characters; overflowing entries degrade to
    /// title-only, oldest first.
    pub evidence_char_budget: usize,
    /// Zero out wall_time_ms so transcripts are byte-reproducible.
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_iterations: 10,
            k: 5,
            evidence_char_budget: 20_000,
            deterministic: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(HarnessError::Agent("max_iterations must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(HarnessError::Agent("k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parse a raw LLM response into an action. The first line carrying a THINK:,
/// SEARCH:, or ANSWER: directive wins; for ANSWER the body extends to the end
/// of the response.
pub fn parse_action(raw: &str) -> Result<AgentAction> {
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("THINK:") {
            return Ok(AgentAction::Think(rest.trim().to_string()));
        }
        if let Some(rest) = trimmed.strip_prefix("SEARCH:") {
            return Ok(AgentAction::Tool(rest.trim().to_string()));
        }
        if trimmed.strip_prefix("ANSWER:").is_some() {
            let start = offset + line.find("ANSWER:").unwrap_or(0) + "ANSWER:".len();
            return Ok(AgentAction::Answer(raw[start..].trim().to_string()));
        }
        offset += line.len();
    }
    Err(HarnessError::Agent(format!(
        "no THINK:/SEARCH:/ANSWER: directive in response {raw:?}"
    )))
}

/// Citations in an answer: exact normalized-title containment over the corpus
/// plus explicit [doc:<id>] markers, deduplicated in order of first appearance.
pub fn extract_citations(answer: &str, corpus: &Corpus) -> Vec<String> {
    let norm_answer = normalize_ref_key(answer);
    let mut found: Vec<(usize, String)> = Vec::new();
    for (doc_id, doc) in &corpus.documents {
        let key = normalize_ref_key(&doc.title);
        if key.is_empty() {
            continue;
        }
        if let Some(pos) = norm_answer.find(&key) {
            found.push((pos, doc_id.clone()));
        }
    }
    let marker = regex::Regex::new(r"\[doc:([^\]\s]+)\]").expect("static regex");
    for cap in marker.captures_iter(answer) {
        let id = cap[1].to_string();
        if corpus.get(&id).is_some() {
            let pos = cap.get(0).map(|m| m.start()).unwrap_or(0);
            found.push((pos, id));
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut seen = BTreeSet::new();
    found
        .into_iter()
        .filter_map(|(_, id)| seen.insert(id.clone()).then_some(id))
        .collect()
}

struct EvidenceEntry {
    title: String,
    abstract_text: String,
}

fn render_evidence(entries: &[EvidenceEntry], budget: usize) -> String {
    if entries.is_empty() {
        return "(none yet)".to_string();
    }
    let full = |e: &EvidenceEntry, i: usize| {
        if e.abstract_text.is_empty() {
            format!("{}. {}", i + 1, e.title)
        } else {
            format!("{}. {} :: {}", i + 1, e.title, e.abstract_text)
        }
    };
    let brief = |e: &EvidenceEntry, i: usize| format!("{}. {}", i + 1, e.title);
    let mut lines: Vec<String> = entries.iter().enumerate().map(|(i, e)| full(e, i)).collect();
    // Degrade oldest entries to title-only until the rendering fits. Entries
    // are never dropped entirely.
    let mut idx = 0;
    while lines.iter().map(|l| l.len() + 1).sum::<usize>() > budget && idx < lines.len() {
        lines[idx] = brief(&entries[idx], idx);
        idx += 1;
    }
    lines.join("\n")
}

fn step_prompt(query_text: &str, entries: &[EvidenceEntry], cfg: &RunConfig, searches_left: usize) -> ChatRequest {
    let user = format!(
        "Question:\n{query_text}\n\nEvidence:\n{}\n\nSearches remaining: {searches_left}.\nRespond with exactly one action line (THINK: / SEARCH: / ANSWER:).",
        render_evidence(entries, cfg.evidence_char_budget)
    );
    ChatRequest::user(AGENT_SYSTEM, user)
}

fn forced_prompt(query_text: &str, entries: &[EvidenceEntry], cfg: &RunConfig) -> ChatRequest {
    let user = format!(
        "Question:\n{query_text}\n\nEvidence:\n{}\n\nThe search budget is exhausted. Answer now from the evidence above. Respond with a single line starting with ANSWER:.",
        render_evidence(entries, cfg.evidence_char_budget)
    );
    ChatRequest::user(AGENT_SYSTEM, user)
}

/// Run the agent loop for one query. Transport or parse failure past the retry
/// budget yields a transcript flagged failed rather than an error; only
/// invalid configuration is an `Err`.
pub fn run_agent(
    query_id: &str,
    query_text: &str,
    search: &dyn SearchTool<f64>,
    llm: &dyn LlmClient,
    corpus: &Corpus,
    cfg: &RunConfig,
) -> Result<AgentTranscript> {
    cfg.validate()?;
    let started = Instant::now();
    let mut steps: Vec<TranscriptStep> = Vec::new();
    let mut evidence: Vec<EvidenceEntry> = Vec::new();
    let mut seen_docs: BTreeSet<String> = BTreeSet::new();
    let mut search_count = 0usize;
    // Think steps don't consume the tool budget, so bound total steps
    // separately to guarantee termination.
    let step_cap = cfg.max_iterations * 4;

    let finish = |steps: Vec<TranscriptStep>,
                      answer: String,
                      search_count: usize,
                      status: RunStatus| {
        let cited = if answer.is_empty() {
            Vec::new()
        } else {
            extract_citations(&answer, corpus)
        };
        AgentTranscript {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            query_id: query_id.to_string(),
            steps,
            final_answer: answer,
            cited_doc_ids: cited,
            search_count,
            wall_time_ms: if cfg.deterministic {
                0
            } else {
                started.elapsed().as_millis() as u64
            },
            status,
        }
    };

    while steps.len() < step_cap && search_count < cfg.max_iterations {
        let request = step_prompt(query_text, &evidence, cfg, cfg.max_iterations - search_count);
        let mut action = None;
        for _ in 0..ACTION_PARSE_RETRIES {
            match llm.complete(&request).map(|raw| parse_action(&raw)) {
                Ok(Ok(a)) => {
                    action = Some(a);
                    break;
                }
                Ok(Err(_)) => continue,
                Err(_) => break, // transport error: retries already spent inside the client
            }
        }
        let Some(action) = action else {
            return Ok(finish(steps, String::new(), search_count, RunStatus::Failed));
        };
        match action {
            AgentAction::Think(note) => {
                steps.push(TranscriptStep {
                    action: AgentAction::Think(note),
                    result: None,
                });
            }
            AgentAction::Tool(query) => {
                let result = match search.search(&query, cfg.k) {
                    Ok(r) => r,
                    Err(_) => {
                        return Ok(finish(steps, String::new(), search_count, RunStatus::Failed))
                    }
                };
                search_count += 1;
                // Evidence only ever grows: new hits are appended, never removed.
                for hit in &result.hits {
                    if seen_docs.insert(hit.doc_id.clone()) {
                        evidence.push(EvidenceEntry {
                            title: hit.title.clone(),
                            abstract_text: hit.abstract_text.clone(),
                        });
                    }
                }
                steps.push(TranscriptStep {
                    action: AgentAction::Tool(query),
                    result: Some(result),
                });
            }
            AgentAction::Answer(answer) => {
                steps.push(TranscriptStep {
                    action: AgentAction::Answer(answer.clone()),
                    result: None,
                });
                return Ok(finish(steps, answer, search_count, RunStatus::Completed));
            }
        }
    }

    // Budget exhausted: force an answer from the accumulated evidence. If the
    // model still refuses, synthesize one so every run terminates with an
    // answer action.
    let request = forced_prompt(query_text, &evidence, cfg);
    let mut answer = None;
    for _ in 0..ACTION_PARSE_RETRIES {
        match llm.complete(&request) {
            Ok(raw) => match parse_action(&raw) {
                Ok(AgentAction::Answer(a)) => {
                    answer = Some(a);
                    break;
                }
                _ => continue,
            },
            Err(_) => break,
        }
    }
    let answer = answer.unwrap_or_else(|| {
        evidence
            .first()
            .map(|e| e.title.clone())
            .unwrap_or_else(|| "No answer could be determined from the evidence.".to_string())
    });
    steps.push(TranscriptStep {
        action: AgentAction::Answer(answer.clone()),
        result: None,
    });
    Ok(finish(steps, answer, search_count, RunStatus::Completed))
}

/// Append-style JSONL writer for transcripts.
pub fn write_transcripts<W: Write>(transcripts: &[AgentTranscript], mut writer: W) -> Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut writer, t)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_transcripts<R: Read>(reader: R) -> Result<Vec<AgentTranscript>> {
    let mut out = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: AgentTranscript = serde_json::from_str(&line)?;
        if t.schema_version != TRANSCRIPT_SCHEMA_VERSION {
            return Err(HarnessError::Agent(format!(
                "unsupported transcript schema_version {}",
                t.schema_version
            )));
        }
        out.push(t);
    }
    Ok(out)
}
