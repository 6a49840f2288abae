//! Evaluation reports: score transcripts against a benchmark, aggregate by
//! domain, and render either a fixed-width table or plain `key=value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agent::AgentTranscript;
use crate::benchgen::{BenchmarkQuery, GroundTruth, QueryKind};
use crate::corpus::{Corpus, DomainTag};
use crate::error::{HarnessError, Result};
use crate::graph::GainFunction;
use crate::metrics::{
    aggregate, exact_match, reference_set, urs, weighted_recall, AggregateReport, QueryScore,
    RefCountMode,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Caveat attached to every report: scores depend on the harness tokenizer
/// and normalizer, so absolute numbers are not comparable across differently
/// tokenized reproductions.
pub const TOKENIZER_NOTE: &str = "scores use the harness tokenizer (unicode non-alphanumeric split, lowercased) and title normalizer; absolute values are not comparable to runs with different text processing";

const EXPECTED_DOMAINS: [DomainTag; 4] = [
    DomainTag::ComputerScience,
    DomainTag::Healthcare,
    DomainTag::Humanities,
    DomainTag::NaturalScience,
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRow {
    pub query_id: String,
    pub kind: QueryKind,
    pub domain_tag: DomainTag,
    /// EM as 0/1 or weighted recall as a fraction.
    pub value: f64,
    pub search_count: usize,
    pub ref_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub rows: Vec<QueryRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub short_form: Option<AggregateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_ended: Option<AggregateReport>,
    pub avg_searches: f64,
    pub avg_refs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub urs: Option<f64>,
    pub notes: Vec<String>,
}

/// Score transcripts against their benchmark queries. Every query must have
/// exactly one transcript; failed transcripts score zero.
pub fn evaluate(
    queries: &[BenchmarkQuery],
    transcripts: &[AgentTranscript],
    corpus: &Corpus,
    ref_mode: RefCountMode,
) -> Result<EvaluationReport> {
    if queries.is_empty() {
        return Err(HarnessError::Metrics("no queries to evaluate".into()));
    }
    let by_id: BTreeMap<&str, &AgentTranscript> = transcripts
        .iter()
        .map(|t| (t.query_id.as_str(), t))
        .collect();

    let gain = GainFunction::<f64>::default();
    let mut rows = Vec::new();
    let mut short_scores = Vec::new();
    let mut open_scores = Vec::new();
    let mut total_searches = 0usize;
    let mut total_refs = 0usize;

    for query in queries {
        let transcript = by_id.get(query.query_id.as_str()).ok_or_else(|| {
            HarnessError::Metrics(format!("no transcript for query {}", query.query_id))
        })?;
        let refs = reference_set(transcript, ref_mode);
        let value = match (&query.kind, &query.ground_truth) {
            (QueryKind::ShortForm, GroundTruth::Single { doc_id }) => {
                let title = corpus.get(doc_id).map(|d| d.title.as_str()).unwrap_or("");
                let hit = exact_match(
                    &transcript.final_answer,
                    &transcript.cited_doc_ids,
                    doc_id,
                    title,
                );
                if hit {
                    1.0
                } else {
                    0.0
                }
            }
            (QueryKind::OpenEnded, GroundTruth::Graded { labels }) => {
                let returned: Vec<String> = refs.iter().cloned().collect();
                weighted_recall(&returned, labels, &gain)?
            }
            _ => {
                return Err(HarnessError::Metrics(format!(
                    "query {} has mismatched kind and ground truth",
                    query.query_id
                )))
            }
        };
        total_searches += transcript.search_count;
        total_refs += refs.len();
        let score = QueryScore {
            query_id: query.query_id.clone(),
            domain_tag: query.domain_tag,
            value,
        };
        match query.kind {
            QueryKind::ShortForm => short_scores.push(score),
            QueryKind::OpenEnded => open_scores.push(score),
        }
        rows.push(QueryRow {
            query_id: query.query_id.clone(),
            kind: query.kind,
            domain_tag: query.domain_tag,
            value,
            search_count: transcript.search_count,
            ref_count: refs.len(),
        });
    }

    let n = queries.len() as f64;
    let avg_searches = total_searches as f64 / n;
    let avg_refs = total_refs as f64 / n;
    let short_form = if short_scores.is_empty() {
        None
    } else {
        Some(aggregate(&short_scores, &EXPECTED_DOMAINS)?)
    };
    let open_ended = if open_scores.is_empty() {
        None
    } else {
        Some(aggregate(&open_scores, &EXPECTED_DOMAINS)?)
    };
    let mut notes = vec![TOKENIZER_NOTE.to_string()];
    for agg in [&short_form, &open_ended].into_iter().flatten() {
        notes.extend(agg.warnings.iter().cloned());
    }
    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        rows,
        short_form,
        open_ended,
        avg_searches,
        avg_refs,
        urs: urs(avg_refs, avg_searches).ok(),
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Lines,
}

impl std::str::FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "lines" => Ok(ReportFormat::Lines),
            other => Err(HarnessError::Config(format!(
                "unknown report format {other:?} (expected table or lines)"
            ))),
        }
    }
}

fn render_aggregate_table(out: &mut String, label: &str, agg: &AggregateReport) {
    let _ = writeln!(out, "{label}");
    let _ = writeln!(out, "  {:<18} {:>8} {:>8}", "domain", "mean", "queries");
    for d in &agg.domains {
        let _ = writeln!(
            out,
            "  {:<18} {:>8.3} {:>8}",
            d.domain_tag.as_str(),
            d.mean,
            d.query_count
        );
    }
    let _ = writeln!(out, "  {:<18} {:>8.3}", "avg_perf", agg.avg_perf);
}

impl EvaluationReport {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Table => self.render_table(),
            ReportFormat::Lines => self.render_lines(),
        }
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:<11} {:<18} {:>7} {:>9} {:>5}",
            "query_id", "kind", "domain", "value", "searches", "refs"
        );
        for row in &self.rows {
            let kind = match row.kind {
                QueryKind::ShortForm => "short_form",
                QueryKind::OpenEnded => "open_ended",
            };
            let _ = writeln!(
                out,
                "{:<16} {:<11} {:<18} {:>7.3} {:>9} {:>5}",
                row.query_id,
                kind,
                row.domain_tag.as_str(),
                row.value,
                row.search_count,
                row.ref_count
            );
        }
        if let Some(agg) = &self.short_form {
            render_aggregate_table(&mut out, "short-form (exact match)", agg);
        }
        if let Some(agg) = &self.open_ended {
            render_aggregate_table(&mut out, "open-ended (weighted recall)", agg);
        }
        let _ = writeln!(
            out,
            "avg_searches={:.3} avg_refs={:.3} urs={}",
            self.avg_searches,
            self.avg_refs,
            self.urs
                .map(|u| format!("{u:.3}"))
                .unwrap_or_else(|| "n/a".into())
        );
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }

    fn render_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let kind = match row.kind {
                QueryKind::ShortForm => "short_form",
                QueryKind::OpenEnded => "open_ended",
            };
            let _ = writeln!(
                out,
                "query query_id={} kind={kind} domain={} value={:.6} searches={} refs={}",
                row.query_id,
                row.domain_tag.as_str(),
                row.value,
                row.search_count,
                row.ref_count
            );
        }
        for (label, agg) in [("short_form", &self.short_form), ("open_ended", &self.open_ended)] {
            if let Some(agg) = agg {
                for d in &agg.domains {
                    let _ = writeln!(
                        out,
                        "domain metric={label} domain={} mean={:.6} queries={}",
                        d.domain_tag.as_str(),
                        d.mean,
                        d.query_count
                    );
                }
                let _ = writeln!(out, "summary metric={label} avg_perf={:.6}", agg.avg_perf);
            }
        }
        let _ = writeln!(
            out,
            "summary avg_searches={:.6} avg_refs={:.6} urs={}",
            self.avg_searches,
            self.avg_refs,
            self.urs
                .map(|u| format!("{u:.6}"))
                .unwrap_or_else(|| "n/a".into())
        );
        for note in &self.notes {
            let _ = writeln!(out, "note {note}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{AgentAction, RunStatus, TranscriptStep, TRANSCRIPT_SCHEMA_VERSION};
    use crate::benchgen::{Components, ShortFormComponents};
    use crate::corpus::Document;
    use crate::graph::RelevanceLabel;
    use crate::retrieval::{Hit, SearchResult};

    fn corpus() -> Corpus {
        let docs = vec![
            Document::new("d1", "Alpha Paper"),
            Document::new("d2", "Beta Paper"),
            Document::new("d3", "Gamma Paper"),
        ];
        Corpus::from_documents("c", docs).unwrap()
    }

    fn short_query(id: &str, gt: &str, domain_tag: DomainTag) -> BenchmarkQuery {
        BenchmarkQuery {
            query_id: id.into(),
            kind: QueryKind::ShortForm,
            text: "find it".into(),
            components: Components::Short(ShortFormComponents {
                metadata_clause: Some("m".into()),
                detail_clause: None,
                relationship_clause: Some("r".into()),
            }),
            ground_truth: GroundTruth::Single { doc_id: gt.into() },
            domain_tag,
        }
    }

    fn transcript(id: &str, answer: &str, cited: &[&str], searches: usize) -> AgentTranscript {
        AgentTranscript {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            query_id: id.into(),
            steps: vec![TranscriptStep {
                action: AgentAction::Tool("q".into()),
                result: Some(SearchResult {
                    hits: cited
                        .iter()
                        .map(|c| Hit {
                            doc_id: (*c).to_string(),
                            title: String::new(),
                            abstract_text: String::new(),
                            score: 1.0,
                        })
                        .collect(),
                }),
            }],
            final_answer: answer.into(),
            cited_doc_ids: cited.iter().map(|c| (*c).to_string()).collect(),
            search_count: searches,
            wall_time_ms: 0,
            status: RunStatus::Completed,
        }
    }

    #[test]
    fn evaluate_mixed_benchmark() {
        let corpus = corpus();
        let open = BenchmarkQuery {
            query_id: "oe1".into(),
            kind: QueryKind::OpenEnded,
            text: "survey".into(),
            components: Components::Open(crate::benchgen::OpenEndedComponents {
                background: "b".into(),
                method_contrast: "c".into(),
                request: "r".into(),
            }),
            ground_truth: GroundTruth::Graded {
                labels: vec![
                    RelevanceLabel { doc_id: "d1".into(), r: 2 },
                    RelevanceLabel { doc_id: "d2".into(), r: 2 },
                    RelevanceLabel { doc_id: "d3".into(), r: 1 },
                ],
            },
            domain_tag: DomainTag::Healthcare,
        };
        let queries = vec![
            short_query("sf1", "d1", DomainTag::ComputerScience),
            short_query("sf2", "d2", DomainTag::ComputerScience),
            open,
        ];
        let transcripts = vec![
            transcript("sf1", "It is the Alpha Paper.", &[], 2),
            transcript("sf2", "No idea.", &[], 3),
            transcript("oe1", "cites", &["d1", "d3"], 4),
        ];
        let report = evaluate(&queries, &transcripts, &corpus, RefCountMode::CitedOnly).unwrap();
        assert_eq!(report.rows[0].value, 1.0);
        assert_eq!(report.rows[1].value, 0.0);
        // (2 + 1) / (2 + 2 + 1)
        assert!((report.rows[2].value - 0.6).abs() < 1e-12);
        let sf = report.short_form.as_ref().unwrap();
        assert_eq!(sf.domains.len(), 1);
        assert_eq!(sf.domains[0].mean, 0.5);
        assert!(report.notes.iter().any(|n| n.contains("tokenizer")));
        // Three of four expected domains have no short-form queries.
        assert_eq!(sf.warnings.len(), 3);
    }

    #[test]
    fn missing_transcript_is_error() {
        let corpus = corpus();
        let queries = vec![short_query("sf1", "d1", DomainTag::Other)];
        assert!(evaluate(&queries, &[], &corpus, RefCountMode::CitedOnly).is_err());
    }

    #[test]
    fn ref_modes_differ() {
        let t = transcript("x", "answer", &["d1", "d2"], 1);
        let mut t2 = t.clone();
        t2.cited_doc_ids = vec!["d1".into()];
        assert_eq!(reference_set(&t2, RefCountMode::CitedOnly).len(), 1);
        assert_eq!(reference_set(&t2, RefCountMode::RetrievedUnion).len(), 2);
    }

    #[test]
    fn render_formats_are_nonempty_and_stable() {
        let corpus = corpus();
        let queries = vec![short_query("sf1", "d1", DomainTag::ComputerScience)];
        let transcripts = vec![transcript("sf1", "Alpha Paper", &[], 1)];
        let report = evaluate(&queries, &transcripts, &corpus, RefCountMode::CitedOnly).unwrap();
        let table = report.render(ReportFormat::Table);
        let lines = report.render(ReportFormat::Lines);
        assert!(table.contains("avg_perf"));
        assert!(lines.contains("summary metric=short_form"));
        assert_eq!(table, report.render(ReportFormat::Table));
        assert_eq!(lines, report.render(ReportFormat::Lines));
    }
}
