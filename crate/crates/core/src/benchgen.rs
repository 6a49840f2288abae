//! Benchmark query generation: shared-citation analysis, short-form and
//! open-ended question generation through a pluggable LLM endpoint, and
//! component-ablation variants. Invalid LLM output never reaches the
//! benchmark file.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, DomainTag};
use crate::error::{HarnessError, Result};
use crate::graph::{label_relevance, RelevanceLabel, SeedPair};
use crate::llm::{ChatRequest, LlmClient};
use crate::prompts::PromptSet;
use crate::text::normalize_ref_key;

/// Attempts per LLM call before the item is rejected.
pub const LLM_RETRY_BUDGET: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    ShortForm,
    OpenEnded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ShortFormComponents {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata_clause: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail_clause: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relationship_clause: Option<String>,
}

impl ShortFormComponents {
    pub fn clause_count(&self) -> usize {
        [
            &self.metadata_clause,
            &self.detail_clause,
            &self.relationship_clause,
        ]
        .iter()
        .filter(|c| c.is_some())
        .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenEndedComponents {
    pub background: String,
    pub method_contrast: String,
    pub request: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Components {
    Open(OpenEndedComponents),
    Short(ShortFormComponents),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroundTruth {
    Single { doc_id: String },
    Graded { labels: Vec<RelevanceLabel> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuery {
    pub query_id: String,
    pub kind: QueryKind,
    pub text: String,
    pub components: Components,
    pub ground_truth: GroundTruth,
    pub domain_tag: DomainTag,
}

impl BenchmarkQuery {
    /// Schema validation for the query's kind.
    pub fn validate(&self) -> Result<()> {
        match (&self.kind, &self.components, &self.ground_truth) {
            (QueryKind::ShortForm, Components::Short(c), GroundTruth::Single { doc_id }) => {
                if doc_id.is_empty() {
                    return Err(HarnessError::Generation("empty ground-truth doc_id".into()));
                }
                if c.clause_count() < 2 {
                    return Err(HarnessError::Generation(
                        "short-form query needs at least two clauses".into(),
                    ));
                }
                Ok(())
            }
            (QueryKind::OpenEnded, Components::Open(_), GroundTruth::Graded { labels }) => {
                let r2 = labels.iter().filter(|l| l.r == 2).count();
                if r2 != 2 {
                    return Err(HarnessError::Generation(format!(
                        "open-ended query needs exactly two r=2 labels, got {r2}"
                    )));
                }
                Ok(())
            }
            _ => Err(HarnessError::Generation(
                "query kind does not match components/ground truth".into(),
            )),
        }
    }
}

/// Caller-provided citing snippets for one shared citation of a pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CitationContext {
    pub norm_key: String,
    pub shared_title: String,
    #[serde(default)]
    pub shared_authors: String,
    #[serde(default)]
    pub seed_contexts: Vec<String>,
    #[serde(default)]
    pub seed_intents: String,
    #[serde(default)]
    pub partner_contexts: Vec<String>,
    #[serde(default)]
    pub partner_intents: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharedCitationAnalysis {
    pub pair: SeedPair,
    pub per_citation_summaries: Vec<(String, String)>,
    pub relationship_summary: String,
    pub selected_summary_index: usize,
}

fn sentence_count(text: &str) -> usize {
    text.split_inclusive(['.', '!', '?'])
        .filter(|s| s.chars().any(char::is_alphanumeric))
        .count()
}

fn complete_with_retries<T>(
    llm: &dyn LlmClient,
    request: &ChatRequest,
    validate: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<T> {
    let mut last = String::new();
    for _ in 0..LLM_RETRY_BUDGET {
        let raw = llm.complete(request)?;
        match validate(&raw) {
            Ok(value) => return Ok(value),
            Err(reason) => last = format!("{reason}; raw response: {raw:?}"),
        }
    }
    Err(HarnessError::Generation(format!(
        "rejected after {LLM_RETRY_BUDGET} attempts: {last}"
    )))
}

fn numbered(lines: &[String]) -> String {
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| format!("   {}. {l}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Summarize the role of each shared citation, produce the two-sentence
/// relationship summary, and select the most characteristic role summary.
pub fn analyze_shared_citations(
    pair: &SeedPair,
    seed_doc: &Document,
    partner_doc: &Document,
    contexts: &[CitationContext],
    llm: &dyn LlmClient,
    prompts: &PromptSet,
) -> Result<SharedCitationAnalysis> {
    if contexts.is_empty() {
        return Err(HarnessError::Generation(
            "need at least one shared citation with context".into(),
        ));
    }
    let shared_count = pair.edge.overlap_count.to_string();

    let role_template = prompts.get("shared_ref_role")?;
    let mut per_citation_summaries = Vec::new();
    for ctx in contexts {
        let mut bindings: BTreeMap<&str, String> = BTreeMap::new();
        bindings.insert("shared_title", ctx.shared_title.clone());
        bindings.insert("shared_authors", ctx.shared_authors.clone());
        bindings.insert("paper1_contexts", numbered(&ctx.seed_contexts));
        bindings.insert("paper1_intents", ctx.seed_intents.clone());
        bindings.insert("paper2_contexts", numbered(&ctx.partner_contexts));
        bindings.insert("paper2_intents", ctx.partner_intents.clone());
        bindings.insert("partner_title", partner_doc.title.clone());
        bindings.insert("shared_count", shared_count.clone());
        let rendered = role_template.render(&bindings)?;
        let request = ChatRequest::user(rendered.system, rendered.user);
        let summary = complete_with_retries(llm, &request, |raw| {
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                return Err("empty role summary".into());
            }
            if sentence_count(trimmed) > 2 {
                return Err("role summary exceeds 2 sentences".into());
            }
            Ok(trimmed.to_string())
        })?;
        per_citation_summaries.push((ctx.norm_key.clone(), summary));
    }

    let analyses = contexts
        .iter()
        .zip(&per_citation_summaries)
        .enumerate()
        .map(|(i, (ctx, (_, summary)))| {
            format!(
                "{}. \"{}\" by {}\n   Paper 1 uses it for: {}\n   Paper 2 uses it for: {}\n   How both papers use it: {}",
                i + 1,
                ctx.shared_title,
                ctx.shared_authors,
                ctx.seed_intents,
                ctx.partner_intents,
                summary
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n");

    let rel_template = prompts.get("relationship_summary")?;
    let mut bindings: BTreeMap<&str, String> = BTreeMap::new();
    bindings.insert("paper1_title", seed_doc.title.clone());
    bindings.insert("partner_title", partner_doc.title.clone());
    bindings.insert("shared_count", shared_count.clone());
    bindings.insert("citation_analyses", analyses);
    let rendered = rel_template.render(&bindings)?;
    let request = ChatRequest::user(rendered.system, rendered.user);
    let expected_mentions = contexts.len().min(2);
    let relationship_summary = complete_with_retries(llm, &request, |raw| {
        let trimmed = raw.trim();
        if sentence_count(trimmed) > 2 {
            return Err("relationship summary exceeds 2 sentences".into());
        }
        if !trimmed.contains(&format!("share {shared_count} citations in total")) {
            return Err(format!(
                "relationship summary must state the total shared count {shared_count}"
            ));
        }
        let norm = normalize_ref_key(trimmed);
        let mentioned = contexts
            .iter()
            .filter(|c| {
                let key = normalize_ref_key(&c.shared_title);
                !key.is_empty() && norm.contains(&key)
            })
            .count();
        if mentioned != expected_mentions {
            return Err(format!(
                "relationship summary must mention exactly {expected_mentions} shared citations, found {mentioned}"
            ));
        }
        Ok(trimmed.to_string())
    })?;

    let sel_template = prompts.get("summary_selection")?;
    let summaries = per_citation_summaries
        .iter()
        .enumerate()
        .map(|(i, (_, s))| format!("[{i}] {s}"))
        .collect::<Vec<_>>()
        .join("\n\n");
    let mut bindings: BTreeMap<&str, String> = BTreeMap::new();
    bindings.insert("summaries", summaries);
    let rendered = sel_template.render(&bindings)?;
    let request = ChatRequest::user(rendered.system, rendered.user);
    let candidates = per_citation_summaries.len();
    let selected_summary_index = complete_with_retries(llm, &request, |raw| {
        let trimmed = raw.trim();
        if trimmed.is_empty() || !trimmed.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("selection must be a bare integer, got {trimmed:?}"));
        }
        let idx: usize = trimmed
            .parse()
            .map_err(|e| format!("integer parse: {e}"))?;
        if idx >= candidates {
            return Err(format!("selection {idx} out of range (0..{candidates})"));
        }
        Ok(idx)
    })?;

    Ok(SharedCitationAnalysis {
        pair: pair.clone(),
        per_citation_summaries,
        relationship_summary,
        selected_summary_index,
    })
}

fn metadata_facts(doc: &Document) -> String {
    let mut facts = Vec::new();
    if let Some(venue) = &doc.venue {
        facts.push(format!("presented at {venue}"));
    }
    if let Some(year) = doc.year {
        facts.push(format!("published in {year}"));
    }
    if !doc.authors.is_empty() {
        facts.push(format!("written by {} authors", doc.authors.len()));
    }
    if !doc.references.is_empty() {
        facts.push(format!("building on {} prior works", doc.references.len()));
    }
    if let Some(c) = doc.citation_count {
        facts.push(format!("cited {c} times"));
    }
    if facts.is_empty() {
        facts.push("no bibliographic constraints available".into());
    }
    facts.join(", ")
}

fn leak_check(text: &str, forbidden_titles: &[&str]) -> std::result::Result<(), String> {
    let norm = normalize_ref_key(text);
    for title in forbidden_titles {
        let key = normalize_ref_key(title);
        if !key.is_empty() && norm.contains(&key) {
            return Err(format!("question leaks ground-truth title {title:?}"));
        }
    }
    Ok(())
}

fn capture_line(raw: &str, tag: &str) -> Option<String> {
    raw.lines()
        .find_map(|l| l.trim().strip_prefix(tag).map(|r| r.trim().to_string()))
        .filter(|s| !s.is_empty())
}

fn short_form_text(c: &ShortFormComponents) -> String {
    let mut text = String::from("Find me the paper that matches this requirement:");
    for clause in [&c.metadata_clause, &c.detail_clause, &c.relationship_clause]
        .into_iter()
        .flatten()
    {
        text.push_str("\n- ");
        text.push_str(clause);
    }
    text
}

/// Generate a short-form query for a seed pair. The ground truth is the seed
/// itself; the question text must never contain the seed's title.
#[allow(clippy::too_many_arguments)]
pub fn gen_short_form(
    pair: &SeedPair,
    seed_doc: &Document,
    partner_doc: &Document,
    detail_snippet: Option<&str>,
    analysis: &SharedCitationAnalysis,
    llm: &dyn LlmClient,
    prompts: &PromptSet,
    min_seed_year: Option<i32>,
) -> Result<BenchmarkQuery> {
    if pair.edge.overlap_count < 4 {
        return Err(HarnessError::Generation(format!(
            "pair overlap {} below 4",
            pair.edge.overlap_count
        )));
    }
    if let Some(min) = min_seed_year {
        if !seed_doc.year.is_some_and(|y| y >= min) {
            return Err(HarnessError::Generation(format!(
                "seed year {:?} below recency floor {min}",
                seed_doc.year
            )));
        }
    }

    let template = prompts.get("short_form_gen")?;
    let mut bindings: BTreeMap<&str, String> = BTreeMap::new();
    bindings.insert("metadata_facts", metadata_facts(seed_doc));
    bindings.insert(
        "detail_snippet",
        detail_snippet.map(str::to_string).unwrap_or_else(|| "none".into()),
    );
    bindings.insert("relationship_summary", analysis.relationship_summary.clone());
    bindings.insert("partner_title", partner_doc.title.clone());
    bindings.insert("shared_count", pair.edge.overlap_count.to_string());
    let rendered = template.render(&bindings)?;
    let request = ChatRequest::user(rendered.system, rendered.user);

    let seed_title = seed_doc.title.as_str();
    let want_detail = detail_snippet.is_some();
    let components = complete_with_retries(llm, &request, |raw| {
        let components = ShortFormComponents {
            metadata_clause: capture_line(raw, "METADATA:"),
            detail_clause: capture_line(raw, "DETAIL:"),
            relationship_clause: capture_line(raw, "RELATIONSHIP:"),
        };
        if components.metadata_clause.is_none() || components.relationship_clause.is_none() {
            return Err("missing METADATA or RELATIONSHIP clause".into());
        }
        if want_detail && components.detail_clause.is_none() {
            return Err("missing DETAIL clause".into());
        }
        leak_check(&short_form_text(&components), &[seed_title])?;
        Ok(components)
    })?;

    let query = BenchmarkQuery {
        query_id: format!("sf-{}", pair.seed),
        kind: QueryKind::ShortForm,
        text: short_form_text(&components),
        components: Components::Short(components),
        ground_truth: GroundTruth::Single {
            doc_id: pair.seed.clone(),
        },
        domain_tag: seed_doc.domain_tag,
    };
    query.validate()?;
    Ok(query)
}

/// Generate an open-ended query for a seed pair; graded ground truth comes
/// from `label_relevance`. The question must not name either seed paper.
pub fn gen_open_ended(
    pair: &SeedPair,
    corpus: &Corpus,
    analysis: &SharedCitationAnalysis,
    contexts: &[CitationContext],
    llm: &dyn LlmClient,
    prompts: &PromptSet,
) -> Result<BenchmarkQuery> {
    if pair.edge.overlap_count < 4 {
        return Err(HarnessError::Generation(format!(
            "pair overlap {} below 4",
            pair.edge.overlap_count
        )));
    }
    let labels = label_relevance(pair, corpus)?;
    let seed_doc = corpus
        .get(&pair.seed)
        .ok_or_else(|| HarnessError::Generation("seed absent from corpus".into()))?;
    let partner_doc = corpus
        .get(&pair.partner)
        .ok_or_else(|| HarnessError::Generation("partner absent from corpus".into()))?;

    let template = prompts.get("open_ended_gen")?;
    let citation_titles = contexts
        .iter()
        .map(|c| format!("\"{}\"", c.shared_title))
        .collect::<Vec<_>>()
        .join("; ");
    let mut bindings: BTreeMap<&str, String> = BTreeMap::new();
    bindings.insert("seed_title", seed_doc.title.clone());
    bindings.insert("partner_title", partner_doc.title.clone());
    bindings.insert("relationship_summary", analysis.relationship_summary.clone());
    bindings.insert("citation_titles", citation_titles);
    let rendered = template.render(&bindings)?;
    let request = ChatRequest::user(rendered.system, rendered.user);

    let seed_title = seed_doc.title.as_str();
    let partner_title = partner_doc.title.as_str();
    let components = complete_with_retries(llm, &request, |raw| {
        let background = capture_line(raw, "BACKGROUND:").ok_or("missing BACKGROUND")?;
        let method_contrast = capture_line(raw, "CONTRAST:").ok_or("missing CONTRAST")?;
        let req = capture_line(raw, "REQUEST:").ok_or("missing REQUEST")?;
        let text = format!("{background} {method_contrast} {req}");
        leak_check(&text, &[seed_title, partner_title])?;
        Ok(OpenEndedComponents {
            background,
            method_contrast,
            request: req,
        })
    })?;

    let text = format!(
        "{} {} {}",
        components.background, components.method_contrast, components.request
    );
    let query = BenchmarkQuery {
        query_id: format!("oe-{}", pair.seed),
        kind: QueryKind::OpenEnded,
        text,
        components: Components::Open(components),
        ground_truth: GroundTruth::Graded { labels },
        domain_tag: seed_doc.domain_tag,
    };
    query.validate()?;
    Ok(query)
}

/// Emit the three ablation variants of a full short-form query, each missing
/// exactly one clause. Ground truth is unchanged; ids gain -met/-det/-rel.
pub fn emit_ablation_variants(query: &BenchmarkQuery) -> Result<Vec<BenchmarkQuery>> {
    let Components::Short(full) = &query.components else {
        return Err(HarnessError::Generation(
            "ablation variants need a short-form query".into(),
        ));
    };
    if full.clause_count() != 3 {
        return Err(HarnessError::Generation(
            "ablation variants need all three clauses".into(),
        ));
    }
    let mut variants = Vec::new();
    for (suffix, drop) in [("met", 0usize), ("det", 1), ("rel", 2)] {
        let mut c = full.clone();
        match drop {
            0 => c.metadata_clause = None,
            1 => c.detail_clause = None,
            _ => c.relationship_clause = None,
        }
        variants.push(BenchmarkQuery {
            query_id: format!("{}-{suffix}", query.query_id),
            kind: QueryKind::ShortForm,
            text: short_form_text(&c),
            components: Components::Short(c),
            ground_truth: query.ground_truth.clone(),
            domain_tag: query.domain_tag,
        });
    }
    Ok(variants)
}

/// Write a benchmark file: one query per line.
pub fn write_queries<W: Write>(queries: &[BenchmarkQuery], mut writer: W) -> Result<()> {
    for query in queries {
        serde_json::to_writer(&mut writer, query)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_queries<R: Read>(reader: R) -> Result<Vec<BenchmarkQuery>> {
    let mut queries = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let query: BenchmarkQuery = serde_json::from_str(&line)?;
        query.validate()?;
        queries.push(query);
    }
    Ok(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RefEntry;
    use crate::graph::shared_references;
    use crate::llm::{AutoStubLlm, ScriptedLlm};

    fn fixture() -> (SeedPair, Document, Document, Vec<CitationContext>) {
        let mut seed = Document::new("s1", "Continual Skill Consolidation for Dialog Tracking");
        seed.venue = Some("ACL".into());
        seed.year = Some(2024);
        seed.authors = vec!["A".into(), "B".into(), "C".into()];
        seed.citation_count = Some(12);
        seed.domain_tag = DomainTag::ComputerScience;
        let mut partner = Document::new("p1", "Adaptive Pruning and Tuning of Language Models");
        partner.year = Some(2024);
        let refs = [
            "Movement Pruning Adaptive Sparsity",
            "Adaptive Budget Allocation for Tuning",
            "Third Shared Work",
            "Fourth Shared Work",
            "Fifth Shared Work",
        ];
        seed.references = refs.iter().map(|r| RefEntry::new(*r)).collect();
        partner.references = refs.iter().map(|r| RefEntry::new(*r)).collect();
        let edge = shared_references(&seed, &partner).unwrap();
        let pair = SeedPair {
            seed: "s1".into(),
            partner: "p1".into(),
            edge,
        };
        let contexts = vec![
            CitationContext {
                norm_key: normalize_ref_key("Movement Pruning Adaptive Sparsity"),
                shared_title: "Movement Pruning Adaptive Sparsity".into(),
                shared_authors: "Sanh et al.".into(),
                seed_contexts: vec!["used for salience scoring".into()],
                seed_intents: "methodology".into(),
                partner_contexts: vec!["pruning criterion".into()],
                partner_intents: "methodology".into(),
            },
            CitationContext {
                norm_key: normalize_ref_key("Adaptive Budget Allocation for Tuning"),
                shared_title: "Adaptive Budget Allocation for Tuning".into(),
                shared_authors: "Zhang et al.".into(),
                seed_contexts: vec!["budget schedule".into()],
                seed_intents: "methodology".into(),
                partner_contexts: vec!["sensitivity measure".into()],
                partner_intents: "methodology".into(),
            },
        ];
        (pair, seed, partner, contexts)
    }

    fn analysis_via_auto() -> (SeedPair, Document, Document, Vec<CitationContext>, SharedCitationAnalysis) {
        let (pair, seed, partner, contexts) = fixture();
        let prompts = PromptSet::builtin();
        let analysis =
            analyze_shared_citations(&pair, &seed, &partner, &contexts, &AutoStubLlm, &prompts)
                .unwrap();
        (pair, seed, partner, contexts, analysis)
    }

    #[test]
    fn analysis_states_total_shared_count() {
        let (pair, _, _, contexts, analysis) = analysis_via_auto();
        assert!(analysis
            .relationship_summary
            .contains(&format!("share {} citations in total", pair.edge.overlap_count)));
        assert_eq!(analysis.per_citation_summaries.len(), contexts.len());
        assert!(analysis.selected_summary_index < contexts.len());
    }

    #[test]
    fn selection_parses_bare_integer() {
        let (pair, seed, partner, contexts) = fixture();
        let prompts = PromptSet::builtin();
        // Role summaries and relationship come from scripted responses; the
        // selection response is "1" over 2 candidates.
        let rel = format!(
            "This paper and Adaptive Pruning and Tuning of Language Models both use \"Movement Pruning Adaptive Sparsity\" and \"Adaptive Budget Allocation for Tuning\". They share {} citations in total and are specifically related by pruning.",
            pair.edge.overlap_count
        );
        let stub = ScriptedLlm::new(
            vec!["Role one.".into(), "Role two.".into(), rel, "1".into()],
            false,
        );
        let analysis =
            analyze_shared_citations(&pair, &seed, &partner, &contexts, &stub, &prompts).unwrap();
        assert_eq!(analysis.selected_summary_index, 1);
    }

    #[test]
    fn non_integer_selection_fails_after_retries() {
        let (pair, seed, partner, contexts) = fixture();
        let prompts = PromptSet::builtin();
        let rel = format!(
            "\"Movement Pruning Adaptive Sparsity\" and \"Adaptive Budget Allocation for Tuning\" anchor both works. They share {} citations in total and are specifically related by pruning.",
            pair.edge.overlap_count
        );
        let stub = ScriptedLlm::new(
            vec![
                "Role one.".into(),
                "Role two.".into(),
                rel,
                "two".into(),
                "two".into(),
                "two".into(),
            ],
            false,
        );
        let err = analyze_shared_citations(&pair, &seed, &partner, &contexts, &stub, &prompts);
        assert!(err.is_err());
    }

    #[test]
    fn short_form_has_three_clauses_and_no_leak() {
        let (pair, seed, partner, _, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let query = gen_short_form(
            &pair,
            &seed,
            &partner,
            Some("JGA gains of 0.15-0.25 on Task 4"),
            &analysis,
            &AutoStubLlm,
            &prompts,
            None,
        )
        .unwrap();
        let Components::Short(c) = &query.components else {
            panic!("wrong components")
        };
        assert_eq!(c.clause_count(), 3);
        // Relationship clause names the partner and two shared citations.
        let rel = c.relationship_clause.as_deref().unwrap();
        assert!(rel.contains("Adaptive Pruning and Tuning of Language Models"));
        assert!(rel.contains("Movement Pruning Adaptive Sparsity"));
        assert!(!normalize_ref_key(&query.text).contains(&normalize_ref_key(&seed.title)));
        assert_eq!(
            query.ground_truth,
            GroundTruth::Single { doc_id: "s1".into() }
        );
    }

    #[test]
    fn title_echo_is_rejected() {
        let (pair, seed, partner, _, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let leak = format!(
            "METADATA: published at ACL\nRELATIONSHIP: it is {}",
            seed.title
        );
        let stub = ScriptedLlm::new(vec![leak.clone(), leak.clone(), leak], false);
        let err = gen_short_form(
            &pair, &seed, &partner, None, &analysis, &stub, &prompts, None,
        );
        assert!(err.is_err());
    }

    #[test]
    fn missing_detail_yields_two_component_query() {
        let (pair, seed, partner, _, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let query = gen_short_form(
            &pair, &seed, &partner, None, &analysis, &AutoStubLlm, &prompts, None,
        )
        .unwrap();
        let Components::Short(c) = &query.components else {
            panic!("wrong components")
        };
        assert_eq!(c.clause_count(), 2);
        assert!(c.detail_clause.is_none());
    }

    #[test]
    fn recency_floor_enforced() {
        let (pair, mut seed, partner, _, analysis) = analysis_via_auto();
        seed.year = Some(2023);
        let prompts = PromptSet::builtin();
        let err = gen_short_form(
            &pair,
            &seed,
            &partner,
            None,
            &analysis,
            &AutoStubLlm,
            &prompts,
            Some(2024),
        );
        assert!(err.is_err());
    }

    fn open_ended_corpus(seed: &Document, partner: &Document) -> Corpus {
        let c1 = Document::new("c1", "Movement Pruning Adaptive Sparsity");
        let c2 = Document::new("c2", "Adaptive Budget Allocation for Tuning");
        Corpus::from_documents("c", vec![seed.clone(), partner.clone(), c1, c2]).unwrap()
    }

    #[test]
    fn open_ended_has_graded_truth_and_no_seed_leak() {
        let (pair, seed, partner, contexts, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let corpus = open_ended_corpus(&seed, &partner);
        let query =
            gen_open_ended(&pair, &corpus, &analysis, &contexts, &AutoStubLlm, &prompts).unwrap();
        let GroundTruth::Graded { labels } = &query.ground_truth else {
            panic!("wrong ground truth")
        };
        assert_eq!(labels.iter().filter(|l| l.r == 2).count(), 2);
        assert_eq!(labels.iter().filter(|l| l.r == 1).count(), 2);
        let norm = normalize_ref_key(&query.text);
        assert!(!norm.contains(&normalize_ref_key(&seed.title)));
        assert!(!norm.contains(&normalize_ref_key(&partner.title)));
    }

    #[test]
    fn open_ended_empty_intersection_keeps_only_seeds() {
        let (pair, seed, partner, contexts, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        // Corpus without the shared-reference documents.
        let corpus = Corpus::from_documents("c", vec![seed.clone(), partner.clone()]).unwrap();
        let query =
            gen_open_ended(&pair, &corpus, &analysis, &contexts, &AutoStubLlm, &prompts).unwrap();
        let GroundTruth::Graded { labels } = &query.ground_truth else {
            panic!("wrong ground truth")
        };
        assert_eq!(labels.len(), 2);
        assert!(labels.iter().all(|l| l.r == 2));
    }

    #[test]
    fn stub_generation_is_reproducible() {
        let (pair, seed, partner, contexts, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let corpus = open_ended_corpus(&seed, &partner);
        let one =
            gen_open_ended(&pair, &corpus, &analysis, &contexts, &AutoStubLlm, &prompts).unwrap();
        let two =
            gen_open_ended(&pair, &corpus, &analysis, &contexts, &AutoStubLlm, &prompts).unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&two).unwrap()
        );
    }

    #[test]
    fn ablation_variants_each_drop_one_clause() {
        let (pair, seed, partner, _, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let full = gen_short_form(
            &pair,
            &seed,
            &partner,
            Some("table shows +0.25 on task 4"),
            &analysis,
            &AutoStubLlm,
            &prompts,
            None,
        )
        .unwrap();
        let variants = emit_ablation_variants(&full).unwrap();
        assert_eq!(variants.len(), 3);
        for v in &variants {
            let Components::Short(c) = &v.components else {
                panic!("wrong components")
            };
            assert_eq!(c.clause_count(), 2);
            assert_eq!(v.ground_truth, full.ground_truth);
        }
        let ids: Vec<_> = variants.iter().map(|v| v.query_id.as_str()).collect();
        assert_eq!(ids, vec!["sf-s1-met", "sf-s1-det", "sf-s1-rel"]);
    }

    #[test]
    fn ablation_needs_all_clauses() {
        let (pair, seed, partner, _, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let partial = gen_short_form(
            &pair, &seed, &partner, None, &analysis, &AutoStubLlm, &prompts, None,
        )
        .unwrap();
        assert!(emit_ablation_variants(&partial).is_err());
    }

    #[test]
    fn query_file_roundtrip() {
        let (pair, seed, partner, contexts, analysis) = analysis_via_auto();
        let prompts = PromptSet::builtin();
        let corpus = open_ended_corpus(&seed, &partner);
        let q1 = gen_short_form(
            &pair, &seed, &partner, None, &analysis, &AutoStubLlm, &prompts, None,
        )
        .unwrap();
        let q2 =
            gen_open_ended(&pair, &corpus, &analysis, &contexts, &AutoStubLlm, &prompts).unwrap();
        let mut buf = Vec::new();
        write_queries(&[q1.clone(), q2.clone()], &mut buf).unwrap();
        let back = read_queries(&buf[..]).unwrap();
        assert_eq!(back, vec![q1, q2]);
    }
}
