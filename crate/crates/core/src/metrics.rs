//! Evaluation metrics: exact match for short-form questions, weighted recall
//! for open-ended questions, search-efficiency ratios, and domain-level
//! aggregation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::agent::AgentTranscript;
use crate::corpus::DomainTag;
use crate::error::{HarnessError, Result};
use crate::graph::{GainFunction, RelevanceLabel};
use crate::scalar::Scalar;
use crate::text::normalize_ref_key;

/// Short-form correctness: the ground-truth title appears (normalized) in the
/// answer, or the ground-truth doc_id is among the cited documents.
pub fn exact_match(answer: &str, cited_doc_ids: &[String], gt_doc_id: &str, gt_title: &str) -> bool {
    if cited_doc_ids.iter().any(|id| id == gt_doc_id) {
        return true;
    }
    let key = normalize_ref_key(gt_title);
    !key.is_empty() && normalize_ref_key(answer).contains(&key)
}

/// Weighted recall of a returned list against graded labels:
/// sum of gains over returned relevant documents divided by the total gain of
/// all relevant documents. Duplicates in the list count once. A label set
/// with no positive gain is an error, not a zero.
pub fn weighted_recall<S: Scalar>(
    returned: &[String],
    labels: &[RelevanceLabel],
    gain: &GainFunction<S>,
) -> Result<S> {
    let mut denominator = S::zero();
    let mut by_id: BTreeMap<&str, u8> = BTreeMap::new();
    for label in labels {
        by_id.insert(label.doc_id.as_str(), label.r);
        if label.r > 0 {
            denominator = denominator + gain.gain(label.r);
        }
    }
    if denominator <= S::zero() {
        return Err(HarnessError::Metrics(
            "weighted recall undefined: no positively labeled documents".into(),
        ));
    }
    let mut numerator = S::zero();
    let mut seen = BTreeSet::new();
    for doc_id in returned {
        if !seen.insert(doc_id.as_str()) {
            continue;
        }
        if let Some(&r) = by_id.get(doc_id.as_str()) {
            numerator = numerator + gain.gain(r);
        }
    }
    Ok(numerator / denominator)
}

/// Which documents count as "references" for a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefCountMode {
    /// Documents cited in the final answer.
    #[default]
    CitedOnly,
    /// Union of all unique documents surfaced by searches.
    RetrievedUnion,
}

/// Unique documents a transcript references under the given mode.
pub fn reference_set(transcript: &AgentTranscript, mode: RefCountMode) -> BTreeSet<String> {
    match mode {
        RefCountMode::CitedOnly => transcript.cited_doc_ids.iter().cloned().collect(),
        RefCountMode::RetrievedUnion => transcript
            .steps
            .iter()
            .filter_map(|s| s.result.as_ref())
            .flat_map(|r| r.hits.iter().map(|h| h.doc_id.clone()))
            .collect(),
    }
}

/// Unique references per search: average reference count over average search
/// count. Undefined when no searches happened.
pub fn urs<S: Scalar>(avg_refs: S, avg_searches: S) -> Result<S> {
    if avg_searches <= S::zero() {
        return Err(HarnessError::Metrics(
            "unique references per search undefined without searches".into(),
        ));
    }
    Ok(avg_refs / avg_searches)
}

/// One scored query, ready for aggregation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryScore {
    pub query_id: String,
    pub domain_tag: DomainTag,
    /// Metric value in [0, 1] (EM as 0/1, weighted recall as a fraction).
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainAggregate {
    pub domain_tag: DomainTag,
    pub mean: f64,
    pub query_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub domains: Vec<DomainAggregate>,
    /// Unweighted mean of the per-domain means.
    pub avg_perf: f64,
    pub warnings: Vec<String>,
}

/// Aggregate per-query scores into per-domain means and their unweighted
/// average. Domains of `expected` with no scored queries are excluded from
/// the average and reported as warnings.
pub fn aggregate(scores: &[QueryScore], expected: &[DomainTag]) -> Result<AggregateReport> {
    if scores.is_empty() {
        return Err(HarnessError::Metrics("no scores to aggregate".into()));
    }
    let mut sums: BTreeMap<DomainTag, (f64, usize)> = BTreeMap::new();
    for score in scores {
        let entry = sums.entry(score.domain_tag).or_insert((0.0, 0));
        entry.0 += score.value;
        entry.1 += 1;
    }
    let mut warnings = Vec::new();
    for domain in expected {
        if !sums.contains_key(domain) {
            warnings.push(format!(
                "domain {} has no scored queries and is excluded from the average",
                domain.as_str()
            ));
        }
    }
    let domains: Vec<DomainAggregate> = sums
        .into_iter()
        .map(|(domain_tag, (sum, count))| DomainAggregate {
            domain_tag,
            mean: sum / count as f64,
            query_count: count,
        })
        .collect();
    let avg_perf = domains.iter().map(|d| d.mean).sum::<f64>() / domains.len() as f64;
    Ok(AggregateReport {
        domains,
        avg_perf,
        warnings,
    })
}

/// Relative accuracy change of an ablated variant against the full query set,
/// in percent. Undefined when the full accuracy is zero.
pub fn ablation_delta(acc_variant: f64, acc_full: f64) -> Result<f64> {
    if acc_full == 0.0 {
        return Err(HarnessError::Metrics(
            "ablation delta undefined: full-query accuracy is zero".into(),
        ));
    }
    Ok((acc_variant - acc_full) / acc_full * 100.0)
}
