//! Reference-overlap graph: pair enumeration, seed-pair selection, graded
//! relevance labels, and corpus skeleton assembly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{HarnessError, Result};
use crate::scalar::Scalar;

pub const DEFAULT_OVERLAP_THRESHOLD: usize = 4;

/// Reference overlap between an unordered pair of documents.
/// `doc_a < doc_b` under the lexicographic order on doc_id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapEdge {
    pub doc_a: String,
    pub doc_b: String,
    pub shared_refs: Vec<String>,
    pub overlap_count: usize,
}

/// A seed document plus its overlap partner; the nucleus of every generated
/// question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPair {
    pub seed: String,
    pub partner: String,
    pub edge: OverlapEdge,
}

/// Graded relevance: 2 for seed-pair members, 1 for shared references, 0
/// otherwise (not emitted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceLabel {
    pub doc_id: String,
    pub r: u8,
}

/// Gain function over relevance grades. The default is linear: g(r) = r.
#[derive(Debug, Clone)]
pub struct GainFunction<S: Scalar> {
    weights: [S; 3],
}

impl<S: Scalar> Default for GainFunction<S> {
    fn default() -> Self {
        GainFunction {
            weights: [S::zero(), S::one(), S::from_f64_lossy(2.0)],
        }
    }
}

impl<S: Scalar> GainFunction<S> {
    pub fn new(weights: [S; 3]) -> Self {
        GainFunction { weights }
    }

    pub fn gain(&self, r: u8) -> S {
        self.weights[usize::from(r.min(2))]
    }
}

/// Intersection of the two documents' normalized reference keys, in
/// lexicographic order.
pub fn shared_references(a: &Document, b: &Document) -> Result<OverlapEdge> {
    if a.doc_id == b.doc_id {
        return Err(HarnessError::Graph(format!(
            "shared_references needs two distinct documents, got {} twice",
            a.doc_id
        )));
    }
    let keys_a: BTreeSet<&str> = a
        .references
        .iter()
        .filter(|r| !r.norm_key.is_empty())
        .map(|r| r.norm_key.as_str())
        .collect();
    let keys_b: BTreeSet<&str> = b
        .references
        .iter()
        .filter(|r| !r.norm_key.is_empty())
        .map(|r| r.norm_key.as_str())
        .collect();
    let shared_refs: Vec<String> = keys_a
        .intersection(&keys_b)
        .map(|k| (*k).to_string())
        .collect();
    let (doc_a, doc_b) = if a.doc_id < b.doc_id {
        (a.doc_id.clone(), b.doc_id.clone())
    } else {
        (b.doc_id.clone(), a.doc_id.clone())
    };
    Ok(OverlapEdge {
        doc_a,
        doc_b,
        overlap_count: shared_refs.len(),
        shared_refs,
    })
}

/// All unordered document pairs sharing at least `threshold` normalized
/// references. Enumeration goes through an inverted key -> citing-docs map so
/// only co-citing pairs are touched; output is sorted by (doc_a, doc_b).
pub fn related_pairs(corpus: &Corpus, threshold: usize) -> Result<Vec<OverlapEdge>> {
    if threshold < 1 {
        return Err(HarnessError::Graph("threshold must be >= 1".into()));
    }
    let mut citing: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for doc in corpus.iter() {
        let mut seen = BTreeSet::new();
        for r in &doc.references {
            if !r.norm_key.is_empty() && seen.insert(r.norm_key.as_str()) {
                citing
                    .entry(r.norm_key.as_str())
                    .or_default()
                    .push(doc.doc_id.as_str());
            }
        }
    }

    let mut shared: HashMap<(&str, &str), Vec<&str>> = HashMap::new();
    for (key, docs) in &citing {
        for i in 0..docs.len() {
            for j in (i + 1)..docs.len() {
                let pair = if docs[i] < docs[j] {
                    (docs[i], docs[j])
                } else {
                    (docs[j], docs[i])
                };
                shared.entry(pair).or_default().push(key);
            }
        }
    }

    let mut edges: Vec<OverlapEdge> = shared
        .into_iter()
        .filter(|(_, refs)| refs.len() >= threshold)
        .map(|((a, b), mut refs)| {
            refs.sort_unstable();
            OverlapEdge {
                doc_a: a.to_string(),
                doc_b: b.to_string(),
                overlap_count: refs.len(),
                shared_refs: refs.into_iter().map(str::to_string).collect(),
            }
        })
        .collect();
    edges.sort_by(|x, y| (&x.doc_a, &x.doc_b).cmp(&(&y.doc_a, &y.doc_b)));
    Ok(edges)
}

/// Select, for each document that has at least one qualifying edge, its
/// highest-overlap partner. Ties break toward the lexicographically smallest
/// partner doc_id.
pub fn seed_pairs(corpus: &Corpus, threshold: usize) -> Result<Vec<SeedPair>> {
    let edges = related_pairs(corpus, threshold)?;
    let mut best: BTreeMap<&str, &OverlapEdge> = BTreeMap::new();
    for edge in &edges {
        for (seed, partner) in [
            (edge.doc_a.as_str(), edge.doc_b.as_str()),
            (edge.doc_b.as_str(), edge.doc_a.as_str()),
        ] {
            match best.get(seed) {
                None => {
                    best.insert(seed, edge);
                }
                Some(current) => {
                    let current_partner = other_end(current, seed);
                    if edge.overlap_count > current.overlap_count
                        || (edge.overlap_count == current.overlap_count
                            && partner < current_partner)
                    {
                        best.insert(seed, edge);
                    }
                }
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|(seed, edge)| SeedPair {
            seed: seed.to_string(),
            partner: other_end(edge, seed).to_string(),
            edge: edge.clone(),
        })
        .collect())
}

fn other_end<'a>(edge: &'a OverlapEdge, doc_id: &str) -> &'a str {
    if edge.doc_a == doc_id {
        &edge.doc_b
    } else {
        &edge.doc_a
    }
}

/// Assign graded relevance for an open-ended query: the pair gets r=2, corpus
/// documents whose normalized title matches a shared reference key get r=1.
/// Seed-pair membership wins over intersection membership; documents outside
/// the corpus are not labeled.
pub fn label_relevance(pair: &SeedPair, corpus: &Corpus) -> Result<Vec<RelevanceLabel>> {
    for member in [&pair.seed, &pair.partner] {
        if corpus.get(member).is_none() {
            return Err(HarnessError::Graph(format!(
                "pair member {member} absent from corpus"
            )));
        }
    }
    let title_index = corpus.title_index();
    let mut labels = vec![
        RelevanceLabel {
            doc_id: pair.seed.clone(),
            r: 2,
        },
        RelevanceLabel {
            doc_id: pair.partner.clone(),
            r: 2,
        },
    ];
    let pair_ids: BTreeSet<&str> = [pair.seed.as_str(), pair.partner.as_str()].into();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for key in &pair.edge.shared_refs {
        if let Some(doc_id) = title_index.get(key) {
            if pair_ids.contains(doc_id.as_str()) || !seen.insert(doc_id.clone()) {
                continue;
            }
            labels.push(RelevanceLabel {
                doc_id: doc_id.clone(),
                r: 1,
            });
        }
    }
    labels.sort_by(|a, b| b.r.cmp(&a.r).then(a.doc_id.cmp(&b.doc_id)));
    Ok(labels)
}

/// Build a corpus skeleton from seed pairs: per pair the seed, partner, and
/// every resolvable reference-union document, then fill with reservoir
/// documents published in or after `min_year` until `target_size` (undershoot
/// allowed when the reservoir runs dry). `seed` drives reservoir sampling.
pub fn assemble_corpus_skeleton(
    pairs: &[SeedPair],
    reservoir: &[Document],
    target_size: usize,
    min_year: i32,
    seed: u64,
) -> Result<Corpus> {
    let mut title_index: BTreeMap<String, &Document> = BTreeMap::new();
    for doc in reservoir {
        title_index.entry(doc.title_key()).or_insert(doc);
    }
    let by_id: BTreeMap<&str, &Document> =
        reservoir.iter().map(|d| (d.doc_id.as_str(), d)).collect();

    let mut chosen: BTreeMap<String, Document> = BTreeMap::new();
    for pair in pairs {
        for member in [&pair.seed, &pair.partner] {
            if let Some(doc) = by_id.get(member.as_str()) {
                chosen.insert(member.clone(), (*doc).clone());
            }
        }
        // Union of both members' references covers the intersection too.
        for member in [&pair.seed, &pair.partner] {
            if let Some(doc) = by_id.get(member.as_str()) {
                for r in &doc.references {
                    if let Some(resolved) = title_index.get(&r.norm_key) {
                        chosen.insert(resolved.doc_id.clone(), (*resolved).clone());
                    }
                }
            }
        }
    }
    if chosen.len() > target_size {
        return Err(HarnessError::Graph(format!(
            "target_size {target_size} below pair-derived document count {}",
            chosen.len()
        )));
    }

    let mut eligible: Vec<&Document> = reservoir
        .iter()
        .filter(|d| !chosen.contains_key(&d.doc_id))
        .filter(|d| d.year.is_some_and(|y| y >= min_year))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    eligible.shuffle(&mut rng);
    for doc in eligible {
        if chosen.len() >= target_size {
            break;
        }
        chosen.insert(doc.doc_id.clone(), doc.clone());
    }

    Corpus::from_documents("skeleton", chosen.into_values())
}

/// Export an edge list as line-delimited JSON.
pub fn write_edges<W: Write>(edges: &[OverlapEdge], mut writer: W) -> Result<()> {
    for edge in edges {
        serde_json::to_writer(&mut writer, edge)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RefEntry;

    fn doc_with_refs(id: &str, refs: &[&str]) -> Document {
        let mut d = Document::new(id, format!("Title {id}"));
        d.references = refs.iter().map(|r| RefEntry::new(*r)).collect();
        d
    }

    #[test]
    fn identical_lists_full_overlap() {
        let refs = ["r1", "r2", "r3", "r4", "r5"];
        let a = doc_with_refs("a", &refs);
        let b = doc_with_refs("b", &refs);
        let edge = shared_references(&a, &b).unwrap();
        assert_eq!(edge.overlap_count, 5);
    }

    #[test]
    fn disjoint_lists_no_overlap() {
        let a = doc_with_refs("a", &["r1", "r2"]);
        let b = doc_with_refs("b", &["r3", "r4"]);
        assert_eq!(shared_references(&a, &b).unwrap().overlap_count, 0);
    }

    #[test]
    fn partial_overlap_counts_intersection() {
        let a = doc_with_refs("a", &["r1", "r2", "r3", "r4", "r5", "r6"]);
        let b = doc_with_refs("b", &["r4", "r5", "r6", "r7", "r8", "r9"]);
        let edge = shared_references(&a, &b).unwrap();
        // Brute-force set intersection of {r1..r6} and {r4..r9}.
        assert_eq!(edge.overlap_count, 3);
        assert_eq!(edge.shared_refs, vec!["r4", "r5", "r6"]);
    }

    #[test]
    fn shared_references_is_symmetric() {
        let a = doc_with_refs("a", &["x", "y", "z"]);
        let b = doc_with_refs("b", &["y", "z", "w"]);
        assert_eq!(
            shared_references(&a, &b).unwrap().overlap_count,
            shared_references(&b, &a).unwrap().overlap_count
        );
    }

    #[test]
    fn same_document_is_an_error() {
        let a = doc_with_refs("a", &["x"]);
        assert!(shared_references(&a, &a).is_err());
    }

    #[test]
    fn threshold_four_keeps_and_drops() {
        let corpus4 = Corpus::from_documents(
            "c",
            vec![
                doc_with_refs("a", &["r1", "r2", "r3", "r4"]),
                doc_with_refs("b", &["r1", "r2", "r3", "r4"]),
            ],
        )
        .unwrap();
        assert_eq!(related_pairs(&corpus4, 4).unwrap().len(), 1);

        let corpus3 = Corpus::from_documents(
            "c",
            vec![
                doc_with_refs("a", &["r1", "r2", "r3"]),
                doc_with_refs("b", &["r1", "r2", "r3"]),
            ],
        )
        .unwrap();
        assert!(related_pairs(&corpus3, 4).unwrap().is_empty());
    }

    #[test]
    fn raising_threshold_never_adds_edges() {
        let corpus = Corpus::from_documents(
            "c",
            vec![
                doc_with_refs("a", &["r1", "r2", "r3", "r4", "r5"]),
                doc_with_refs("b", &["r1", "r2", "r3", "r4"]),
                doc_with_refs("c", &["r1", "r2"]),
            ],
        )
        .unwrap();
        let mut prev = usize::MAX;
        for threshold in 1..=6 {
            let n = related_pairs(&corpus, threshold).unwrap().len();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn empty_corpus_no_pairs() {
        let corpus = Corpus::from_documents("c", Vec::new()).unwrap();
        assert!(related_pairs(&corpus, 4).unwrap().is_empty());
    }

    #[test]
    fn seed_pair_tie_breaks_to_smallest_partner() {
        let corpus = Corpus::from_documents(
            "c",
            vec![
                doc_with_refs("a", &["r1", "r2", "r3", "r4"]),
                doc_with_refs("b", &["r1", "r2", "r3", "r4"]),
                doc_with_refs("c", &["r1", "r2", "r3", "r4"]),
            ],
        )
        .unwrap();
        let pairs = seed_pairs(&corpus, 4).unwrap();
        let a = pairs.iter().find(|p| p.seed == "a").unwrap();
        assert_eq!(a.partner, "b");
    }

    fn labeled_fixture() -> (Corpus, SeedPair) {
        let mut a = doc_with_refs("a", &[]);
        a.references = vec![RefEntry::new("Title c"), RefEntry::new("Title d")];
        let mut b = doc_with_refs("b", &[]);
        b.references = vec![RefEntry::new("Title c"), RefEntry::new("Title d")];
        let c = Document::new("c", "Title c");
        let d = Document::new("d", "Title d");
        let corpus = Corpus::from_documents("c", vec![a.clone(), b.clone(), c, d]).unwrap();
        let edge = shared_references(&a, &b).unwrap();
        let pair = SeedPair {
            seed: "a".into(),
            partner: "b".into(),
            edge,
        };
        (corpus, pair)
    }

    #[test]
    fn labels_pair_and_intersection() {
        let (corpus, pair) = labeled_fixture();
        let labels = label_relevance(&pair, &corpus).unwrap();
        let map: BTreeMap<_, _> = labels.iter().map(|l| (l.doc_id.as_str(), l.r)).collect();
        assert_eq!(map["a"], 2);
        assert_eq!(map["b"], 2);
        assert_eq!(map["c"], 1);
        assert_eq!(map["d"], 1);
        assert_eq!(labels.len(), 4);
    }

    #[test]
    fn out_of_corpus_refs_not_labeled() {
        let (mut corpus, pair) = labeled_fixture();
        corpus.documents.remove("d");
        let labels = label_relevance(&pair, &corpus).unwrap();
        assert!(labels.iter().all(|l| l.doc_id != "d"));
        assert_eq!(labels.len(), 3);
    }

    #[test]
    fn pair_membership_wins_over_intersection() {
        // b's own title appears in the shared reference set; it must keep r=2.
        let (corpus, mut pair) = labeled_fixture();
        pair.edge.shared_refs.push("title b".into());
        pair.edge.overlap_count = pair.edge.shared_refs.len();
        let labels = label_relevance(&pair, &corpus).unwrap();
        let b_labels: Vec<_> = labels.iter().filter(|l| l.doc_id == "b").collect();
        assert_eq!(b_labels.len(), 1);
        assert_eq!(b_labels[0].r, 2);
    }

    #[test]
    fn label_partition_invariant() {
        let (corpus, pair) = labeled_fixture();
        let labels = label_relevance(&pair, &corpus).unwrap();
        let r2: BTreeSet<_> = labels.iter().filter(|l| l.r == 2).map(|l| &l.doc_id).collect();
        let r1: BTreeSet<_> = labels.iter().filter(|l| l.r == 1).map(|l| &l.doc_id).collect();
        assert_eq!(r2.len(), 2);
        assert!(r2.intersection(&r1).next().is_none());
    }

    #[test]
    fn missing_pair_member_is_error() {
        let (mut corpus, pair) = labeled_fixture();
        corpus.documents.remove("b");
        assert!(label_relevance(&pair, &corpus).is_err());
    }

    fn reservoir_doc(id: &str, year: i32) -> Document {
        let mut d = Document::new(id, format!("Reservoir {id}"));
        d.year = Some(year);
        d
    }

    #[test]
    fn skeleton_undershoots_on_empty_reservoir() {
        let a = doc_with_refs("a", &["r1", "r2", "r3", "r4"]);
        let b = doc_with_refs("b", &["r1", "r2", "r3", "r4"]);
        let edge = shared_references(&a, &b).unwrap();
        let pair = SeedPair {
            seed: "a".into(),
            partner: "b".into(),
            edge,
        };
        let reservoir = vec![a, b];
        let corpus = assemble_corpus_skeleton(&[pair], &reservoir, 10, 2020, 7).unwrap();
        assert_eq!(corpus.len(), 2);
    }

    #[test]
    fn skeleton_excludes_pre_2020_reservoir() {
        let corpus =
            assemble_corpus_skeleton(&[], &[reservoir_doc("x", 2019)], 5, 2020, 7).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn skeleton_fills_to_target() {
        let reservoir: Vec<Document> = (0..120)
            .map(|i| reservoir_doc(&format!("d{i:03}"), 2021))
            .collect();
        let corpus = assemble_corpus_skeleton(&[], &reservoir, 100, 2020, 7).unwrap();
        assert_eq!(corpus.len(), 100);
    }

    #[test]
    fn skeleton_sampling_is_seed_deterministic() {
        let reservoir: Vec<Document> = (0..50)
            .map(|i| reservoir_doc(&format!("d{i:03}"), 2022))
            .collect();
        let one = assemble_corpus_skeleton(&[], &reservoir, 20, 2020, 42).unwrap();
        let two = assemble_corpus_skeleton(&[], &reservoir, 20, 2020, 42).unwrap();
        assert_eq!(one.documents, two.documents);
    }
}
