//! Differential cluster labelling: candidate labels (terms or journals) are
//! scored per cluster by the normalized mutual information between "document
//! carries the label" and "document belongs to the cluster".

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{PublicationRecord, TermVector};
use crate::error::{Error, Result};

/// 2x2 table over the scored documents: `n11` in cluster with label, `n10`
/// label outside the cluster, `n01` cluster without label, `n00` neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl Contingency {
    pub fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Self {
        Contingency { n11, n10, n01, n00 }
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }
}

pub fn contingency<T: Eq + Hash>(
    cluster: &HashSet<T>,
    label: &HashSet<T>,
    universe: &HashSet<T>,
) -> Result<Contingency> {
    if !cluster.is_subset(universe) || !label.is_subset(universe) {
        return Err(Error::InvalidArgument(
            "cluster and label documents must lie inside the universe".into(),
        ));
    }
    let n11 = cluster.intersection(label).count() as u64;
    let n10 = label.len() as u64 - n11;
    let n01 = cluster.len() as u64 - n11;
    let n00 = universe.len() as u64 - n11 - n10 - n01;
    Ok(Contingency { n11, n10, n01, n00 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// I / sqrt(H(T) * H(C))
    #[default]
    Sqrt,
    /// I / min(H(T), H(C))
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Enriched,
    Depleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmiScore {
    pub nmi: f64,
    pub direction: Direction,
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Binary entropy (bits) of a two-way split of `n` items.
fn entropy2(a: u64, b: u64) -> f64 {
    let n = (a + b) as f64;
    -(plogp(a as f64 / n) + plogp(b as f64 / n))
}

pub fn nmi_score(table: Contingency, normalization: Normalization) -> Result<NmiScore> {
    let n = table.total();
    if n == 0 {
        return Err(Error::InvalidArgument("empty contingency table".into()));
    }
    let nf = n as f64;
    let Contingency { n11, n10, n01, n00 } = table;
    let label_docs = n11 + n10;
    let cluster_docs = n11 + n01;

    let h_label = entropy2(label_docs, n - label_docs);
    let h_cluster = entropy2(cluster_docs, n - cluster_docs);

    let cell = |joint: u64, row: u64, col: u64| -> f64 {
        if joint == 0 {
            return 0.0;
        }
        let p = joint as f64 / nf;
        p * (joint as f64 * nf / (row as f64 * col as f64)).log2()
    };
    let mi = cell(n11, label_docs, cluster_docs)
        + cell(n10, label_docs, n - cluster_docs)
        + cell(n01, n - label_docs, cluster_docs)
        + cell(n00, n - label_docs, n - cluster_docs);

    let denom = match normalization {
        Normalization::Sqrt => (h_label * h_cluster).sqrt(),
        Normalization::Min => h_label.min(h_cluster),
    };
    let nmi = if h_label == 0.0 || h_cluster == 0.0 || denom == 0.0 {
        0.0
    } else {
        (mi / denom).clamp(0.0, 1.0)
    };
    let enriched =
        cluster_docs > 0 && (n11 as f64 / cluster_docs as f64) > (label_docs as f64 / nf);
    Ok(NmiScore {
        nmi,
        direction: if enriched {
            Direction::Enriched
        } else {
            Direction::Depleted
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniverseMode {
    /// Every listed document, clustered or not.
    #[default]
    GiantComponent,
    /// Only documents assigned to some cluster.
    SolutionMembers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    #[default]
    Term,
    Journal,
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelMode::Term => "term",
            LabelMode::Journal => "journal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub universe: UniverseMode,
    pub top_n: usize,
    /// Labels carried by fewer documents of the universe are not scored.
    pub min_doc_freq: u64,
    pub normalization: Normalization,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            universe: UniverseMode::GiantComponent,
            top_n: 20,
            min_doc_freq: 5,
            normalization: Normalization::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub cluster: usize,
    pub label: String,
    pub nmi: f64,
    pub direction: Direction,
    pub counts: Contingency,
}

/// Document label sets from term vectors.
pub fn term_labels(vectors: &[TermVector]) -> HashMap<String, BTreeSet<String>> {
    let mut out: HashMap<String, BTreeSet<String>> = HashMap::new();
    for tv in vectors {
        out.entry(tv.doc_id.clone())
            .or_default()
            .extend(tv.terms.iter().cloned());
    }
    out
}

/// Each document's journal as its single label.
pub fn journal_labels(records: &[PublicationRecord]) -> HashMap<String, BTreeSet<String>> {
    records
        .iter()
        .filter(|r| !r.journal.trim().is_empty())
        .map(|r| (r.id.clone(), BTreeSet::from([r.journal.trim().to_string()])))
        .collect()
}

/// Ranks enriched labels per cluster by NMI (ties: label order), keeping the
/// best `top_n`. `assignment` lists every candidate document with its cluster
/// (`None` for unclustered documents); documents without labels count as
/// having none.
pub fn rank_labels(
    assignment: &[(String, Option<usize>)],
    labels: &HashMap<String, BTreeSet<String>>,
    config: &LabelConfig,
) -> Result<BTreeMap<usize, Vec<LabelScore>>> {
    let universe: Vec<(&str, Option<usize>)> = assignment
        .iter()
        .filter(|(_, c)| config.universe == UniverseMode::GiantComponent || c.is_some())
        .map(|(id, c)| (id.as_str(), *c))
        .collect();
    if universe.is_empty() {
        return Err(Error::Empty(
            "no documents in the labelling universe".into(),
        ));
    }
    let n = universe.len() as u64;
    let empty = BTreeSet::new();
    let labels_of = |id: &str| labels.get(id).unwrap_or(&empty);

    let mut doc_freq: HashMap<&str, u64> = HashMap::new();
    let mut members: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for &(id, c) in &universe {
        for l in labels_of(id) {
            *doc_freq.entry(l.as_str()).or_insert(0) += 1;
        }
        if let Some(c) = c {
            members.entry(c).or_default().push(id);
        }
    }

    let scored: Vec<(usize, Vec<LabelScore>)> = members
        .par_iter()
        .map(|(&cluster, docs)| {
            let size = docs.len() as u64;
            let mut inside: HashMap<&str, u64> = HashMap::new();
            for &d in docs {
                for l in labels_of(d) {
                    *inside.entry(l.as_str()).or_insert(0) += 1;
                }
            }
            let mut list = Vec::new();
            for (label, n11) in inside {
                let df = doc_freq[label];
                if df < config.min_doc_freq {
                    continue;
                }
                let counts = Contingency::new(n11, df - n11, size - n11, n + n11 - df - size);
                let score = nmi_score(counts, config.normalization)?;
                if score.direction == Direction::Enriched {
                    list.push(LabelScore {
                        cluster,
                        label: label.to_string(),
                        nmi: score.nmi,
                        direction: score.direction,
                        counts,
                    });
                }
            }
            list.sort_by(|a, b| b.nmi.total_cmp(&a.nmi).then_with(|| a.label.cmp(&b.label)));
            list.truncate(config.top_n);
            Ok((cluster, list))
        })
        .collect::<Result<_>>()?;
    Ok(scored.into_iter().collect())
}

pub fn write_labels_tsv<W: Write>(
    ranked: &BTreeMap<usize, Vec<LabelScore>>,
    mode: LabelMode,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "cluster_id\trank\tlabel\tnmi\tn11\tn10\tn01\tn00\tmode"
    )?;
    for (cluster, list) in ranked {
        for (rank, s) in list.iter().enumerate() {
            let c = s.counts;
            writeln!(
                out,
                "{cluster}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{mode}",
                rank + 1,
                s.label.replace(['\t', '\n'], " "),
                s.nmi,
                c.n11,
                c.n10,
                c.n01,
                c.n00
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hs(items: &[&'static str]) -> HashSet<&'static str> {
        items.iter().copied().collect()
    }

    #[test]
    fn contingency_perfect_overlap() {
        let t = contingency(
            &hs(&["d1", "d2"]),
            &hs(&["d1", "d2"]),
            &hs(&["d1", "d2", "d3", "d4"]),
        )
        .unwrap();
        assert_eq!(t, Contingency::new(2, 0, 0, 2));
    }

    #[test]
    fn contingency_disjoint_and_saturated() {
        let u = hs(&["a", "b", "c", "d"]);
        let t = contingency(&hs(&["a"]), &hs(&["b", "c"]), &u).unwrap();
        assert_eq!(t.n11, 0);
        let t = contingency(&hs(&["a"]), &u, &u).unwrap();
        assert_eq!(t.n10 + t.n11, 4);
        assert_eq!((t.n01, t.n00), (0, 0));
        assert!(contingency(&hs(&["z"]), &u, &u).is_err());
    }

    #[test]
    fn perfect_marker_scores_one() {
        let s = nmi_score(Contingency::new(2, 0, 0, 2), Normalization::Sqrt).unwrap();
        assert!((s.nmi - 1.0).abs() < 1e-12);
        assert_eq!(s.direction, Direction::Enriched);
    }

    #[test]
    fn independence_scores_zero() {
        let s = nmi_score(Contingency::new(1, 1, 1, 1), Normalization::Sqrt).unwrap();
        assert_eq!(s.nmi, 0.0);
    }

    #[test]
    fn label_everywhere_scores_zero() {
        let s = nmi_score(Contingency::new(3, 5, 0, 0), Normalization::Sqrt).unwrap();
        assert_eq!(s.nmi, 0.0);
        assert!(nmi_score(Contingency::new(0, 0, 0, 0), Normalization::Sqrt).is_err());
    }

    type Docs = (
        Vec<(String, Option<usize>)>,
        HashMap<String, BTreeSet<String>>,
    );

    fn docs(spec: &[(&str, Option<usize>, &[&str])]) -> Docs {
        let assignment = spec.iter().map(|(d, c, _)| (d.to_string(), *c)).collect();
        let labels = spec
            .iter()
            .map(|(d, _, ls)| (d.to_string(), ls.iter().map(|s| s.to_string()).collect()))
            .collect();
        (assignment, labels)
    }

    fn cfg(universe: UniverseMode) -> LabelConfig {
        LabelConfig {
            universe,
            top_n: 10,
            min_doc_freq: 1,
            normalization: Normalization::Sqrt,
        }
    }

    #[test]
    fn perfect_marker_ranks_first() {
        let (a, l) = docs(&[
            ("d1", Some(1), &["x", "common"]),
            ("d2", Some(1), &["x", "common", "y"]),
            ("d3", Some(2), &["common", "y"]),
            ("d4", Some(2), &["common"]),
        ]);
        let ranked = rank_labels(&a, &l, &cfg(UniverseMode::GiantComponent)).unwrap();
        let top = &ranked[&1][0];
        assert_eq!(top.label, "x");
        assert!((top.nmi - 1.0).abs() < 1e-12);
        assert!(ranked[&1].iter().all(|s| s.label != "common"));
    }

    #[test]
    fn depleted_label_is_filtered() {
        // "w" is in every document except those of cluster 0: (0, k, m, n)
        let mut spec: Vec<(String, Option<usize>, Vec<&str>)> = Vec::new();
        for i in 0..4 {
            spec.push((format!("a{i}"), Some(0), vec![]));
        }
        for i in 0..8 {
            spec.push((format!("b{i}"), Some(1), vec!["w"]));
        }
        let assignment: Vec<_> = spec.iter().map(|(d, c, _)| (d.clone(), *c)).collect();
        let labels = spec
            .iter()
            .map(|(d, _, ls)| (d.clone(), ls.iter().map(|s| s.to_string()).collect()))
            .collect();
        let table = Contingency::new(0, 8, 4, 0);
        let raw = nmi_score(table, Normalization::Sqrt).unwrap();
        assert!((raw.nmi - 1.0).abs() < 1e-12);
        assert_eq!(raw.direction, Direction::Depleted);
        let ranked = rank_labels(&assignment, &labels, &cfg(UniverseMode::GiantComponent)).unwrap();
        assert!(ranked.get(&0).is_none_or(|l| l.is_empty()));
        assert_eq!(ranked[&1][0].label, "w");
    }

    #[test]
    fn journal_mode_marker() {
        let mk = |id: &str, journal: &str| PublicationRecord {
            id: id.into(),
            year: 2010,
            doc_type: crate::corpus::DocType::Article,
            title: String::new(),
            abstract_text: String::new(),
            journal: journal.into(),
            references: vec![],
        };
        let records = vec![
            mk("a", "Biol Invasions"),
            mk("b", "Oecologia"),
            mk("c", "Mar Biol"),
            mk("d", "Mar Biol"),
        ];
        let labels = journal_labels(&records);
        let assignment = vec![
            ("a".to_string(), Some(0)),
            ("b".to_string(), Some(0)),
            ("c".to_string(), Some(1)),
            ("d".to_string(), Some(1)),
        ];
        let ranked = rank_labels(&assignment, &labels, &cfg(UniverseMode::GiantComponent)).unwrap();
        assert_eq!(ranked[&1][0].label, "Mar Biol");
        assert!((ranked[&1][0].nmi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn universe_modes_differ_on_unclustered_docs() {
        let (a, l) = docs(&[
            ("d1", Some(0), &["x"]),
            ("d2", Some(0), &["x"]),
            ("d3", Some(1), &[]),
            ("d4", None, &["x"]),
        ]);
        let giant = rank_labels(&a, &l, &cfg(UniverseMode::GiantComponent)).unwrap();
        let members = rank_labels(&a, &l, &cfg(UniverseMode::SolutionMembers)).unwrap();
        assert_eq!(giant[&0][0].counts, Contingency::new(2, 1, 0, 1));
        assert_eq!(members[&0][0].counts, Contingency::new(2, 0, 0, 1));
        assert!((members[&0][0].nmi - 1.0).abs() < 1e-12);
        assert!(giant[&0][0].nmi < 1.0);
    }

    #[test]
    fn empty_universe_errors() {
        let (a, l) = docs(&[("d1", None, &["x"])]);
        assert!(rank_labels(&a, &l, &cfg(UniverseMode::SolutionMembers)).is_err());
    }

    #[test]
    fn min_doc_freq_cuts_rare_labels() {
        let (a, l) = docs(&[("d1", Some(0), &["rare"]), ("d2", Some(1), &[])]);
        let mut c = cfg(UniverseMode::GiantComponent);
        c.min_doc_freq = 2;
        let ranked = rank_labels(&a, &l, &c).unwrap();
        assert!(ranked[&0].is_empty());
    }

    proptest! {
        #[test]
        fn nmi_bounded_and_margin_symmetric(n11 in 0u64..50, n10 in 0u64..50, n01 in 0u64..50, n00 in 0u64..50) {
            prop_assume!(n11 + n10 + n01 + n00 > 0);
            for norm in [Normalization::Sqrt, Normalization::Min] {
                let a = nmi_score(Contingency::new(n11, n10, n01, n00), norm).unwrap().nmi;
                let b = nmi_score(Contingency::new(n11, n01, n10, n00), norm).unwrap().nmi;
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
