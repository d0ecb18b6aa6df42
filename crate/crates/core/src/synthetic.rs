//! Seeded generators for test and benchmark data: random graphs with and
//! without planted communities, and a small topical publication corpus with
//! a matching external classification.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_jsonl, DocType, PublicationRecord};
use crate::error::{Error, Result};
use crate::graph::{CitationGraph, Edge};

fn node_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

/// G(n, p) with unit weights; each pair gets one edge in a random direction.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> CitationGraph {
    planted_partition(&[n], p, 0.0, rng)
}

/// Stochastic block model with unit weights: pairs inside a block link with
/// probability `p_in`, other pairs with `p_out`.
pub fn planted_partition<R: Rng + ?Sized>(
    blocks: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> CitationGraph {
    let block_of: Vec<usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = block_of.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block_of[i] == block_of[j] {
                p_in
            } else {
                p_out
            };
            if rng.random_bool(p) {
                let (source, target) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
                edges.push(Edge {
                    source,
                    target,
                    weight: 1.0,
                });
            }
        }
    }
    CitationGraph::from_parts(node_ids(n), vec![1; n], edges).expect("generated edges are valid")
}

/// Directed citation graph with exactly `edges` distinct links spread over
/// `communities` equal groups; a fraction `mixing` of links leaves its
/// group. Weights are out-normalized.
pub fn citation_benchmark(
    nodes: usize,
    edges: usize,
    communities: usize,
    mixing: f64,
    seed: u64,
) -> Result<CitationGraph> {
    if nodes < 2 || communities == 0 || communities > nodes || edges > nodes * (nodes - 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot place {edges} links on {nodes} nodes in {communities} groups"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group = |v: usize| v * communities / nodes;
    let start = |g: usize| (g * nodes).div_ceil(communities);
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(edges);
    let mut links: Vec<(usize, usize)> = Vec::with_capacity(edges);
    while links.len() < edges {
        let s = rng.random_range(0..nodes);
        let t = if rng.random_bool(mixing) {
            rng.random_range(0..nodes)
        } else {
            let g = group(s);
            rng.random_range(start(g)..start(g + 1))
        };
        if s != t && seen.insert((s, t)) {
            links.push((s, t));
        }
    }
    let mut out_degree = vec![0usize; nodes];
    for &(s, _) in &links {
        out_degree[s] += 1;
    }
    let edges = links.into_iter().map(|(source, target)| Edge {
        source,
        target,
        weight: 1.0 / out_degree[source] as f64,
    });
    CitationGraph::from_parts(node_ids(nodes), vec![1; nodes], edges)
}

struct Topic {
    terms: &'static [&'static str],
    journals: &'static [&'static str],
    size: usize,
    /// Share of its home microfield the topic should occupy.
    share: f64,
}

const TOPICS: &[Topic] = &[
    Topic {
        terms: &[
            "invasive plant",
            "seed bank",
            "alien flora",
            "enemy release",
            "plant invasion",
        ],
        journals: &["Plant Ecology", "Journal of Vegetation Science"],
        size: 170,
        share: 0.53,
    },
    Topic {
        terms: &["ballast water", "ascidian", "hull fouling", "port survey"],
        journals: &["Marine Pollution Bulletin", "Marine Biology"],
        size: 120,
        share: 0.34,
    },
    Topic {
        terms: &["zebra mussel", "round goby", "great lakes", "zooplankton"],
        journals: &["Journal of Great Lakes Research", "Freshwater Biology"],
        size: 100,
        share: 0.17,
    },
    Topic {
        terms: &["argentine ant", "fire ant", "ant colony", "mutualism"],
        journals: &["Insectes Sociaux", "Ecological Entomology"],
        size: 80,
        share: 0.06,
    },
    Topic {
        terms: &["rat eradication", "feral cat", "seabird colony", "island"],
        journals: &["Biological Conservation", "Wildlife Research"],
        size: 60,
        share: 0.07,
    },
    Topic {
        terms: &["signal crayfish", "crayfish plague", "freshwater crayfish"],
        journals: &["Freshwater Crayfish", "Aquatic Conservation"],
        size: 40,
        share: 0.168,
    },
    Topic {
        terms: &["cane toad", "chytrid fungus", "amphibian decline"],
        journals: &["Herpetologica"],
        size: 15,
        share: 0.04,
    },
    Topic {
        terms: &["comb jelly", "jellyfish bloom"],
        journals: &["Journal of Plankton Research"],
        size: 12,
        share: 0.05,
    },
];

const GENERIC: &[&str] = &[
    "population",
    "impact",
    "management",
    "distribution",
    "species",
    "growth",
    "survey",
    "dispersal",
    "competition",
    "abundance",
    "habitat",
    "spread",
];

const SCATTER_MICROFIELDS: usize = 40;

/// Publication corpus plus external classification.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    /// Records in file order, including out-of-window years, other document
    /// types and repeated ids.
    pub records: Vec<PublicationRecord>,
    /// `(pub_id, microfield_id)`.
    pub classification: Vec<(String, String)>,
    /// `(microfield_id, global_size, label)`.
    pub microfields: Vec<(String, u64, String)>,
}

fn sentence(topic: &Topic, rng: &mut ChaCha8Rng) -> String {
    let a = topic.terms.choose(rng).unwrap();
    let b = topic.terms.choose(rng).unwrap();
    let g = GENERIC.choose(rng).unwrap();
    let h = GENERIC.choose(rng).unwrap();
    format!("We studied the {g} of {a} and the {h} of {b}.")
}

/// Eight topics of 12 to 170 publications that cite mostly inside their
/// topic, plus filtered-out and duplicate records and references that point
/// outside the corpus.
pub fn synthetic_corpus(seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut topic_members: Vec<Vec<String>> = Vec::new();
    let mut next = 0usize;
    for t in TOPICS {
        topic_members.push(
            (0..t.size)
                .map(|_| {
                    next += 1;
                    format!("P{next:05}")
                })
                .collect(),
        );
    }

    let mut records = Vec::new();
    for (ti, t) in TOPICS.iter().enumerate() {
        for id in &topic_members[ti] {
            let mut references = Vec::new();
            for _ in 0..rng.random_range(3..=7) {
                let pool = if rng.random_bool(0.9) {
                    &topic_members[ti]
                } else {
                    topic_members.choose(&mut rng).unwrap()
                };
                let r = pool.choose(&mut rng).unwrap();
                if r != id {
                    references.push(r.clone());
                }
            }
            for _ in 0..rng.random_range(0..=2) {
                references.push(format!("EXT{:06}", rng.random_range(0..1_000_000)));
            }
            let doc_type = match rng.random_range(0..20) {
                0 => DocType::Review,
                1 => DocType::Letter,
                _ => DocType::Article,
            };
            records.push(PublicationRecord {
                id: id.clone(),
                year: rng.random_range(2000..=2017),
                doc_type,
                title: format!(
                    "{} {} in invaded ecosystems",
                    t.terms.choose(&mut rng).unwrap(),
                    GENERIC.choose(&mut rng).unwrap()
                ),
                abstract_text: (0..3)
                    .map(|_| sentence(t, &mut rng))
                    .collect::<Vec<_>>()
                    .join(" "),
                journal: t.journals.choose(&mut rng).unwrap().to_string(),
                references,
            });
        }
    }

    // records the corpus filter removes
    let mut extra = Vec::new();
    for k in 0..30 {
        let ti = rng.random_range(0..TOPICS.len());
        let (year, doc_type) = if k < 20 {
            (rng.random_range(1985..2000), DocType::Article)
        } else {
            (
                rng.random_range(2000..=2017),
                DocType::Other("proceedings paper".into()),
            )
        };
        let cited = topic_members[ti].choose(&mut rng).unwrap().clone();
        extra.push(PublicationRecord {
            id: format!("X{k:04}"),
            year,
            doc_type,
            title: format!("{} revisited", TOPICS[ti].terms[0]),
            abstract_text: sentence(&TOPICS[ti], &mut rng),
            journal: TOPICS[ti].journals[0].to_string(),
            references: vec![cited],
        });
    }
    // the same id seen again later in the file; the first occurrence wins
    let duplicates: Vec<PublicationRecord> = (0..8)
        .map(|k| {
            let mut r = records[k * 50].clone();
            r.title = "duplicate export row".into();
            r.references.clear();
            r
        })
        .collect();
    // out-of-window records cite into the corpus and are cited back
    for (k, r) in extra.iter().enumerate().take(10) {
        let citing = &mut records[k * 37];
        citing.references.push(r.id.clone());
    }
    let own = records[3].id.clone();
    records[3].references.push(own);
    records.extend(extra);
    records.extend(duplicates);

    let mut classification = Vec::new();
    let mut home_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut scatter_counts: BTreeMap<String, u64> = BTreeMap::new();
    for (ti, members) in topic_members.iter().enumerate() {
        for id in members {
            if rng.random_bool(0.02) {
                continue;
            }
            if rng.random_bool(0.8) {
                let m = format!("m{}", 100 + ti);
                *home_counts.entry(m.clone()).or_insert(0) += 1;
                classification.push((id.clone(), m));
            } else {
                let m = format!("m{}", 500 + rng.random_range(0..SCATTER_MICROFIELDS));
                *scatter_counts.entry(m.clone()).or_insert(0) += 1;
                classification.push((id.clone(), m));
            }
        }
    }
    let mut microfields = Vec::new();
    for (ti, t) in TOPICS.iter().enumerate() {
        let m = format!("m{}", 100 + ti);
        let count = home_counts.get(&m).copied().unwrap_or(0);
        let global = ((count as f64 / t.share).round() as u64).max(count);
        microfields.push((m, global, format!("{} research", t.terms[0])));
    }
    for (m, count) in &scatter_counts {
        let global = count + rng.random_range(200..2000);
        microfields.push((m.clone(), global, format!("neighbouring field {m}")));
    }
    SyntheticCorpus {
        records,
        classification,
        microfields,
    }
}

impl SyntheticCorpus {
    /// Writes `publications.jsonl`, `classification.tsv` and `microfields.tsv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut pubs = Vec::new();
        write_jsonl(&self.records, &mut pubs)?;
        let mut class = Vec::new();
        writeln!(class, "pub_id\tmicrofield_id")?;
        for (p, m) in &self.classification {
            writeln!(class, "{p}\t{m}")?;
        }
        let mut fields = Vec::new();
        writeln!(fields, "microfield_id\tglobal_size\tlabel")?;
        for (m, size, label) in &self.microfields {
            writeln!(fields, "{m}\t{size}\t{label}")?;
        }
        for (name, bytes) in [
            ("publications.jsonl", pubs),
            ("classification.tsv", class),
            ("microfields.tsv", fields),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_has_requested_size_and_normalized_weights() {
        let g = citation_benchmark(1000, 5000, 10, 0.1, 3).unwrap();
        assert_eq!(g.node_count(), 1000);
        assert_eq!(g.edge_count(), 5000);
        for w in g.out_weights().into_iter().filter(|&w| w > 0.0) {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corpus_is_seed_deterministic() {
        assert_eq!(synthetic_corpus(5), synthetic_corpus(5));
        assert_ne!(synthetic_corpus(5).records, synthetic_corpus(6).records);
    }

    #[test]
    fn planted_partition_respects_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = planted_partition(&[5, 5], 1.0, 0.0, &mut rng);
        assert_eq!(g.edge_count(), 20);
        assert!(g.edges().iter().all(|e| (e.source < 5) == (e.target < 5)));
    }
}
