use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use topomap::corpus::{
    filter_corpus, ingest_corpus, write_jsonl, CorpusFilter, DocType, InputFormat,
    PublicationRecord,
};
use topomap::graph::{
    build_graph, giant_component, weak_components, CitationGraph, Edge, Weighting,
};
use topomap::leiden::{cluster, connectivity_check, cpm_quality, CpmParams};

fn doc_type() -> impl Strategy<Value = DocType> {
    prop_oneof![
        Just(DocType::Article),
        Just(DocType::Letter),
        Just(DocType::Review),
        Just(DocType::Other("editorial".into())),
    ]
}

/// Records `p0..pn` citing random members (possibly themselves) and
/// out-of-corpus ids.
fn corpus() -> impl Strategy<Value = Vec<PublicationRecord>> {
    (1usize..40).prop_flat_map(|n| {
        let record = (
            1995i32..2020,
            doc_type(),
            prop::collection::vec(prop_oneof![4 => (0..n).prop_map(|j| format!("p{j}")), 1 => (0..5usize).prop_map(|j| format!("EXT{j}"))], 0..8),
        );
        prop::collection::vec(record, n).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (year, doc_type, references))| PublicationRecord {
                    id: format!("p{i}"),
                    year,
                    doc_type,
                    title: format!("title {i}"),
                    abstract_text: String::new(),
                    journal: format!("journal {}", i % 3),
                    references,
                })
                .collect()
        })
    })
}

fn weighted_graph(max_nodes: usize) -> impl Strategy<Value = CitationGraph> {
    (2..max_nodes).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 0.1f64..3.0), 0..n * 3).prop_map(move |raw| {
            let edges =
                raw.into_iter()
                    .filter(|(s, t, _)| s != t)
                    .map(|(source, target, weight)| Edge {
                        source,
                        target,
                        weight,
                    });
            CitationGraph::from_parts((0..n).map(|i| format!("v{i}")).collect(), vec![1; n], edges)
                .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filtering_partitions_the_input(records in corpus(), lo in 1998i32..2010, span in 0i32..12) {
        let filter = CorpusFilter::new(lo, lo + span, [DocType::Article, DocType::Review]).unwrap();
        let accepted = records.iter().filter(|r| filter.accepts(r)).count();
        let total = records.len();
        let (kept, dropped) = filter_corpus(records, &filter);
        prop_assert_eq!(kept.len() + dropped, total);
        prop_assert_eq!(kept.len(), accepted);
        prop_assert!(kept.iter().all(|r| filter.accepts(r)));
    }

    #[test]
    fn ingestion_is_deterministic_and_deduplicates_references(records in corpus()) {
        let mut bytes = Vec::new();
        write_jsonl(&records, &mut bytes).unwrap();
        let a = ingest_corpus(bytes.as_slice(), InputFormat::Jsonl).unwrap();
        let b = ingest_corpus(bytes.as_slice(), InputFormat::Jsonl).unwrap();
        prop_assert_eq!(&a.records, &b.records);
        prop_assert_eq!(a.records.len(), records.len());
        for r in &a.records {
            let unique: HashSet<&String> = r.references.iter().collect();
            prop_assert_eq!(unique.len(), r.references.len());
        }
    }

    #[test]
    fn built_graphs_respect_edge_invariants(records in corpus(), unit in any::<bool>()) {
        let weighting = if unit { Weighting::Unit } else { Weighting::NormalizedOut };
        let (g, _) = build_graph(&records, weighting).unwrap();
        let n = g.node_count();
        let mut pairs = HashSet::new();
        for e in g.edges() {
            prop_assert!(e.source < n && e.target < n);
            prop_assert_ne!(e.source, e.target);
            prop_assert!(e.weight >= 0.0);
            prop_assert!(pairs.insert((e.source, e.target)), "duplicate edge");
        }
        let refs: usize = records.iter().map(|r| r.references.len()).sum();
        prop_assert!(g.edge_count() <= refs);

        let view = g.undirected_view();
        let directed = g.total_weight();
        prop_assert!((view.total_weight() - directed).abs() <= 1e-9 * directed.max(1.0));

        if !unit {
            let out = g.out_weights();
            for (i, r) in records.iter().enumerate() {
                let cites_other = r.references.iter().any(|x| x != &r.id && g.index_of(x).is_some());
                if cites_other {
                    prop_assert!((out[i] - 1.0).abs() <= 1e-12, "node {} sums to {}", i, out[i]);
                } else {
                    prop_assert_eq!(out[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn giant_component_is_connected_and_maximal(g in weighted_graph(30)) {
        let (giant, report) = giant_component(&g);
        prop_assert!(report.giant_size <= g.node_count());
        prop_assert_eq!(report.giant_size + report.dropped_nodes, g.node_count());
        prop_assert_eq!(weak_components(&giant).len(), 1);
        let largest = weak_components(&g).iter().map(Vec::len).max().unwrap();
        prop_assert_eq!(giant.node_count(), largest);
        let members: BTreeSet<&str> = giant.ids().iter().map(String::as_str).collect();
        for e in g.edges() {
            let inside = (members.contains(g.id(e.source)), members.contains(g.id(e.target)));
            prop_assert!(inside.0 == inside.1, "edge crosses the giant component boundary");
        }
    }

    #[test]
    fn cluster_solutions_satisfy_their_invariants(
        g in weighted_graph(40),
        gamma in 0.01f64..2.0,
        min_size in 1u64..5,
        seed in any::<u64>(),
    ) {
        let params = CpmParams { gamma, min_cluster_size: min_size, seed, random_starts: 3, iterations: 20, ..CpmParams::default() };
        let s = cluster(&g, &params).unwrap();
        let p = &s.partition;
        let n = g.node_count();
        prop_assert_eq!(p.assignment.len(), n);

        let k = p.cluster_sizes.len();
        let mut counts = vec![0u64; k];
        for &c in &p.assignment {
            prop_assert!(c < k);
            counts[c] += 1;
        }
        prop_assert_eq!(&counts, &p.cluster_sizes);
        prop_assert!(p.cluster_sizes.iter().all(|&c| c > 0));
        prop_assert!(p.cluster_sizes.windows(2).all(|w| w[0] >= w[1]));

        prop_assert!(s.retained_sizes().iter().all(|&c| c >= min_size));
        prop_assert!(p.cluster_sizes[s.retained..].iter().all(|&c| c < min_size));
        let discarded: u64 = p.cluster_sizes[s.retained..].iter().sum();
        prop_assert!((s.discarded_share - discarded as f64 / n as f64).abs() < 1e-12);
        prop_assert_eq!(s.discarded_nodes.len() as u64, discarded);

        let view = g.undirected_view();
        prop_assert!(connectivity_check(&view, &p.assignment).connected);
        let q = cpm_quality(&view, &p.assignment, gamma).unwrap();
        prop_assert!((q - p.quality).abs() <= 1e-9 * q.abs().max(1.0));
        for log in &s.run_log.starts {
            prop_assert!(log.qualities.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0)));
        }

        prop_assert_eq!(cluster(&g, &params).unwrap(), s);
    }
}
