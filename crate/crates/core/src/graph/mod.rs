//! Weighted direct citation network, its giant component, and the symmetric
//! adjacency the clustering runs on.

mod io;
mod view;

pub use io::{
    read_graph, read_graph_dir, write_graph, write_graph_dir, GraphSummary, EDGES_FILE, NODES_FILE,
    SUMMARY_FILE,
};
pub use view::SymmetricAdjacency;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::PublicationRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Unit,
    /// Each citing node spreads a total weight of 1 over its in-corpus references.
    #[default]
    NormalizedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Directed weighted citation graph. Edges are unique per ordered pair,
/// free of self-loops and sorted by (source, target).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CitationGraph {
    ids: Vec<String>,
    node_sizes: Vec<u64>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub references_total: usize,
    pub resolved: usize,
    pub out_of_corpus: usize,
    pub self_citations: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub component_count: usize,
    pub giant_size: usize,
    pub giant_edge_count: usize,
    pub dropped_nodes: usize,
}

impl CitationGraph {
    /// Assembles a graph from ids, sizes and edges. Parallel edges are summed
    /// and the edge list is sorted; self-loops and bad endpoints are rejected.
    pub fn from_parts(
        ids: Vec<String>,
        node_sizes: Vec<u64>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self> {
        if ids.len() != node_sizes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} ids but {} node sizes",
                ids.len(),
                node_sizes.len()
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() {
                return Err(Error::InvalidArgument(format!("node {i} has an empty id")));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate node id {id:?}")));
            }
        }
        if let Some(pos) = node_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!(
                "node {:?} has size 0",
                ids[pos]
            )));
        }
        let n = ids.len();
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) out of range for {n} nodes",
                    e.source, e.target
                )));
            }
            if e.source == e.target {
                return Err(Error::InvalidArgument(format!(
                    "self-loop on node {:?}",
                    ids[e.source]
                )));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) has invalid weight {}",
                    ids[e.source], ids[e.target], e.weight
                )));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        edges.dedup_by(|later, kept| {
            if later.source == kept.source && later.target == kept.target {
                kept.weight += later.weight;
                true
            } else {
                false
            }
        });
        Ok(CitationGraph {
            ids,
            node_sizes,
            edges,
            index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn node_sizes(&self) -> &[u64] {
        &self.node_sizes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Summed outgoing weight per node.
    pub fn out_weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        for e in &self.edges {
            out[e.source] += e.weight;
        }
        out
    }

    pub fn undirected_view(&self) -> SymmetricAdjacency {
        SymmetricAdjacency::from_graph(self)
    }

    /// Induced subgraph on `keep` (node indices, any order); the original
    /// relative node order is preserved.
    pub fn induced_subgraph(&self, keep: &[usize]) -> CitationGraph {
        let mut flag = vec![false; self.node_count()];
        for &k in keep {
            flag[k] = true;
        }
        let mut remap = vec![usize::MAX; self.node_count()];
        let mut ids = Vec::with_capacity(keep.len());
        let mut sizes = Vec::with_capacity(keep.len());
        for (old, &on) in flag.iter().enumerate() {
            if on {
                remap[old] = ids.len();
                ids.push(self.ids[old].clone());
                sizes.push(self.node_sizes[old]);
            }
        }
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| flag[e.source] && flag[e.target])
            .map(|e| Edge {
                source: remap[e.source],
                target: remap[e.target],
                weight: e.weight,
            })
            .collect();
        let index = ids.iter().cloned().zip(0..).collect();
        // edges stay sorted because remap is monotone
        CitationGraph {
            ids,
            node_sizes: sizes,
            edges,
            index,
        }
    }
}

/// Builds the direct citation network: an edge i -> j for each reference of
/// i that resolves to another record j of the corpus.
pub fn build_graph(
    records: &[PublicationRecord],
    weighting: Weighting,
) -> Result<(CitationGraph, BuildStats)> {
    if records.is_empty() {
        return Err(Error::Empty("corpus has no records".into()));
    }
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(ids.len());
    for (i, r) in records.iter().enumerate() {
        if index.insert(r.id.as_str(), i).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate record id {:?}",
                r.id
            )));
        }
    }

    let mut stats = BuildStats::default();
    let mut edges = Vec::new();
    let mut targets: Vec<usize> = Vec::new();
    let mut seen: HashSet<usize> = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        targets.clear();
        seen.clear();
        for reference in &r.references {
            stats.references_total += 1;
            match index.get(reference.as_str()) {
                None => stats.out_of_corpus += 1,
                Some(&j) if j == i => stats.self_citations += 1,
                Some(&j) => {
                    if seen.insert(j) {
                        targets.push(j);
                    }
                }
            }
        }
        stats.resolved += targets.len();
        let w = match weighting {
            Weighting::Unit => 1.0,
            Weighting::NormalizedOut => 1.0 / targets.len() as f64,
        };
        edges.extend(targets.iter().map(|&j| Edge {
            source: i,
            target: j,
            weight: w,
        }));
    }
    let sizes = vec![1; ids.len()];
    Ok((CitationGraph::from_parts(ids, sizes, edges)?, stats))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Weakly connected components as lists of node indices, each sorted.
pub fn weak_components(graph: &CitationGraph) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in graph.edges() {
        let (a, b) = (find(&mut parent, e.source), find(&mut parent, e.target));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let root = find(&mut parent, v);
        let k = *slot.entry(root).or_insert_with(|| {
            comps.push(Vec::new());
            comps.len() - 1
        });
        comps[k].push(v);
    }
    comps
}

/// Induced subgraph on the largest weakly connected component. Equal-sized
/// components are decided by the lexicographically smallest contained id.
pub fn giant_component(graph: &CitationGraph) -> (CitationGraph, ComponentReport) {
    let comps = weak_components(graph);
    let Some(best) = comps.iter().max_by(|a, b| {
        let min_id = |c: &Vec<usize>| c.iter().map(|&v| graph.id(v)).min();
        a.len()
            .cmp(&b.len())
            .then_with(|| min_id(b).cmp(&min_id(a)))
    }) else {
        return (CitationGraph::default(), ComponentReport::default());
    };
    let sub = graph.induced_subgraph(best);
    let report = ComponentReport {
        component_count: comps.len(),
        giant_size: sub.node_count(),
        giant_edge_count: sub.edge_count(),
        dropped_nodes: graph.node_count() - sub.node_count(),
    };
    (sub, report)
}
