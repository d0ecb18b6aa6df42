//! Cluster-level comparison: topic affinity networks against a random null
//! model, flow matrices between two solutions, and NMI / ARI similarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CitationGraph;
use crate::leiden::UNASSIGNED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowWeight {
    #[default]
    Weighted,
    /// Every citation counts 1 regardless of its weight.
    RawCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullModel {
    /// expected(A, B) = out_A * in_B / W over all ordered pairs, the diagonal
    /// included; rows sum to out_A.
    #[default]
    Configuration,
    /// Same shape, rescaled so the off-diagonal expectations sum to W.
    ExcludeSelf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffinityConfig {
    /// Minimum observed/expected ratio for an edge to be emitted.
    pub threshold: f64,
    /// Optional binomial z-score filter.
    pub min_z: Option<f64>,
    pub flow: FlowWeight,
    pub null_model: NullModel,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        AffinityConfig {
            threshold: 1.0,
            min_z: None,
            flow: FlowWeight::Weighted,
            null_model: NullModel::Configuration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinityNode {
    pub cluster: usize,
    pub size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinityEdge {
    pub source: usize,
    pub target: usize,
    pub observed: f64,
    pub expected: f64,
    pub affinity: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityNetwork {
    pub nodes: Vec<AffinityNode>,
    pub edges: Vec<AffinityEdge>,
    pub config: AffinityConfig,
    /// Total inter-cluster weight W.
    pub total_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Inter-cluster flow totals of a clustered graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFlows {
    pub clusters: Vec<usize>,
    pub sizes: BTreeMap<usize, u64>,
    pub observed: BTreeMap<(usize, usize), f64>,
    pub out: BTreeMap<usize, f64>,
    pub inflow: BTreeMap<usize, f64>,
    pub total: f64,
    pub null_model: NullModel,
    diagonal_mass: f64,
}

impl ClusterFlows {
    /// `assignment[v]` is the cluster of node v or [`UNASSIGNED`].
    pub fn new(
        graph: &CitationGraph,
        assignment: &[usize],
        flow: FlowWeight,
        null_model: NullModel,
    ) -> Result<Self> {
        if assignment.len() != graph.node_count() {
            return Err(Error::InvalidArgument(format!(
                "assignment covers {} nodes, graph has {}",
                assignment.len(),
                graph.node_count()
            )));
        }
        let mut sizes: BTreeMap<usize, u64> = BTreeMap::new();
        for (v, &c) in assignment.iter().enumerate() {
            if c != UNASSIGNED {
                *sizes.entry(c).or_insert(0) += graph.node_sizes()[v];
            }
        }
        let mut observed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in graph.edges() {
            let (a, b) = (assignment[e.source], assignment[e.target]);
            if a == UNASSIGNED || b == UNASSIGNED || a == b {
                continue;
            }
            let w = match flow {
                FlowWeight::Weighted => e.weight,
                FlowWeight::RawCounts => 1.0,
            };
            *observed.entry((a, b)).or_insert(0.0) += w;
        }
        let mut out: BTreeMap<usize, f64> = sizes.keys().map(|&c| (c, 0.0)).collect();
        let mut inflow = out.clone();
        for (&(a, b), &w) in &observed {
            *out.get_mut(&a).unwrap() += w;
            *inflow.get_mut(&b).unwrap() += w;
        }
        let total: f64 = observed.values().sum();
        let diagonal_mass = if total > 0.0 {
            sizes.keys().map(|c| out[c] * inflow[c]).sum::<f64>() / total
        } else {
            0.0
        };
        Ok(ClusterFlows {
            clusters: sizes.keys().copied().collect(),
            sizes,
            observed,
            out,
            inflow,
            total,
            null_model,
            diagonal_mass,
        })
    }

    pub fn observed(&self, a: usize, b: usize) -> f64 {
        self.observed.get(&(a, b)).copied().unwrap_or(0.0)
    }

    /// Null-model expectation for the ordered pair (a, b); zero when W = 0.
    pub fn expected(&self, a: usize, b: usize) -> f64 {
        if self.total <= 0.0 {
            return 0.0;
        }
        let base = self.out[&a] * self.inflow[&b] / self.total;
        match self.null_model {
            NullModel::Configuration => base,
            NullModel::ExcludeSelf => {
                if a == b {
                    0.0
                } else {
                    base * self.total / (self.total - self.diagonal_mass)
                }
            }
        }
    }
}

/// Cluster affinity network: an edge A -> B for every pair whose observed
/// citation flow reaches `threshold` times its null-model expectation.
pub fn affinity_network(
    graph: &CitationGraph,
    assignment: &[usize],
    config: &AffinityConfig,
) -> Result<AffinityNetwork> {
    let flows = ClusterFlows::new(graph, assignment, config.flow, config.null_model)?;
    let nodes = flows
        .sizes
        .iter()
        .map(|(&cluster, &size)| AffinityNode { cluster, size })
        .collect();
    if flows.total <= 0.0 {
        return Ok(AffinityNetwork {
            nodes,
            edges: Vec::new(),
            config: *config,
            total_weight: 0.0,
            warning: Some("no inter-cluster citation weight; affinity network is empty".into()),
        });
    }
    let mut edges = Vec::new();
    for (&(a, b), &observed) in &flows.observed {
        let expected = flows.expected(a, b);
        if expected <= 0.0 {
            continue;
        }
        let affinity = observed / expected;
        let var = expected * (1.0 - expected / flows.total);
        let z = if var > 0.0 {
            (observed - expected) / var.sqrt()
        } else {
            0.0
        };
        if affinity >= config.threshold && config.min_z.is_none_or(|m| z >= m) {
            edges.push(AffinityEdge {
                source: a,
                target: b,
                observed,
                expected,
                affinity,
                z,
            });
        }
    }
    Ok(AffinityNetwork {
        nodes,
        edges,
        config: *config,
        total_weight: flows.total,
        warning: None,
    })
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl AffinityNetwork {
    pub fn to_graphml(&self, prefix: &str) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        s.push_str("  <key id=\"size\" for=\"node\" attr.name=\"size\" attr.type=\"long\"/>\n");
        for k in ["observed", "expected", "affinity", "z"] {
            let _ = writeln!(
                s,
                "  <key id=\"{k}\" for=\"edge\" attr.name=\"{k}\" attr.type=\"double\"/>"
            );
        }
        s.push_str("  <graph id=\"affinity\" edgedefault=\"directed\">\n");
        for n in &self.nodes {
            let _ = writeln!(
                s,
                "    <node id=\"{}\"><data key=\"size\">{}</data></node>",
                xml_escape(&format!("{prefix}{}", n.cluster)),
                n.size
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "    <edge source=\"{}\" target=\"{}\"><data key=\"observed\">{}</data><data key=\"expected\">{}</data><data key=\"affinity\">{}</data><data key=\"z\">{}</data></edge>",
                xml_escape(&format!("{prefix}{}", e.source)),
                xml_escape(&format!("{prefix}{}", e.target)),
                e.observed,
                e.expected,
                e.affinity,
                e.z
            );
        }
        s.push_str("  </graph>\n</graphml>\n");
        s
    }

    pub fn to_dot(&self, prefix: &str) -> String {
        let mut s = String::from("digraph affinity {\n");
        for n in &self.nodes {
            let _ = writeln!(s, "  \"{prefix}{}\" [size={}];", n.cluster, n.size);
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  \"{prefix}{}\" -> \"{prefix}{}\" [weight={}, affinity={}];",
                e.source, e.target, e.observed, e.affinity
            );
        }
        s.push_str("}\n");
        s
    }
}

/// Reads `pub_id<TAB>cluster_id` rows; negative cluster ids mean unassigned.
pub fn read_membership<R: BufRead>(reader: R) -> Result<Vec<(String, Option<usize>)>> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, c) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(no, "expected pub_id<TAB>cluster_id"))?;
        let (id, c) = (id.trim(), c.trim());
        if out.is_empty() && id == "pub_id" {
            continue;
        }
        if id.is_empty() {
            return Err(Error::malformed(no, "empty pub_id"));
        }
        let cluster = c
            .parse::<i64>()
            .map_err(|_| Error::malformed(no, format!("bad cluster id {c:?}")))?;
        if !seen.insert(id.to_string()) {
            return Err(Error::malformed(no, format!("duplicate pub_id {id}")));
        }
        out.push((id.to_string(), (cluster >= 0).then_some(cluster as usize)));
    }
    Ok(out)
}

/// Shared-document counts between two solutions. Documents assigned in only
/// one solution go to the synthetic unassigned column (`to_unassigned`, per
/// row of A) or row (`from_unassigned`, per column of B).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub rows: Vec<usize>,
    pub columns: Vec<usize>,
    pub cells: Vec<Vec<u64>>,
    pub to_unassigned: Vec<u64>,
    pub from_unassigned: Vec<u64>,
}

pub fn flow_matrix(a: &[(String, Option<usize>)], b: &[(String, Option<usize>)]) -> FlowMatrix {
    let a_map: HashMap<&str, usize> = a
        .iter()
        .filter_map(|(d, c)| c.map(|c| (d.as_str(), c)))
        .collect();
    let b_map: HashMap<&str, usize> = b
        .iter()
        .filter_map(|(d, c)| c.map(|c| (d.as_str(), c)))
        .collect();
    let rows: Vec<usize> = a_map
        .values()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let columns: Vec<usize> = b_map
        .values()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let row_ix: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let col_ix: HashMap<usize, usize> = columns.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut cells = vec![vec![0u64; columns.len()]; rows.len()];
    let mut to_unassigned = vec![0u64; rows.len()];
    let mut from_unassigned = vec![0u64; columns.len()];
    for (&doc, &ca) in &a_map {
        match b_map.get(doc) {
            Some(&cb) => cells[row_ix[&ca]][col_ix[&cb]] += 1,
            None => to_unassigned[row_ix[&ca]] += 1,
        }
    }
    for (&doc, &cb) in &b_map {
        if !a_map.contains_key(doc) {
            from_unassigned[col_ix[&cb]] += 1;
        }
    }
    FlowMatrix {
        rows,
        columns,
        cells,
        to_unassigned,
        from_unassigned,
    }
}

impl FlowMatrix {
    pub fn transpose(&self) -> FlowMatrix {
        let cells = (0..self.columns.len())
            .map(|j| self.cells.iter().map(|row| row[j]).collect())
            .collect();
        FlowMatrix {
            rows: self.columns.clone(),
            columns: self.rows.clone(),
            cells,
            to_unassigned: self.from_unassigned.clone(),
            from_unassigned: self.to_unassigned.clone(),
        }
    }

    pub fn shared(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.columns.len())
            .map(|j| self.cells.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Sankey-style export: labelled rows/columns, the matrix, and one link
    /// per non-empty cell (unassigned flows included).
    pub fn export(&self, name_a: &str, name_b: &str) -> FlowExport {
        let row_label = |c: usize| format!("{name_a}:C{c}");
        let col_label = |c: usize| format!("{name_b}:C{c}");
        let unassigned_a = format!("{name_a}:unassigned");
        let unassigned_b = format!("{name_b}:unassigned");
        let mut links = Vec::new();
        for (i, &ra) in self.rows.iter().enumerate() {
            for (j, &cb) in self.columns.iter().enumerate() {
                if self.cells[i][j] > 0 {
                    links.push(FlowLink {
                        source: row_label(ra),
                        target: col_label(cb),
                        value: self.cells[i][j],
                    });
                }
            }
            if self.to_unassigned[i] > 0 {
                links.push(FlowLink {
                    source: row_label(ra),
                    target: unassigned_b.clone(),
                    value: self.to_unassigned[i],
                });
            }
        }
        for (j, &cb) in self.columns.iter().enumerate() {
            if self.from_unassigned[j] > 0 {
                links.push(FlowLink {
                    source: unassigned_a.clone(),
                    target: col_label(cb),
                    value: self.from_unassigned[j],
                });
            }
        }
        FlowExport {
            rows: self.rows.iter().map(|&c| row_label(c)).collect(),
            columns: self.columns.iter().map(|&c| col_label(c)).collect(),
            cells: self.cells.clone(),
            row_totals: self.row_sums(),
            column_totals: self.column_sums(),
            to_unassigned: self.to_unassigned.clone(),
            from_unassigned: self.from_unassigned.clone(),
            links,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowLink {
    pub source: String,
    pub target: String,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowExport {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<u64>>,
    pub row_totals: Vec<u64>,
    pub column_totals: Vec<u64>,
    pub to_unassigned: Vec<u64>,
    pub from_unassigned: Vec<u64>,
    pub links: Vec<FlowLink>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub nmi: f64,
    pub ari: f64,
    pub shared: u64,
}

fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// NMI (geometric-mean normalization) and adjusted Rand index over the
/// documents shared by both solutions.
pub fn partition_similarity(flow: &FlowMatrix) -> Result<Similarity> {
    let shared = flow.shared();
    if shared == 0 {
        return Err(Error::Empty("solutions share no assigned document".into()));
    }
    let n = shared as f64;
    let rows = flow.row_sums();
    let cols = flow.column_sums();
    let h_a = entropy(rows.iter().copied(), n);
    let h_b = entropy(cols.iter().copied(), n);
    let mut mi = 0.0;
    for (i, row) in flow.cells.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    let nmi = match (h_a == 0.0, h_b == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (mi / (h_a * h_b).sqrt()).clamp(0.0, 1.0),
    };

    let index: f64 = flow.cells.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(shared).max(f64::MIN_POSITIVE);
    let max_index = (sum_a + sum_b) / 2.0;
    let ari = if (max_index - expected).abs() < f64::EPSILON {
        1.0
    } else {
        (index - expected) / (max_index - expected)
    };
    Ok(Similarity { nmi, ari, shared })
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}
