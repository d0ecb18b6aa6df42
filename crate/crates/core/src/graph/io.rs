use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BuildStats, CitationGraph, ComponentReport, Edge};
use crate::error::{Error, Result};

pub const NODES_FILE: &str = "nodes.tsv";
pub const EDGES_FILE: &str = "edges.tsv";
pub const SUMMARY_FILE: &str = "graph_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub total_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<ComponentReport>,
}

impl GraphSummary {
    pub fn of(graph: &CitationGraph) -> Self {
        GraphSummary {
            node_count: graph.node_count(),
            edge_count: graph.edge_count(),
            total_weight: graph.total_weight(),
            build: None,
            components: None,
        }
    }
}

pub fn write_graph<W1: Write, W2: Write>(
    graph: &CitationGraph,
    mut nodes: W1,
    mut edges: W2,
) -> Result<()> {
    writeln!(nodes, "id\tnode_size")?;
    for (id, size) in graph.ids().iter().zip(graph.node_sizes()) {
        writeln!(nodes, "{id}\t{size}")?;
    }
    writeln!(edges, "source_id\ttarget_id\tweight")?;
    for e in graph.edges() {
        writeln!(
            edges,
            "{}\t{}\t{}",
            graph.id(e.source),
            graph.id(e.target),
            e.weight
        )?;
    }
    Ok(())
}

fn data_lines<R: BufRead>(
    reader: R,
    header_first: &str,
) -> impl Iterator<Item = Result<(usize, String)>> + use<'_, R> {
    let mut first = true;
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => {
                let skip = first && l.split('\t').next() == Some(header_first);
                first = false;
                (!skip).then_some(Ok((i + 1, l)))
            }
        })
}

/// Reads a node list and an edge list. Edges naming unknown nodes are an error.
pub fn read_graph<R1: BufRead, R2: BufRead>(nodes: R1, edges: R2) -> Result<CitationGraph> {
    let mut ids = Vec::new();
    let mut sizes = Vec::new();
    for line in data_lines(nodes, "id") {
        let (no, line) = line?;
        let mut cols = line.split('\t');
        let id = cols.next().unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::malformed(no, "empty node id"));
        }
        let size = match cols.next().map(str::trim) {
            None | Some("") => 1,
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| Error::malformed(no, format!("bad node_size {s:?}")))?,
        };
        ids.push(id.to_string());
        sizes.push(size);
    }
    let lookup: std::collections::HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut edge_list = Vec::new();
    for line in data_lines(edges, "source_id") {
        let (no, line) = line?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(Error::malformed(
                no,
                "expected source_id, target_id, weight",
            ));
        }
        let node = |s: &str| {
            lookup
                .get(s.trim())
                .copied()
                .ok_or_else(|| Error::malformed(no, format!("unknown node {s:?}")))
        };
        let weight = match cols.get(2).map(|s| s.trim()) {
            None | Some("") => 1.0,
            Some(w) => w
                .parse::<f64>()
                .map_err(|_| Error::malformed(no, format!("bad weight {w:?}")))?,
        };
        edge_list.push(Edge {
            source: node(cols[0])?,
            target: node(cols[1])?,
            weight,
        });
    }
    CitationGraph::from_parts(ids, sizes, edge_list)
}

pub fn write_graph_dir(graph: &CitationGraph, summary: &GraphSummary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| {
        let p = dir.join(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| Error::io(p, e))
    };
    let mut nodes = create(NODES_FILE)?;
    let mut edges = create(EDGES_FILE)?;
    write_graph(graph, &mut nodes, &mut edges)?;
    nodes.flush()?;
    edges.flush()?;
    let mut s = create(SUMMARY_FILE)?;
    serde_json::to_writer_pretty(&mut s, summary)?;
    s.write_all(b"\n")?;
    s.flush()?;
    Ok(())
}

pub fn read_graph_dir(dir: &Path) -> Result<CitationGraph> {
    let open = |name: &str| {
        let p = dir.join(name);
        File::open(&p)
            .map(BufReader::new)
            .map_err(|e| Error::io(p, e))
    };
    read_graph(open(NODES_FILE)?, open(EDGES_FILE)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_graph() {
        let g = CitationGraph::from_parts(
            vec!["a".into(), "b".into(), "c".into()],
            vec![1, 2, 1],
            [
                Edge {
                    source: 0,
                    target: 1,
                    weight: 1.0 / 3.0,
                },
                Edge {
                    source: 2,
                    target: 0,
                    weight: 0.5,
                },
            ],
        )
        .unwrap();
        let (mut n, mut e) = (Vec::new(), Vec::new());
        write_graph(&g, &mut n, &mut e).unwrap();
        let back = read_graph(n.as_slice(), e.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn unknown_edge_endpoint_is_error() {
        let err =
            read_graph("id\tnode_size\na\t1\n".as_bytes(), "a\tzz\t1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }
}
