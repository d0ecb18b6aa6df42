use super::CitationGraph;

/// Read-only undirected adjacency in CSR layout. `weight(i, j)` is the sum of
/// both directed weights; zero-weight pairs are left out. `self_weight` holds
/// the internal weight of aggregated nodes and is zero on a citation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricAdjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    self_weight: Vec<f64>,
    node_size: Vec<u64>,
}

impl SymmetricAdjacency {
    pub fn from_graph(graph: &CitationGraph) -> Self {
        let pairs = graph.edges().iter().map(|e| (e.source, e.target, e.weight));
        Self::from_pairs(
            graph.node_sizes().to_vec(),
            vec![0.0; graph.node_count()],
            pairs,
        )
    }

    /// Builds the view from (u, v, w) pairs; both orientations of a pair
    /// accumulate into one undirected weight. Pairs with u == v add to the
    /// node's self weight.
    pub fn from_pairs(
        node_size: Vec<u64>,
        mut self_weight: Vec<f64>,
        pairs: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let n = node_size.len();
        assert_eq!(self_weight.len(), n);
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (u, v, w) in pairs {
            if u == v {
                self_weight[u] += w;
            } else {
                list.push((u, v, w));
                list.push((v, u, w));
            }
        }
        list.sort_unstable_by_key(|&(u, v, _)| (u, v));

        let mut offsets = vec![0usize; n + 1];
        let mut neighbors = Vec::with_capacity(list.len());
        let mut weights: Vec<f64> = Vec::with_capacity(list.len());
        let mut k = 0;
        for u in 0..n {
            while k < list.len() && list[k].0 == u {
                let v = list[k].1;
                let mut w = 0.0;
                while k < list.len() && list[k].0 == u && list[k].1 == v {
                    w += list[k].2;
                    k += 1;
                }
                if w > 0.0 {
                    neighbors.push(v);
                    weights.push(w);
                }
            }
            offsets[u + 1] = neighbors.len();
        }
        SymmetricAdjacency {
            offsets,
            neighbors,
            weights,
            self_weight,
            node_size,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_size.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_size.is_empty()
    }

    pub fn node_size(&self, v: usize) -> u64 {
        self.node_size[v]
    }

    pub fn node_sizes(&self) -> &[u64] {
        &self.node_size
    }

    pub fn self_weight(&self, v: usize) -> f64 {
        self.self_weight[v]
    }

    /// Neighbors of `v` (ascending) with their undirected weights.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.neighbors[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.self_weight[i];
        }
        let r = self.offsets[i]..self.offsets[i + 1];
        match self.neighbors[r.clone()].binary_search(&j) {
            Ok(pos) => self.weights[r.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Each undirected pair once, plus self weights.
    pub fn total_weight(&self) -> f64 {
        let between: f64 = (0..self.node_count())
            .flat_map(|u| self.neighbors(u).filter(move |&(v, _)| v > u))
            .map(|(_, w)| w)
            .sum();
        between + self.self_weight.iter().sum::<f64>()
    }

    pub fn total_size(&self) -> u64 {
        self.node_size.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn graph(edges: &[(usize, usize, f64)], n: usize) -> CitationGraph {
        CitationGraph::from_parts(
            (0..n).map(|i| format!("n{i}")).collect(),
            vec![1; n],
            edges.iter().map(|&(s, t, w)| Edge {
                source: s,
                target: t,
                weight: w,
            }),
        )
        .unwrap()
    }

    #[test]
    fn both_directions_sum() {
        let v = graph(&[(0, 1, 0.25), (1, 0, 0.5)], 3).undirected_view();
        assert_eq!(v.weight(0, 1), 0.75);
        assert_eq!(v.weight(1, 0), 0.75);
    }

    #[test]
    fn one_way_and_absent() {
        let v = graph(&[(0, 1, 0.25)], 3).undirected_view();
        assert_eq!(v.weight(1, 0), 0.25);
        assert_eq!(v.weight(0, 2), 0.0);
        assert_eq!(v.degree(2), 0);
    }

    #[test]
    fn total_weight_matches_directed_total() {
        let g = graph(&[(0, 1, 0.25), (1, 0, 0.5), (1, 2, 1.0), (2, 0, 0.125)], 3);
        let v = g.undirected_view();
        assert!((v.total_weight() - g.total_weight()).abs() < 1e-12);
    }
}
