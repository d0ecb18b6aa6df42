use crate::error::{Error, Result};
use crate::graph::SymmetricAdjacency;

/// Marks a node without a cluster in an assignment slice.
pub const UNASSIGNED: usize = usize::MAX;

/// Constant Potts Model value of a membership vector:
/// `sum_c [ w_c - gamma * S_c * (S_c - 1) / 2 ]`, where `w_c` is the
/// undirected weight inside `c` (self weights included) and `S_c` the summed
/// node size.
pub fn cpm_quality(view: &SymmetricAdjacency, membership: &[usize], gamma: f64) -> Result<f64> {
    let n = view.node_count();
    if membership.len() < n {
        return Err(Error::InvalidArgument(format!(
            "node {} is not assigned to a cluster",
            membership.len()
        )));
    }
    if membership.len() > n {
        return Err(Error::InvalidArgument(format!(
            "membership covers {} nodes, graph has {n}",
            membership.len()
        )));
    }
    if let Some(v) = membership.iter().position(|&c| c == UNASSIGNED) {
        return Err(Error::InvalidArgument(format!(
            "node {v} is not assigned to a cluster"
        )));
    }
    let (dense, k) = renumber(membership);
    Ok(quality_dense(view, &dense, k, gamma))
}

/// Quality for a membership whose ids are already dense in `0..k`.
pub(crate) fn quality_dense(
    view: &SymmetricAdjacency,
    membership: &[usize],
    k: usize,
    gamma: f64,
) -> f64 {
    let mut inside = vec![0.0f64; k];
    let mut size = vec![0u64; k];
    for u in 0..view.node_count() {
        let c = membership[u];
        size[c] += view.node_size(u);
        inside[c] += view.self_weight(u);
        for (v, w) in view.neighbors(u) {
            if v > u && membership[v] == c {
                inside[c] += w;
            }
        }
    }
    inside
        .iter()
        .zip(&size)
        .map(|(&w, &s)| {
            let s = s as f64;
            w - gamma * s * (s - 1.0) / 2.0
        })
        .sum()
}

/// Relabels ids densely in order of first appearance.
pub(crate) fn renumber(membership: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let dense = membership
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveTarget {
    Cluster(usize),
    /// A fresh, empty cluster.
    Empty,
}

/// Change in CPM quality when node `v` leaves its cluster for `target`.
/// Moving a node into its own cluster is a no-op and yields 0.
pub fn move_gain(
    view: &SymmetricAdjacency,
    membership: &[usize],
    v: usize,
    target: MoveTarget,
    gamma: f64,
) -> f64 {
    let current = membership[v];
    let target = match target {
        MoveTarget::Cluster(c) if c == current => return 0.0,
        t => t,
    };
    let s_v = view.node_size(v) as f64;

    let summed_size = |c: usize| -> f64 {
        membership
            .iter()
            .enumerate()
            .filter(|&(u, &m)| u != v && m == c)
            .map(|(u, _)| view.node_size(u) as f64)
            .sum()
    };
    let weight_to = |c: usize| -> f64 {
        view.neighbors(v)
            .filter(|&(u, _)| membership[u] == c)
            .map(|(_, w)| w)
            .sum()
    };

    let stay = weight_to(current) - gamma * s_v * summed_size(current);
    let join = match target {
        MoveTarget::Empty => 0.0,
        MoveTarget::Cluster(c) => weight_to(c) - gamma * s_v * summed_size(c),
    };
    join - stay
}
