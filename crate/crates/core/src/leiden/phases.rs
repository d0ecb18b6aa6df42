//! The three Leiden phases: fast local moving, refinement and aggregation.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::quality::renumber;
use crate::error::{Error, Result};
use crate::graph::SymmetricAdjacency;

/// Gains at or below this are treated as zero; keeps rounding noise from
/// triggering moves that cycle.
pub(crate) const GAIN_EPS: f64 = 1e-12;

/// Sparse accumulator of weights from one node to neighbouring clusters.
struct ClusterWeights {
    weight: Vec<f64>,
    touched: Vec<usize>,
}

impl ClusterWeights {
    fn new(n: usize) -> Self {
        ClusterWeights {
            weight: vec![0.0; n],
            touched: Vec::new(),
        }
    }

    // view weights are strictly positive, so a zero slot is untouched
    fn add(&mut self, c: usize, w: f64) {
        if self.weight[c] == 0.0 {
            self.touched.push(c);
        }
        self.weight[c] += w;
    }

    fn clear(&mut self) {
        for &c in &self.touched {
            self.weight[c] = 0.0;
        }
        self.touched.clear();
    }
}

fn shuffled_nodes<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Queue-based local moving. Nodes are visited in random order and each
/// moves to the cluster of largest positive gain (a fresh cluster included);
/// after a move, neighbours outside the new cluster are queued again.
/// `membership` is relabelled densely. Returns true when any node moved.
pub fn local_move_phase<R: Rng + ?Sized>(
    view: &SymmetricAdjacency,
    membership: &mut Vec<usize>,
    gamma: f64,
    rng: &mut R,
) -> bool {
    let n = view.node_count();
    assert_eq!(membership.len(), n, "membership must cover every node");
    if n == 0 {
        return false;
    }
    let (dense, k) = renumber(membership);
    *membership = dense;

    let mut size = vec![0u64; n];
    let mut count = vec![0usize; n];
    for v in 0..n {
        size[membership[v]] += view.node_size(v);
        count[membership[v]] += 1;
    }
    let mut empty: Vec<usize> = (k..n).rev().collect();

    let mut queue: VecDeque<usize> = shuffled_nodes(n, rng).into();
    let mut queued = vec![true; n];
    let mut acc = ClusterWeights::new(n);
    let mut moved_any = false;

    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        let current = membership[v];
        let s_v = view.node_size(v) as f64;

        for (u, w) in view.neighbors(v) {
            acc.add(membership[u], w);
        }
        let stay = acc.weight[current] - gamma * s_v * (size[current] - view.node_size(v)) as f64;

        let mut best = current;
        let mut best_gain = f64::NEG_INFINITY;
        for &c in &acc.touched {
            if c == current {
                continue;
            }
            let gain = acc.weight[c] - gamma * s_v * size[c] as f64 - stay;
            if gain > best_gain || (gain == best_gain && c < best) {
                best = c;
                best_gain = gain;
            }
        }
        if count[current] > 1 {
            if let Some(&e) = empty.last() {
                let gain = -stay;
                if gain > best_gain || (gain == best_gain && e < best) {
                    best = e;
                    best_gain = gain;
                }
            }
        }
        acc.clear();

        if best == current || best_gain <= GAIN_EPS {
            continue;
        }
        if empty.last() == Some(&best) {
            empty.pop();
        }
        size[current] -= view.node_size(v);
        count[current] -= 1;
        if count[current] == 0 {
            empty.push(current);
        }
        size[best] += view.node_size(v);
        count[best] += 1;
        membership[v] = best;
        moved_any = true;

        for (u, _) in view.neighbors(v) {
            if !queued[u] && membership[u] != best {
                queued[u] = true;
                queue.push_back(u);
            }
        }
    }
    let (dense, _) = renumber(membership);
    *membership = dense;
    moved_any
}

/// Refines `partition` starting from singletons. A node merges only with
/// refined clusters inside its own community, and only when both it and the
/// target are well connected to the rest of that community. Targets with
/// non-negative gain are drawn with probability proportional to
/// `exp(gain / theta)`; `theta == 0` picks uniformly among the best.
pub fn refine_phase<R: Rng + ?Sized>(
    view: &SymmetricAdjacency,
    partition: &[usize],
    gamma: f64,
    theta: f64,
    rng: &mut R,
) -> Vec<usize> {
    let n = view.node_count();
    assert_eq!(partition.len(), n, "partition must cover every node");
    let (community, k) = renumber(partition);

    let mut community_size = vec![0u64; k];
    for v in 0..n {
        community_size[community[v]] += view.node_size(v);
    }

    let mut refined: Vec<usize> = (0..n).collect();
    let mut rsize: Vec<u64> = view.node_sizes().to_vec();
    let mut rcount = vec![1usize; n];
    // weight from each refined cluster to the rest of its community
    let mut external: Vec<f64> = (0..n)
        .map(|v| {
            view.neighbors(v)
                .filter(|&(u, _)| community[u] == community[v])
                .map(|(_, w)| w)
                .sum()
        })
        .collect();

    let well_connected = |ext: f64, s: u64, total: u64| -> bool {
        ext + GAIN_EPS >= gamma * s as f64 * (total - s) as f64
    };

    let mut acc = ClusterWeights::new(n);
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for v in shuffled_nodes(n, rng) {
        if rcount[refined[v]] != 1 {
            continue;
        }
        let c = community[v];
        let s_v = view.node_size(v);
        let total = community_size[c];
        if !well_connected(external[v], s_v, total) {
            continue;
        }

        for (u, w) in view.neighbors(v) {
            if community[u] == c {
                acc.add(refined[u], w);
            }
        }
        candidates.clear();
        candidates.push((v, 0.0));
        for &r in &acc.touched {
            if r == refined[v] || !well_connected(external[r], rsize[r], total) {
                continue;
            }
            let gain = acc.weight[r] - gamma * s_v as f64 * rsize[r] as f64;
            if gain >= 0.0 {
                candidates.push((r, gain));
            }
        }
        candidates.sort_unstable_by_key(|&(r, _)| r);

        let chosen = sample_target(&candidates, theta, rng);
        if chosen != refined[v] {
            let w_vr = acc.weight[chosen];
            external[chosen] += external[v] - 2.0 * w_vr;
            rsize[chosen] += s_v;
            rcount[chosen] += 1;
            rcount[refined[v]] = 0;
            refined[v] = chosen;
        }
        acc.clear();
    }
    renumber(&refined).0
}

fn sample_target<R: Rng + ?Sized>(candidates: &[(usize, f64)], theta: f64, rng: &mut R) -> usize {
    let max = candidates
        .iter()
        .map(|&(_, g)| g)
        .fold(f64::NEG_INFINITY, f64::max);
    if theta <= 0.0 {
        let best: Vec<usize> = candidates
            .iter()
            .filter(|&&(_, g)| g == max)
            .map(|&(r, _)| r)
            .collect();
        return best[rng.random_range(0..best.len())];
    }
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&(_, g)| ((g - max) / theta).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (&(r, _), w) in candidates.iter().zip(&weights) {
        if x < *w {
            return r;
        }
        x -= w;
    }
    candidates[candidates.len() - 1].0
}

/// Collapses each refined cluster into one node. Node sizes and internal
/// weight are summed, inter-cluster weights accumulated; the returned
/// membership puts every aggregate node into its community of `partition`.
pub fn aggregate(
    view: &SymmetricAdjacency,
    refined: &[usize],
    partition: &[usize],
) -> Result<(SymmetricAdjacency, Vec<usize>)> {
    let n = view.node_count();
    if refined.len() != n || partition.len() != n {
        return Err(Error::InvalidArgument(
            "refined and unrefined partitions must cover every node".into(),
        ));
    }
    let (refined, k) = renumber(refined);
    let (partition, _) = renumber(partition);

    let mut parent = vec![usize::MAX; k];
    let mut size = vec![0u64; k];
    let mut self_weight = vec![0.0; k];
    for v in 0..n {
        let r = refined[v];
        if parent[r] == usize::MAX {
            parent[r] = partition[v];
        } else if parent[r] != partition[v] {
            return Err(Error::Invariant(format!(
                "refined cluster {r} straddles communities {} and {}",
                parent[r], partition[v]
            )));
        }
        size[r] += view.node_size(v);
        self_weight[r] += view.self_weight(v);
    }

    let mut pairs = Vec::new();
    for u in 0..n {
        for (v, w) in view.neighbors(u) {
            if v > u {
                pairs.push((refined[u], refined[v], w));
            }
        }
    }
    let agg = SymmetricAdjacency::from_pairs(size, self_weight, pairs);
    Ok((agg, renumber(&parent).0))
}

/// Splits every cluster into the connected components it induces.
pub(crate) fn split_disconnected(view: &SymmetricAdjacency, membership: &[usize]) -> Vec<usize> {
    let n = view.node_count();
    let mut out = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if out[s] != usize::MAX {
            continue;
        }
        out[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for (v, _) in view.neighbors(u) {
                if out[v] == usize::MAX && membership[v] == membership[s] {
                    out[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    out
}
