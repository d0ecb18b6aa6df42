//! Leiden community detection under the Constant Potts Model, with
//! multi-start selection and discarding of undersized clusters.

mod phases;
mod quality;

pub use phases::{aggregate, local_move_phase, refine_phase};
pub use quality::{cpm_quality, move_gain, MoveTarget, UNASSIGNED};

use std::borrow::Cow;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CitationGraph, SymmetricAdjacency};
use phases::split_disconnected;
use quality::{quality_dense, renumber};

/// How random starts and iterations nest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartScheme {
    /// Every start runs up to `iterations` Leiden iterations from singletons;
    /// the best final partition wins.
    #[default]
    IndependentStarts,
    /// Each of up to `iterations` rounds runs `random_starts` single Leiden
    /// iterations from the incumbent and keeps the best.
    IteratedBest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpmParams {
    pub gamma: f64,
    pub iterations: usize,
    pub random_starts: usize,
    pub seed: u64,
    pub theta: f64,
    pub min_cluster_size: u64,
    #[serde(default)]
    pub scheme: RestartScheme,
}

impl Default for CpmParams {
    fn default() -> Self {
        CpmParams {
            gamma: 1.0,
            iterations: 100,
            random_starts: 10,
            seed: 0,
            theta: 0.01,
            min_cluster_size: 1,
            scheme: RestartScheme::IndependentStarts,
        }
    }
}

impl CpmParams {
    pub fn with_gamma(gamma: f64) -> Self {
        CpmParams {
            gamma,
            ..CpmParams::default()
        }
    }

    /// Resolution and size threshold presets sized for a corpus of roughly
    /// 25k publications with out-normalized weights. Not calibrated values.
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Coarse => CpmParams {
                gamma: 2e-5,
                min_cluster_size: 400,
                ..CpmParams::default()
            },
            Preset::Fine => CpmParams {
                gamma: 8e-5,
                min_cluster_size: 350,
                ..CpmParams::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "theta must be non-negative, got {}",
                self.theta
            )));
        }
        if self.iterations == 0 || self.random_starts == 0 || self.min_cluster_size == 0 {
            return Err(Error::InvalidArgument(
                "iterations, random_starts and min_cluster_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Cluster assignment with ids dense from 0 and ordered by descending size
/// (equal sizes: the cluster holding the smaller node index first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub cluster_sizes: Vec<u64>,
    pub quality: f64,
}

impl Partition {
    pub fn new(view: &SymmetricAdjacency, membership: &[usize], gamma: f64) -> Result<Self> {
        let quality = cpm_quality(view, membership, gamma)?;
        let (dense, k) = renumber(membership);
        let mut sizes = vec![0u64; k];
        for (v, &c) in dense.iter().enumerate() {
            sizes[c] += view.node_size(v);
        }
        // first appearance order already breaks ties by smallest node index
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let mut rank = vec![0; k];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        Ok(Partition {
            assignment: dense.iter().map(|&c| rank[c]).collect(),
            cluster_sizes: order.iter().map(|&c| sizes[c]).collect(),
            quality,
        })
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_sizes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartLog {
    pub start: usize,
    pub seed: u64,
    /// CPM quality after each iteration.
    pub qualities: Vec<f64>,
    pub final_quality: f64,
}

impl StartLog {
    pub fn iterations(&self) -> usize {
        self.qualities.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub starts: Vec<StartLog>,
    pub best_start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSolution {
    /// Full partition before discarding; clusters `retained..` are discarded.
    pub partition: Partition,
    pub retained: usize,
    pub discarded_nodes: Vec<usize>,
    pub discarded_share: f64,
    pub params: CpmParams,
    pub run_log: RunLog,
}

impl ClusterSolution {
    /// Cluster of `node`, or `None` when it sits in a discarded cluster.
    pub fn cluster_of(&self, node: usize) -> Option<usize> {
        let c = self.partition.assignment[node];
        (c < self.retained).then_some(c)
    }

    /// Assignment with discarded nodes mapped to [`UNASSIGNED`].
    pub fn retained_assignment(&self) -> Vec<usize> {
        self.partition
            .assignment
            .iter()
            .map(|&c| if c < self.retained { c } else { UNASSIGNED })
            .collect()
    }

    pub fn retained_sizes(&self) -> &[u64] {
        &self.partition.cluster_sizes[..self.retained]
    }

    /// Writes `pub_id<TAB>cluster_id`, with -1 for discarded nodes.
    pub fn write_tsv<W: Write>(&self, graph: &CitationGraph, mut out: W) -> Result<()> {
        writeln!(out, "pub_id\tcluster_id")?;
        for (v, id) in graph.ids().iter().enumerate() {
            match self.cluster_of(v) {
                Some(c) => writeln!(out, "{id}\t{c}")?,
                None => writeln!(out, "{id}\t-1")?,
            }
        }
        Ok(())
    }

    pub fn metadata(&self) -> ClusterMetadata {
        ClusterMetadata {
            params: self.params.clone(),
            restart_scheme_note: match self.params.scheme {
                RestartScheme::IndependentStarts => {
                    "each start runs up to `iterations` Leiden iterations from singletons; best quality wins"
                }
                RestartScheme::IteratedBest => {
                    "each round runs `random_starts` Leiden iterations from the incumbent; best quality wins"
                }
            }
            .to_string(),
            quality: self.partition.quality,
            cluster_count: self.partition.cluster_count(),
            retained_clusters: self.retained,
            retained_sizes: self.retained_sizes().to_vec(),
            discarded_nodes: self.discarded_nodes.len(),
            discarded_share: self.discarded_share,
            best_start: self.run_log.best_start,
            starts: self
                .run_log
                .starts
                .iter()
                .map(|s| StartSummary {
                    start: s.start,
                    seed: s.seed,
                    iterations: s.iterations(),
                    final_quality: s.final_quality,
                })
                .collect(),
            wall_time_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: usize,
    pub seed: u64,
    pub iterations: usize,
    pub final_quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetadata {
    pub params: CpmParams,
    pub restart_scheme_note: String,
    pub quality: f64,
    pub cluster_count: usize,
    pub retained_clusters: usize,
    pub retained_sizes: Vec<u64>,
    pub discarded_nodes: usize,
    pub discarded_share: f64,
    pub best_start: usize,
    pub starts: Vec<StartSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// One Leiden iteration: local moving, refinement and aggregation repeated
/// until every community is a single aggregate node. Updates `membership`
/// in place (dense ids by first appearance).
pub fn leiden_iteration<R: rand::Rng + ?Sized>(
    view: &SymmetricAdjacency,
    membership: &mut Vec<usize>,
    gamma: f64,
    theta: f64,
    rng: &mut R,
) -> Result<()> {
    let n = view.node_count();
    let mut level: Cow<'_, SymmetricAdjacency> = Cow::Borrowed(view);
    let mut partition = renumber(membership).0;
    let mut node_map: Vec<usize> = (0..n).collect();

    loop {
        local_move_phase(&level, &mut partition, gamma, rng);
        let communities = partition.iter().max().map_or(0, |&m| m + 1);
        if communities == level.node_count() {
            break;
        }
        let mut refined = refine_phase(&level, &partition, gamma, theta, rng);
        if refined.iter().max().map_or(0, |&m| m + 1) == level.node_count() {
            // refinement merged nothing; fall back to the connected parts of
            // each community so the level still shrinks
            refined = split_disconnected(&level, &partition);
            if refined.iter().max().map_or(0, |&m| m + 1) == level.node_count() {
                partition = refined;
                break;
            }
        }
        let (agg, init) = aggregate(&level, &refined, &partition)?;
        let (refined_dense, _) = renumber(&refined);
        for slot in node_map.iter_mut() {
            *slot = refined_dense[*slot];
        }
        level = Cow::Owned(agg);
        partition = init;
    }

    let flat: Vec<usize> = node_map.iter().map(|&l| partition[l]).collect();
    *membership = renumber(&flat).0;
    Ok(())
}

fn start_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

fn run_start(
    view: &SymmetricAdjacency,
    params: &CpmParams,
    start: usize,
) -> Result<(Vec<usize>, StartLog)> {
    let seed = start_seed(params.seed, start);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership: Vec<usize> = (0..view.node_count()).collect();
    let mut qualities = Vec::new();
    for _ in 0..params.iterations {
        let previous = membership.clone();
        leiden_iteration(view, &mut membership, params.gamma, params.theta, &mut rng)?;
        let k = membership.iter().max().map_or(0, |&m| m + 1);
        qualities.push(quality_dense(view, &membership, k, params.gamma));
        if membership == previous {
            break;
        }
    }
    let final_quality = *qualities.last().unwrap_or(&0.0);
    Ok((
        membership,
        StartLog {
            start,
            seed,
            qualities,
            final_quality,
        },
    ))
}

fn pick_best(results: &[(Vec<usize>, StartLog)]) -> usize {
    let mut best = 0;
    for (i, (_, log)) in results.iter().enumerate().skip(1) {
        if log.final_quality > results[best].1.final_quality {
            best = i;
        }
    }
    best
}

fn run_independent(view: &SymmetricAdjacency, params: &CpmParams) -> Result<(Vec<usize>, RunLog)> {
    let results: Vec<(Vec<usize>, StartLog)> = (0..params.random_starts)
        .into_par_iter()
        .map(|s| run_start(view, params, s))
        .collect::<Result<_>>()?;
    let best = pick_best(&results);
    let membership = results[best].0.clone();
    let starts = results.into_iter().map(|(_, log)| log).collect();
    Ok((
        membership,
        RunLog {
            starts,
            best_start: best,
        },
    ))
}

fn run_iterated(view: &SymmetricAdjacency, params: &CpmParams) -> Result<(Vec<usize>, RunLog)> {
    let mut incumbent: Vec<usize> = (0..view.node_count()).collect();
    let mut incumbent_q = quality_dense(view, &incumbent, incumbent.len(), params.gamma);
    let mut qualities = Vec::new();
    for round in 0..params.iterations {
        let results: Vec<(Vec<usize>, StartLog)> = (0..params.random_starts)
            .into_par_iter()
            .map(|s| {
                let seed = start_seed(params.seed, round * params.random_starts + s);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut m = incumbent.clone();
                leiden_iteration(view, &mut m, params.gamma, params.theta, &mut rng)?;
                let k = m.iter().max().map_or(0, |&x| x + 1);
                let q = quality_dense(view, &m, k, params.gamma);
                Ok((
                    m,
                    StartLog {
                        start: s,
                        seed,
                        qualities: vec![q],
                        final_quality: q,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        let best = pick_best(&results);
        let (m, log) = &results[best];
        let improved = log.final_quality > incumbent_q && *m != incumbent;
        if improved {
            incumbent = m.clone();
            incumbent_q = log.final_quality;
        }
        qualities.push(incumbent_q);
        if !improved {
            break;
        }
    }
    Ok((
        incumbent,
        RunLog {
            starts: vec![StartLog {
                start: 0,
                seed: params.seed,
                qualities,
                final_quality: incumbent_q,
            }],
            best_start: 0,
        },
    ))
}

/// Clusters the symmetric view of a citation graph.
pub fn cluster(graph: &CitationGraph, params: &CpmParams) -> Result<ClusterSolution> {
    cluster_view(&graph.undirected_view(), params)
}

/// Multi-start Leiden on an undirected view, followed by discarding clusters
/// below `min_cluster_size`. Deterministic for a given (view, params): starts
/// run in parallel but the best is chosen by quality, ties to the lowest start.
pub fn cluster_view(view: &SymmetricAdjacency, params: &CpmParams) -> Result<ClusterSolution> {
    params.validate()?;
    if view.is_empty() {
        return Err(Error::Empty("cannot cluster an empty graph".into()));
    }
    let (membership, run_log) = match params.scheme {
        RestartScheme::IndependentStarts => run_independent(view, params)?,
        RestartScheme::IteratedBest => run_iterated(view, params)?,
    };
    let partition = Partition::new(view, &membership, params.gamma)?;
    let retained = partition
        .cluster_sizes
        .iter()
        .take_while(|&&s| s >= params.min_cluster_size)
        .count();
    let discarded_nodes: Vec<usize> = partition
        .assignment
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c >= retained)
        .map(|(v, _)| v)
        .collect();
    let discarded_mass: u64 = discarded_nodes.iter().map(|&v| view.node_size(v)).sum();
    let discarded_share = discarded_mass as f64 / view.total_size() as f64;

    Ok(ClusterSolution {
        partition,
        retained,
        discarded_nodes,
        discarded_share,
        params: params.clone(),
        run_log,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub connected: bool,
    pub offending: Vec<usize>,
}

/// Checks that every cluster induces a connected subgraph of `view`. Nodes
/// marked [`UNASSIGNED`] are ignored.
pub fn connectivity_check(view: &SymmetricAdjacency, assignment: &[usize]) -> ConnectivityReport {
    let n = view.node_count();
    let mut seen = vec![false; n];
    let mut visited_cluster = std::collections::BTreeSet::new();
    let mut offending = std::collections::BTreeSet::new();
    let mut stack = Vec::new();
    for s in 0..n {
        let c = assignment[s];
        if c == UNASSIGNED || seen[s] {
            continue;
        }
        if !visited_cluster.insert(c) {
            // a second unvisited piece of a cluster already traversed
            offending.insert(c);
        }
        seen[s] = true;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for (v, _) in view.neighbors(u) {
                if !seen[v] && assignment[v] == c {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    ConnectivityReport {
        connected: offending.is_empty(),
        offending: offending.into_iter().collect(),
    }
}
