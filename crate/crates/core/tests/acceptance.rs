//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topomap::analysis::{
    affinity_network, flow_matrix, AffinityConfig, ClusterFlows, FlowWeight, NullModel,
};
use topomap::corpus::{filter_corpus, ingest_path, CorpusFilter, InputFormat};
use topomap::graph::{build_graph, CitationGraph, Edge, SymmetricAdjacency, Weighting};
use topomap::labeling::{nmi_score, Contingency, Normalization};
use topomap::leiden::{
    cluster, cluster_view, connectivity_check, cpm_quality, move_gain, CpmParams, MoveTarget,
};
use topomap::projection::{categorize_microfield, coverage_curve, smallest_k, MicrofieldCategory};
use topomap::synthetic::{citation_benchmark, erdos_renyi, planted_partition};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Every ordered pair of node sets as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            rec(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    rec(&mut prefix, 0, n, &mut out);
    out
}

/// CPM straight from the definition over an undirected pair list.
fn cpm_oracle(
    sizes: &[u64],
    self_weight: &[f64],
    pairs: &[(usize, usize, f64)],
    membership: &[usize],
    gamma: f64,
) -> f64 {
    let mut inside: BTreeMap<usize, f64> = BTreeMap::new();
    let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
    for (v, &c) in membership.iter().enumerate() {
        *inside.entry(c).or_insert(0.0) += self_weight[v];
        *mass.entry(c).or_insert(0.0) += sizes[v] as f64;
    }
    for &(u, v, w) in pairs {
        if membership[u] == membership[v] {
            *inside.get_mut(&membership[u]).unwrap() += w;
        }
    }
    mass.iter()
        .map(|(c, &s)| inside[c] - gamma * s * (s - 1.0) / 2.0)
        .sum()
}

fn undirected_pairs(g: &CitationGraph) -> Vec<(usize, usize, f64)> {
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in g.edges() {
        *acc.entry((e.source.min(e.target), e.source.max(e.target)))
            .or_insert(0.0) += e.weight;
    }
    acc.into_iter().map(|((u, v), w)| (u, v, w)).collect()
}

fn brute_force_optimum(g: &CitationGraph, gamma: f64) -> f64 {
    let n = g.node_count();
    let pairs = undirected_pairs(g);
    let sizes = vec![1u64; n];
    let zero = vec![0.0; n];
    set_partitions(n)
        .iter()
        .map(|m| cpm_oracle(&sizes, &zero, &pairs, m, gamma))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn graph_from(n: usize, edges: &[(usize, usize, f64)]) -> CitationGraph {
    CitationGraph::from_parts(
        (0..n).map(|i| format!("v{i}")).collect(),
        vec![1; n],
        edges.iter().map(|&(source, target, weight)| Edge {
            source,
            target,
            weight,
        }),
    )
    .unwrap()
}

fn k5_bridge() -> CitationGraph {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((4, 5, 1.0));
    graph_from(10, &edges)
}

fn trace_monotone(qualities: &[f64]) -> bool {
    qualities
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0))
}

fn c1_connectivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut graphs = 0;
    let mut violations = 0;
    let mut traces_bad = 0;
    for i in 0..120 {
        let n = rng.random_range(50..=500);
        let g = if i % 2 == 0 {
            erdos_renyi(n, rng.random_range(2.0..8.0) / n as f64, &mut rng)
        } else {
            let k = rng.random_range(2..=10);
            let mut blocks = vec![n / k; k];
            blocks[0] += n - (n / k) * k;
            planted_partition(
                &blocks,
                rng.random_range(0.1..0.5),
                rng.random_range(0.001..0.02),
                &mut rng,
            )
        };
        let gamma = [0.01, 0.05, 0.1, 0.3][i % 4];
        let params = CpmParams {
            gamma,
            random_starts: 2,
            iterations: 10,
            seed: i as u64,
            ..CpmParams::default()
        };
        let s = cluster(&g, &params).map_err(|e| e.to_string())?;
        let report = connectivity_check(&g.undirected_view(), &s.partition.assignment);
        violations += report.offending.len();
        traces_bad += s
            .run_log
            .starts
            .iter()
            .filter(|l| !trace_monotone(&l.qualities))
            .count();
        graphs += 1;
    }
    check(
        violations == 0,
        format!("{violations} disconnected clusters"),
    )?;
    check(traces_bad == 0, format!("{traces_bad} non-monotone traces"))?;
    Ok(format!(
        "{graphs} graphs (ER and planted partition, 50-500 nodes), 0 disconnected clusters"
    ))
}

fn c2_brute_force() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut trials = 0;
    let mut matched = 0;
    let mut exceeded = 0;
    for gi in 0..36 {
        let n = rng.random_range(4..=8);
        let p = [0.3, 0.5, 0.7][gi % 3];
        let weighted = gi % 2 == 1;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    let w = if weighted {
                        rng.random_range(0.1..2.0)
                    } else {
                        1.0
                    };
                    edges.push((i, j, w));
                }
            }
        }
        let g = graph_from(n, &edges);
        for gamma in [0.1, 0.5, 1.0] {
            let optimum = brute_force_optimum(&g, gamma);
            for seed in 0..3u64 {
                let params = CpmParams {
                    gamma,
                    seed,
                    random_starts: 10,
                    ..CpmParams::default()
                };
                let q = cluster(&g, &params)
                    .map_err(|e| e.to_string())?
                    .partition
                    .quality;
                trials += 1;
                if q > optimum + 1e-9 {
                    exceeded += 1;
                }
                if (q - optimum).abs() <= 1e-9 {
                    matched += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let rate = matched as f64 / trials as f64;
    check(
        exceeded == 0,
        format!("{exceeded} trials above the optimum"),
    )?;
    check(rate >= 0.95, format!("match rate {rate:.4} < 0.95"))?;
    check(
        elapsed < Duration::from_secs(60),
        format!("suite took {elapsed:?}"),
    )?;
    Ok(format!(
        "36 graphs x 3 gammas x 3 seeds: {matched}/{trials} optimal ({:.1}%), none above, {:.2?}",
        rate * 100.0,
        elapsed
    ))
}

/// Unique CPM-optimal partition by enumeration, as sorted node sets.
fn optimal_partition(g: &CitationGraph, gamma: f64) -> Option<(f64, Vec<Vec<usize>>)> {
    let n = g.node_count();
    let pairs = undirected_pairs(g);
    let sizes = vec![1u64; n];
    let zero = vec![0.0; n];
    let scored: Vec<(f64, Vec<usize>)> = set_partitions(n)
        .into_iter()
        .map(|m| (cpm_oracle(&sizes, &zero, &pairs, &m, gamma), m))
        .collect();
    let best = scored
        .iter()
        .map(|(q, _)| *q)
        .fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<_> = scored
        .iter()
        .filter(|(q, _)| (q - best).abs() < 1e-12)
        .collect();
    (winners.len() == 1).then(|| (best, blocks(&winners[0].1)))
}

fn blocks(membership: &[usize]) -> Vec<Vec<usize>> {
    let mut by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in membership.iter().enumerate() {
        by.entry(c).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = by.into_values().collect();
    out.sort();
    out
}

fn c3_resolution() -> Outcome {
    // Merging the cliques gains the bridge weight 1 and costs gamma * 5 * 5,
    // so enumeration puts the transition at gamma = 0.04.
    let g = k5_bridge();
    let mut summary = Vec::new();
    for gamma in [0.03, 0.05, 0.9] {
        let (optimum, expected) =
            optimal_partition(&g, gamma).ok_or(format!("gamma {gamma}: optimum not unique"))?;
        let s = cluster(
            &g,
            &CpmParams {
                gamma,
                ..CpmParams::default()
            },
        )
        .map_err(|e| e.to_string())?;
        check(
            (s.partition.quality - optimum).abs() < 1e-12,
            format!(
                "gamma {gamma}: quality {} vs optimum {optimum}",
                s.partition.quality
            ),
        )?;
        check(
            blocks(&s.partition.assignment) == expected,
            format!("gamma {gamma}: partition differs from the enumerated optimum {expected:?}"),
        )?;
        summary.push(format!(
            "gamma {gamma} -> {} cluster(s), Q = {optimum}",
            expected.len()
        ));
    }
    check(summary.len() == 3, "missing cases")?;
    Ok(format!(
        "{} (matches exhaustive enumeration)",
        summary.join("; ")
    ))
}

fn c4_monotone_and_gain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut traces = 0;
    for i in 0..40 {
        let n = rng.random_range(30..200);
        let g = planted_partition(&[n / 2, n - n / 2], 0.3, 0.02, &mut rng);
        for scheme in [
            topomap::leiden::RestartScheme::IndependentStarts,
            topomap::leiden::RestartScheme::IteratedBest,
        ] {
            let params = CpmParams {
                gamma: 0.05,
                seed: i,
                random_starts: 3,
                iterations: 20,
                scheme,
                ..CpmParams::default()
            };
            let s = cluster(&g, &params).map_err(|e| e.to_string())?;
            for log in &s.run_log.starts {
                check(
                    trace_monotone(&log.qualities),
                    format!("trace {:?} decreases", log.qualities),
                )?;
                traces += 1;
            }
        }
    }

    let mut moves = 0;
    let mut worst: f64 = 0.0;
    while moves < 10_000 {
        let n = rng.random_range(2..40);
        let sizes: Vec<u64> = (0..n).map(|_| rng.random_range(1..4)).collect();
        let self_w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(0.0..3.0)
                } else {
                    0.0
                }
            })
            .collect();
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.3) {
                    pairs.push((u, v, rng.random_range(0.05..2.0)));
                }
            }
        }
        let view = SymmetricAdjacency::from_pairs(sizes.clone(), self_w.clone(), pairs.clone());
        let k = rng.random_range(1..=n);
        let gamma = rng.random_range(0.001..1.5);
        for _ in 0..50 {
            let membership: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let v = rng.random_range(0..n);
            let (target, moved_to) = if rng.random_bool(0.2) {
                (MoveTarget::Empty, k)
            } else {
                let c = rng.random_range(0..k);
                (MoveTarget::Cluster(c), c)
            };
            let mut after = membership.clone();
            after[v] = moved_to;
            let full = cpm_oracle(&sizes, &self_w, &pairs, &after, gamma)
                - cpm_oracle(&sizes, &self_w, &pairs, &membership, gamma);
            let lib_full = cpm_quality(&view, &after, gamma).unwrap()
                - cpm_quality(&view, &membership, gamma).unwrap();
            let gain = move_gain(&view, &membership, v, target, gamma);
            worst = worst.max((gain - full).abs()).max((lib_full - full).abs());
            moves += 1;
        }
    }
    check(worst <= 1e-9, format!("move_gain deviates by {worst:e}"))?;
    Ok(format!(
        "{traces} traces non-decreasing; {moves} moves, max |gain - recomputed| = {worst:.1e}"
    ))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_topomap"))
        .args(args)
        .env_remove("TOPOMAP_OUT")
        .output()
        .map_err(|e| e.to_string())?;
    check(
        status.status.success(),
        format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ),
    )
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn c5_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixtures().join("pipeline.toml");
    let config = config.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        run_cli(&[
            "pipeline",
            "--config",
            config,
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ])?;
    }
    let (ta, tb) = (tree(&a), tree(&b));
    check(!ta.is_empty(), "no output written")?;
    check(ta.keys().eq(tb.keys()), "output trees list different files")?;
    let differing: Vec<_> = ta
        .iter()
        .filter(|(k, v)| tb[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    check(
        differing.is_empty(),
        format!("differing files: {differing:?}"),
    )?;
    Ok(format!(
        "{} files byte-identical across two seed-42 runs",
        ta.len()
    ))
}

fn c6_weighting() -> Outcome {
    let ingested = ingest_path(&fixtures().join("publications.jsonl"), InputFormat::Jsonl)
        .map_err(|e| e.to_string())?;
    let (records, _) = filter_corpus(ingested.records, &CorpusFilter::default());
    let (g, _) = build_graph(&records, Weighting::NormalizedOut).map_err(|e| e.to_string())?;
    let mut citing = 0;
    let mut worst: f64 = 0.0;
    for w in g.out_weights() {
        if w > 0.0 {
            citing += 1;
            worst = worst.max((w - 1.0).abs());
        }
    }
    check(citing > 0, "no citing node")?;
    check(worst <= 1e-12, format!("out-weight deviates by {worst:e}"))?;
    let bench = citation_benchmark(5000, 40_000, 20, 0.2, 6).map_err(|e| e.to_string())?;
    let bench_worst = bench
        .out_weights()
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|w| (w - 1.0).abs())
        .fold(0.0, f64::max);
    check(
        bench_worst <= 1e-12,
        format!("benchmark out-weight deviates by {bench_worst:e}"),
    )?;
    Ok(format!(
        "{citing} citing nodes of the bundled corpus sum to 1 (max dev {worst:.1e})"
    ))
}

/// NMI of a 2x2 table from its joint probability table.
fn nmi_oracle(t: [[u64; 2]; 2]) -> f64 {
    let n: f64 = t.iter().flatten().sum::<u64>() as f64;
    let p = |i: usize, j: usize| t[i][j] as f64 / n;
    let row = |i: usize| p(i, 0) + p(i, 1);
    let col = |j: usize| p(0, j) + p(1, j);
    let h = |xs: [f64; 2]| {
        -xs.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| x * x.log2())
            .sum::<f64>()
    };
    let (ht, hc) = (h([row(0), row(1)]), h([col(0), col(1)]));
    if ht == 0.0 || hc == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            if p(i, j) > 0.0 {
                mi += p(i, j) * (p(i, j) / (row(i) * col(j))).log2();
            }
        }
    }
    mi / (ht * hc).sqrt()
}

fn c7_nmi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let mut cells = [0u64; 4];
        for c in &mut cells {
            *c = if rng.random_bool(0.1) {
                0
            } else {
                rng.random_range(0..500)
            };
        }
        if cells.iter().sum::<u64>() == 0 {
            cells[0] = 1;
        }
        let [n11, n10, n01, n00] = cells;
        // rows: term present/absent; columns: in cluster/outside
        let got = nmi_score(Contingency::new(n11, n10, n01, n00), Normalization::Sqrt)
            .map_err(|e| e.to_string())?
            .nmi;
        let want = nmi_oracle([[n11, n10], [n01, n00]]).clamp(0.0, 1.0);
        worst = worst.max((got - want).abs());
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    let perfect = nmi_score(Contingency::new(2, 0, 0, 2), Normalization::Sqrt)
        .unwrap()
        .nmi;
    let independent = nmi_score(Contingency::new(1, 1, 1, 1), Normalization::Sqrt)
        .unwrap()
        .nmi;
    check(
        (perfect - 1.0).abs() <= 1e-12,
        format!("perfect marker scored {perfect}"),
    )?;
    check(
        independent.abs() <= 1e-12,
        format!("independent table scored {independent}"),
    )?;
    Ok(format!("10000 random tables within {worst:.1e}; perfect marker {perfect}, independence {independent}"))
}

fn c8_affinity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = rng.random_range(20..120);
        let k = rng.random_range(2..8);
        let g = citation_benchmark(n, rng.random_range(n..3 * n), k, 0.4, i)
            .map_err(|e| e.to_string())?;
        let assignment: Vec<usize> = (0..n)
            .map(|_| {
                if rng.random_bool(0.05) {
                    topomap::leiden::UNASSIGNED
                } else {
                    rng.random_range(0..k)
                }
            })
            .collect();
        let flow = if i % 2 == 0 {
            FlowWeight::Weighted
        } else {
            FlowWeight::RawCounts
        };
        let f = ClusterFlows::new(&g, &assignment, flow, NullModel::Configuration)
            .map_err(|e| e.to_string())?;
        let observed_total: f64 = f.observed.values().sum();
        let mut expected_total = 0.0;
        for &a in &f.clusters {
            let row: f64 = f.clusters.iter().map(|&b| f.expected(a, b)).sum();
            worst = worst.max((row - f.out[&a]).abs());
            expected_total += row;
        }
        worst = worst.max((expected_total - observed_total).abs());
        let net = affinity_network(
            &g,
            &assignment,
            &AffinityConfig {
                threshold: 0.0,
                flow,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let emitted: f64 = net.edges.iter().map(|e| e.observed).sum();
        worst = worst.max((emitted - observed_total).abs());
    }
    check(
        worst <= 1e-9,
        format!("null-model sums deviate by {worst:e}"),
    )?;

    let g = graph_from(3, &[(0, 1, 3.0), (0, 2, 1.0), (1, 2, 2.0)]);
    let net =
        affinity_network(&g, &[0, 1, 2], &AffinityConfig::default()).map_err(|e| e.to_string())?;
    let ab = net
        .edges
        .iter()
        .find(|e| e.source == 0 && e.target == 1)
        .ok_or("A->B missing")?;
    check(
        ab.expected == 2.0 && ab.affinity == 1.5,
        format!("hand example gave {ab:?}"),
    )?;
    Ok(format!(
        "100 random graphs within {worst:.1e}; hand example expected 2, affinity 1.5"
    ))
}

fn c9_flow_coverage_categories() -> Outcome {
    let m = |spec: &[(&str, usize)]| -> Vec<(String, Option<usize>)> {
        spec.iter()
            .map(|&(d, c)| (d.to_string(), Some(c)))
            .collect()
    };
    let f = flow_matrix(
        &m(&[("1", 1), ("2", 1), ("3", 2)]),
        &m(&[("1", 1), ("2", 2), ("3", 2)]),
    );
    check(
        f.cells == vec![vec![1, 1], vec![0, 1]],
        format!("cells {:?}", f.cells),
    )?;
    let same = m(&[("1", 0), ("2", 0), ("3", 1)]);
    let d = flow_matrix(&same, &same);
    check(
        d.cells == vec![vec![2, 0], vec![0, 1]],
        "identity flow is not diagonal",
    )?;

    let curve = coverage_curve(&[50, 30, 15, 5], 100).map_err(|e| e.to_string())?;
    let k = smallest_k(&curve, 0.9);
    check(k == Some(3), format!("smallest_k = {k:?}"))?;

    let cats: Vec<MicrofieldCategory> = [0.527, 0.34, 0.05]
        .iter()
        .map(|&s| categorize_microfield(s, 0.5, 0.15).unwrap())
        .collect();
    check(
        cats == [
            MicrofieldCategory::Core,
            MicrofieldCategory::Boundary,
            MicrofieldCategory::BoundaryCrossing,
        ],
        format!("categories {cats:?}"),
    )?;
    Ok(
        "flow fixtures match; smallest_k = 3; 0.527 core, 0.34 boundary, 0.05 boundary_crossing"
            .into(),
    )
}

fn c10_performance() -> Outcome {
    let g = citation_benchmark(25_680, 229_572, 200, 0.2, 10).map_err(|e| e.to_string())?;
    let params = CpmParams {
        gamma: 1e-3,
        random_starts: 10,
        iterations: 100,
        seed: 42,
        ..CpmParams::default()
    };
    let started = Instant::now();
    let s = cluster(&g, &params).map_err(|e| e.to_string())?;
    let full_scale = started.elapsed();
    check(
        full_scale < Duration::from_secs(10),
        format!("25,680-node run took {full_scale:?}"),
    )?;

    let big = citation_benchmark(100_000, 1_000_000, 500, 0.2, 11).map_err(|e| e.to_string())?;
    let single = CpmParams {
        random_starts: 1,
        ..params
    };
    let started = Instant::now();
    cluster_view(&big.undirected_view(), &single).map_err(|e| e.to_string())?;
    let million = started.elapsed();
    check(
        million < Duration::from_secs(60),
        format!("1M-edge run took {million:?}"),
    )?;
    Ok(format!(
        "25,680 nodes / 229,572 edges, 10 starts x 100 iterations: {full_scale:.2?} ({} clusters); 1M edges, 1 start: {million:.2?}",
        s.partition.cluster_count()
    ))
}

fn c11_discard() -> Outcome {
    // cliques of 23, 23, 23, 23 (retained) and 4, 4 (discarded) on 100 nodes,
    // chained by single bridges
    let sizes = [23usize, 23, 23, 23, 4, 4];
    let mut edges = Vec::new();
    let mut base = 0;
    for (i, &s) in sizes.iter().enumerate() {
        for a in 0..s {
            for b in a + 1..s {
                edges.push((base + a, base + b, 1.0));
            }
        }
        if i > 0 {
            edges.push((base - 1, base, 1.0));
        }
        base += s;
    }
    let g = graph_from(base, &edges);
    let params = CpmParams {
        gamma: 0.5,
        min_cluster_size: 10,
        ..CpmParams::default()
    };
    let s = cluster(&g, &params).map_err(|e| e.to_string())?;
    check(
        (s.discarded_share - 0.08).abs() <= 1e-12,
        format!("discarded_share = {}", s.discarded_share),
    )?;
    check(s.retained == 4, format!("{} clusters retained", s.retained))?;
    Ok(format!(
        "discarded_share = {} ({} nodes)",
        s.discarded_share,
        s.discarded_nodes.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("connectivity guarantee", c1_connectivity),
        ("brute-force CPM optimality", c2_brute_force),
        ("resolution behaviour", c3_resolution),
        (
            "quality monotonicity and incremental gains",
            c4_monotone_and_gain,
        ),
        ("pipeline determinism", c5_determinism),
        ("out-normalized weighting", c6_weighting),
        ("NMI labelling oracle", c7_nmi),
        ("affinity null model", c8_affinity),
        (
            "flow, coverage and category oracles",
            c9_flow_coverage_categories,
        ),
        ("performance at scale", c10_performance),
        ("discard accounting", c11_discard),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{took:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{took:.2?}]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
