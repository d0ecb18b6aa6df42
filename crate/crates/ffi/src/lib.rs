//! C ABI over the topomap clustering and comparison routines.
//!
//! Every fallible function returns a [`TopomapStatus`]. On failure the
//! message is available from [`topomap_last_error_message`] on the same
//! thread. Graphs and solutions are opaque handles released with their
//! `_free` functions; a solution stays valid after its graph is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use topomap::analysis::{flow_matrix, partition_similarity};
use topomap::graph::{read_graph_dir, CitationGraph, Edge};
use topomap::labeling::{nmi_score, Contingency, Direction, Normalization};
use topomap::leiden::{cluster, ClusterSolution, CpmParams, RestartScheme};
use topomap::{Error, ErrorKind};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopomapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MissingInput = 3,
    Schema = 4,
    Invariant = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// `scheme` value: independent starts from singletons, best final partition wins.
pub const TOPOMAP_SCHEME_INDEPENDENT_STARTS: u32 = 0;
/// `scheme` value: each round runs every start once from the incumbent.
pub const TOPOMAP_SCHEME_ITERATED_BEST: u32 = 1;
/// NMI normalized by the geometric mean of the two entropies.
pub const TOPOMAP_NORMALIZATION_SQRT: u32 = 0;
/// NMI normalized by the smaller of the two entropies.
pub const TOPOMAP_NORMALIZATION_MIN: u32 = 1;

/// Clustering parameters. Fill with [`topomap_cluster_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TopomapClusterParams {
    pub gamma: f64,
    pub iterations: u32,
    pub random_starts: u32,
    pub seed: u64,
    pub theta: f64,
    pub min_cluster_size: u64,
    pub scheme: u32,
}

/// Agreement between two partitions of the same documents.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TopomapSimilarity {
    pub nmi: f64,
    pub ari: f64,
    /// Documents assigned in both partitions.
    pub shared: u64,
}

/// Opaque citation graph.
pub struct TopomapGraph {
    inner: Arc<CitationGraph>,
}

/// Opaque clustering result.
pub struct TopomapSolution {
    graph: Arc<CitationGraph>,
    solution: ClusterSolution,
}

struct Failure {
    status: TopomapStatus,
    message: String,
}

impl Failure {
    fn new(status: TopomapStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Failure::new(TopomapStatus::NullPointer, format!("`{name}` is null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure::new(TopomapStatus::InvalidArgument, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match (&e, e.kind()) {
            (Error::InvalidArgument(_), _) => TopomapStatus::InvalidArgument,
            (_, ErrorKind::MissingInput) => TopomapStatus::MissingInput,
            (_, ErrorKind::Schema) => TopomapStatus::Schema,
            (_, ErrorKind::Invariant) => TopomapStatus::Invariant,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TopomapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TopomapStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {text}"));
            TopomapStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, name: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure::invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Failure::null(name))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

fn to_params(p: &TopomapClusterParams) -> Result<CpmParams, Failure> {
    let scheme = match p.scheme {
        TOPOMAP_SCHEME_INDEPENDENT_STARTS => RestartScheme::IndependentStarts,
        TOPOMAP_SCHEME_ITERATED_BEST => RestartScheme::IteratedBest,
        other => return Err(Failure::invalid(format!("unknown scheme {other}"))),
    };
    let params = CpmParams {
        gamma: p.gamma,
        iterations: p.iterations as usize,
        random_starts: p.random_starts as usize,
        seed: p.seed,
        theta: p.theta,
        min_cluster_size: p.min_cluster_size,
        scheme,
    };
    params.validate()?;
    Ok(params)
}

fn membership_from(raw: &[i64]) -> Vec<(String, Option<usize>)> {
    raw.iter()
        .enumerate()
        .map(|(i, &c)| (i.to_string(), usize::try_from(c).ok()))
        .collect()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn topomap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failed call on this thread, or an empty
/// string. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn topomap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Writes the library defaults into `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one params struct.
#[no_mangle]
pub unsafe extern "C" fn topomap_cluster_params_default(
    out: *mut TopomapClusterParams,
) -> TopomapStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| Failure::null("out"))?;
        let d = CpmParams::default();
        *out = TopomapClusterParams {
            gamma: d.gamma,
            iterations: d.iterations as u32,
            random_starts: d.random_starts as u32,
            seed: d.seed,
            theta: d.theta,
            min_cluster_size: d.min_cluster_size,
            scheme: TOPOMAP_SCHEME_INDEPENDENT_STARTS,
        };
        Ok(())
    })
}

/// Loads a graph directory holding `nodes.tsv` and `edges.tsv`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn topomap_graph_load(
    dir: *const c_char,
    out: *mut *mut TopomapGraph,
) -> TopomapStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let graph = read_graph_dir(path_arg(dir, "dir")?)?;
        *out = Box::into_raw(Box::new(TopomapGraph {
            inner: Arc::new(graph),
        }));
        Ok(())
    })
}

/// Builds a graph over nodes `0..node_count` (ids are their decimal
/// indices, sizes 1) from `edge_count` directed weighted edges. Parallel
/// edges are summed.
///
/// # Safety
/// Each array must hold `edge_count` elements (may be null when zero) and
/// `out` must be a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn topomap_graph_from_edges(
    node_count: usize,
    sources: *const usize,
    targets: *const usize,
    weights: *const f64,
    edge_count: usize,
    out: *mut *mut TopomapGraph,
) -> TopomapStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let sources = slice_arg(sources, edge_count, "sources")?;
        let targets = slice_arg(targets, edge_count, "targets")?;
        let weights = slice_arg(weights, edge_count, "weights")?;
        let edges = (0..edge_count).map(|i| Edge {
            source: sources[i],
            target: targets[i],
            weight: weights[i],
        });
        let ids = (0..node_count).map(|i| i.to_string()).collect();
        let graph = CitationGraph::from_parts(ids, vec![1; node_count], edges)?;
        *out = Box::into_raw(Box::new(TopomapGraph {
            inner: Arc::new(graph),
        }));
        Ok(())
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn topomap_graph_node_count(graph: *const TopomapGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.node_count())
}

/// Number of distinct directed edges, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn topomap_graph_edge_count(graph: *const TopomapGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn topomap_graph_free(graph: *mut TopomapGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Clusters `graph` with the Leiden algorithm under the CPM quality.
///
/// # Safety
/// `graph` and `params` must be live pointers and `out` a writable slot.
#[no_mangle]
pub unsafe extern "C" fn topomap_cluster(
    graph: *const TopomapGraph,
    params: *const TopomapClusterParams,
    out: *mut *mut TopomapSolution,
) -> TopomapStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let graph = ref_arg(graph, "graph")?;
        let params = to_params(ref_arg(params, "params")?)?;
        let solution = cluster(&graph.inner, &params)?;
        *out = Box::into_raw(Box::new(TopomapSolution {
            graph: Arc::clone(&graph.inner),
            solution,
        }));
        Ok(())
    })
}

/// Number of nodes the solution covers, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn topomap_solution_node_count(solution: *const TopomapSolution) -> usize {
    solution
        .as_ref()
        .map_or(0, |s| s.solution.partition.assignment.len())
}

/// Number of clusters at or above the minimum size, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn topomap_solution_cluster_count(solution: *const TopomapSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.retained)
}

/// CPM quality of the full partition, or NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn topomap_solution_quality(solution: *const TopomapSolution) -> f64 {
    solution
        .as_ref()
        .map_or(f64::NAN, |s| s.solution.partition.quality)
}

/// Share of nodes in discarded clusters, or NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn topomap_solution_discarded_share(solution: *const TopomapSolution) -> f64 {
    solution
        .as_ref()
        .map_or(f64::NAN, |s| s.solution.discarded_share)
}

/// Copies the cluster of every node into `out`, -1 for discarded nodes.
/// `written` receives the node count. Pass a null `out` to query the size;
/// a smaller `capacity` returns `BUFFER_TOO_SMALL`.
///
/// # Safety
/// `out` must be null or hold `capacity` elements; `written` null or writable.
#[no_mangle]
pub unsafe extern "C" fn topomap_solution_membership(
    solution: *const TopomapSolution,
    out: *mut i64,
    capacity: usize,
    written: *mut usize,
) -> TopomapStatus {
    guard(|| {
        let s = ref_arg(solution, "solution")?;
        let n = s.solution.partition.assignment.len();
        if let Some(w) = written.as_mut() {
            *w = n;
        }
        if out.is_null() {
            return Ok(());
        }
        if capacity < n {
            return Err(Failure::new(
                TopomapStatus::BufferTooSmall,
                format!("membership needs {n} slots, got {capacity}"),
            ));
        }
        let buf = std::slice::from_raw_parts_mut(out, n);
        for (v, slot) in buf.iter_mut().enumerate() {
            *slot = s.solution.cluster_of(v).map_or(-1, |c| c as i64);
        }
        Ok(())
    })
}

/// Writes `pub_id<TAB>cluster_id` rows to `path`.
///
/// # Safety
/// `solution` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn topomap_solution_write_tsv(
    solution: *const TopomapSolution,
    path: *const c_char,
) -> TopomapStatus {
    guard(|| {
        let s = ref_arg(solution, "solution")?;
        let path = path_arg(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| {
            Failure::new(
                TopomapStatus::MissingInput,
                format!("{}: {e}", path.display()),
            )
        })?;
        let mut w = std::io::BufWriter::new(file);
        s.solution.write_tsv(&s.graph, &mut w)?;
        std::io::Write::flush(&mut w).map_err(Error::from)?;
        Ok(())
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn topomap_solution_free(solution: *mut TopomapSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// NMI between a label and a cluster from their 2x2 contingency counts.
/// `enriched` (optional) is set to 1 when the label is over-represented.
///
/// # Safety
/// `nmi` must be writable; `enriched` null or writable.
#[no_mangle]
pub unsafe extern "C" fn topomap_nmi_score(
    n11: u64,
    n10: u64,
    n01: u64,
    n00: u64,
    normalization: u32,
    nmi: *mut f64,
    enriched: *mut i32,
) -> TopomapStatus {
    guard(|| {
        let nmi = nmi.as_mut().ok_or_else(|| Failure::null("nmi"))?;
        let normalization = match normalization {
            TOPOMAP_NORMALIZATION_SQRT => Normalization::Sqrt,
            TOPOMAP_NORMALIZATION_MIN => Normalization::Min,
            other => return Err(Failure::invalid(format!("unknown normalization {other}"))),
        };
        let score = nmi_score(Contingency::new(n11, n10, n01, n00), normalization)?;
        *nmi = score.nmi;
        if let Some(e) = enriched.as_mut() {
            *e = i32::from(score.direction == Direction::Enriched);
        }
        Ok(())
    })
}

/// NMI and adjusted Rand index between two partitions of the same `n`
/// documents. Negative entries mark unassigned documents, which are left
/// out of both scores.
///
/// # Safety
/// `a` and `b` must hold `n` elements and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn topomap_partition_similarity(
    a: *const i64,
    b: *const i64,
    n: usize,
    out: *mut TopomapSimilarity,
) -> TopomapStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| Failure::null("out"))?;
        let a = membership_from(slice_arg(a, n, "a")?);
        let b = membership_from(slice_arg(b, n, "b")?);
        let s = partition_similarity(&flow_matrix(&a, &b))?;
        *out = TopomapSimilarity {
            nmi: s.nmi,
            ari: s.ari,
            shared: s.shared,
        };
        Ok(())
    })
}
