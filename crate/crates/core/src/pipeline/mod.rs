//! End-to-end runs: configuration, checksummed output directories and the
//! individual stages shared by the command-line subcommands.

mod config;
mod manifest;

pub use config::{
    ClusterConfig, FilterConfig, GraphConfig, Inputs, LabelingConfig, ProjectionConfig, RunConfig,
};
pub use manifest::{read_manifest, sha256_hex, FileDigest, Manifest, OutputDir, MANIFEST_FILE};

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    affinity_network, flow_matrix, partition_similarity, AffinityConfig, AffinityNetwork,
    Similarity,
};
use crate::corpus::{
    default_exclusions, default_stopwords, extract_terms, filter_corpus, ingest_path,
    load_term_vectors, read_word_list, write_jsonl, CorpusFilter, ExclusionList, ExclusionMatch,
    InputFormat, PublicationRecord, TermVector,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_graph, giant_component, write_graph, CitationGraph, GraphSummary, Weighting, EDGES_FILE,
    NODES_FILE, SUMMARY_FILE,
};
use crate::labeling::{
    journal_labels, rank_labels, term_labels, write_labels_tsv, LabelConfig, LabelMode,
};
use crate::leiden::{cluster, ClusterSolution, CpmParams, UNASSIGNED};
use crate::projection::{
    coverage_summary, project, CategoryThresholds, ClassificationMap, CoverageSummary, Projection,
};

/// Cluster membership in document order; `None` marks unassigned documents.
pub type Membership = Vec<(String, Option<usize>)>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: usize,
    pub records_retrieved: usize,
    pub duplicates: usize,
    pub dropped_by_filter: usize,
    pub records_kept: usize,
}

/// Reads and filters the publication records; writes `records.jsonl` and
/// `ingest_report.json` under `dir`.
pub fn stage_ingest(
    out: &mut OutputDir,
    dir: &str,
    input: &Path,
    filter: &CorpusFilter,
) -> Result<(Vec<PublicationRecord>, IngestReport)> {
    out.record_input(input)?;
    let ingested = ingest_path(input, InputFormat::from_path(input))?;
    let retrieved = ingested.records.len();
    let (kept, dropped) = filter_corpus(ingested.records, filter);
    let report = IngestReport {
        lines: ingested.lines,
        records_retrieved: retrieved,
        duplicates: ingested.duplicates,
        dropped_by_filter: dropped,
        records_kept: kept.len(),
    };
    out.write(&format!("{dir}records.jsonl"), |buf| {
        write_jsonl(&kept, buf)
    })?;
    out.write_json(&format!("{dir}ingest_report.json"), &report)?;
    Ok((kept, report))
}

/// Builds the citation graph, keeps its giant component and writes it.
pub fn stage_graph(
    out: &mut OutputDir,
    dir: &str,
    records: &[PublicationRecord],
    weighting: Weighting,
) -> Result<(CitationGraph, GraphSummary)> {
    let (full, build) = build_graph(records, weighting)?;
    let (giant, components) = giant_component(&full);
    let summary = GraphSummary {
        build: Some(build),
        components: Some(components),
        ..GraphSummary::of(&giant)
    };
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    write_graph(&giant, &mut nodes, &mut edges)?;
    out.write_bytes(&format!("{dir}{NODES_FILE}"), &nodes)?;
    out.write_bytes(&format!("{dir}{EDGES_FILE}"), &edges)?;
    out.write_json(&format!("{dir}{SUMMARY_FILE}"), &summary)?;
    Ok((giant, summary))
}

pub fn stage_cluster(
    out: &mut OutputDir,
    dir: &str,
    graph: &CitationGraph,
    params: &CpmParams,
    timings: bool,
) -> Result<ClusterSolution> {
    let started = Instant::now();
    let solution = cluster(graph, params)?;
    let mut meta = solution.metadata();
    if timings {
        meta.wall_time_ms = Some(started.elapsed().as_millis() as u64);
    }
    out.write(&format!("{dir}clusters.tsv"), |buf| {
        solution.write_tsv(graph, buf)
    })?;
    out.write_json(&format!("{dir}cluster_metadata.json"), &meta)?;
    Ok(solution)
}

pub fn load_classification(path: &Path, microfields: Option<&Path>) -> Result<ClassificationMap> {
    let mut map = ClassificationMap::read(open(path)?)?;
    if let Some(m) = microfields {
        map.read_metadata(open(m)?)?;
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub corpus_size: usize,
    pub mapped: usize,
    pub unmapped: usize,
    pub clusters: usize,
    pub truncated_clusters: usize,
    pub truncated_members: usize,
    pub core_microfields: Vec<String>,
    pub boundary_microfields: Vec<String>,
}

/// Projects `ids` onto the classification; writes the cluster table, the
/// membership TSV and a summary.
pub fn stage_project(
    out: &mut OutputDir,
    dir: &str,
    ids: &[String],
    map: &ClassificationMap,
    top_k: Option<usize>,
    thresholds: CategoryThresholds,
) -> Result<(Projection, ProjectionReport)> {
    use crate::projection::MicrofieldCategory as Cat;
    let mut projection = project(ids.iter().map(String::as_str), map, top_k)?;
    projection.categorize(thresholds)?;
    let of = |cat: Cat| -> Vec<String> {
        projection
            .clusters
            .iter()
            .filter(|c| c.category == Some(cat))
            .map(|c| c.microfield.clone())
            .collect()
    };
    let report = ProjectionReport {
        corpus_size: projection.corpus_size,
        mapped: projection.corpus_size - projection.unmapped.len(),
        unmapped: projection.unmapped.len(),
        clusters: projection.clusters.len(),
        truncated_clusters: projection.truncated_clusters,
        truncated_members: projection.truncated_members,
        core_microfields: of(Cat::Core),
        boundary_microfields: of(Cat::Boundary),
    };
    out.write(&format!("{dir}projection_clusters.tsv"), |buf| {
        projection.write_clusters_tsv(map, buf)
    })?;
    out.write(&format!("{dir}projection_membership.tsv"), |buf| {
        projection.write_membership_tsv(ids.iter().map(String::as_str), buf)
    })?;
    out.write_json(&format!("{dir}projection_summary.json"), &report)?;
    Ok((projection, report))
}

/// Term vectors: read from `terms` when given, otherwise extracted from
/// titles and abstracts.
pub fn term_vectors(
    records: &[PublicationRecord],
    terms: Option<&Path>,
    stopwords: Option<&Path>,
    exclusions: Option<&Path>,
    exclusion_match: ExclusionMatch,
    max_ngram: usize,
) -> Result<Vec<TermVector>> {
    let exclusions = match exclusions {
        Some(p) => ExclusionList::new(read_word_list(open(p)?)?, exclusion_match),
        None => default_exclusions().with_mode(exclusion_match),
    };
    if let Some(p) = terms {
        return load_term_vectors(open(p)?, &exclusions);
    }
    let stopwords = match stopwords {
        Some(p) => read_word_list(open(p)?)?.into_iter().collect(),
        None => default_stopwords(),
    };
    Ok(records
        .iter()
        .map(|r| extract_terms(r, &stopwords, max_ngram, &exclusions))
        .collect())
}

/// Writes `{dir}{name}_{mode}.tsv` with the ranked labels per cluster.
pub fn stage_label(
    out: &mut OutputDir,
    dir: &str,
    name: &str,
    membership: &Membership,
    labels: &HashMap<String, BTreeSet<String>>,
    mode: LabelMode,
    config: &LabelConfig,
) -> Result<()> {
    let ranked = rank_labels(membership, labels, config)?;
    out.write(&format!("{dir}{name}_{mode}.tsv"), |buf| {
        write_labels_tsv(&ranked, mode, buf)
    })
}

pub fn label_sets(
    mode: LabelMode,
    records: &[PublicationRecord],
    terms: &[TermVector],
) -> HashMap<String, BTreeSet<String>> {
    match mode {
        LabelMode::Term => term_labels(terms),
        LabelMode::Journal => journal_labels(records),
    }
}

/// Writes `{dir}{name}.json`, `.graphml` and `.dot`.
pub fn stage_affinity(
    out: &mut OutputDir,
    dir: &str,
    name: &str,
    graph: &CitationGraph,
    membership: &Membership,
    config: &AffinityConfig,
) -> Result<AffinityNetwork> {
    let assignment = assignment_for(graph, membership);
    let network = affinity_network(graph, &assignment, config)?;
    out.write_json(&format!("{dir}{name}.json"), &network)?;
    out.write_bytes(
        &format!("{dir}{name}.graphml"),
        network.to_graphml("C").as_bytes(),
    )?;
    out.write_bytes(&format!("{dir}{name}.dot"), network.to_dot("C").as_bytes())?;
    Ok(network)
}

/// Writes `flow.json` and `similarity.json`.
pub fn stage_compare(
    out: &mut OutputDir,
    dir: &str,
    (name_a, a): (&str, &Membership),
    (name_b, b): (&str, &Membership),
) -> Result<Similarity> {
    let flow = flow_matrix(a, b);
    let similarity = partition_similarity(&flow)?;
    out.write_json(&format!("{dir}flow.json"), &flow.export(name_a, name_b))?;
    out.write_json(&format!("{dir}similarity.json"), &similarity)?;
    Ok(similarity)
}

/// Writes `{dir}{name}.json` with the coverage curve of the cluster sizes.
pub fn stage_coverage(
    out: &mut OutputDir,
    dir: &str,
    name: &str,
    sizes: &[u64],
    total: u64,
    target: f64,
) -> Result<CoverageSummary> {
    let summary = coverage_summary(sizes, total, target)?;
    out.write_json(&format!("{dir}{name}.json"), &summary)?;
    Ok(summary)
}

pub fn solution_membership(graph: &CitationGraph, solution: &ClusterSolution) -> Membership {
    graph
        .ids()
        .iter()
        .enumerate()
        .map(|(v, id)| (id.clone(), solution.cluster_of(v)))
        .collect()
}

pub fn projection_membership(ids: &[String], projection: &Projection) -> Membership {
    let m = projection.membership();
    ids.iter()
        .map(|id| (id.clone(), m.get(id.as_str()).copied()))
        .collect()
}

/// Per-node cluster ids of `graph` ([`UNASSIGNED`] where absent or `None`).
pub fn assignment_for(graph: &CitationGraph, membership: &Membership) -> Vec<usize> {
    let mut assignment = vec![UNASSIGNED; graph.node_count()];
    for (id, c) in membership {
        if let (Some(v), Some(c)) = (graph.index_of(id), c) {
            assignment[v] = *c;
        }
    }
    assignment
}

/// Cluster sizes (document counts) of a membership, largest first.
pub fn membership_sizes(membership: &Membership) -> Vec<u64> {
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for c in membership.iter().filter_map(|(_, c)| *c) {
        *counts.entry(c).or_insert(0) += 1;
    }
    let mut sizes: Vec<u64> = counts.into_values().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: usize,
    pub retained_clusters: usize,
    pub discarded_nodes: usize,
    pub discarded_share: f64,
    pub quality: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub ingest: IngestReport,
    pub graph: GraphSummary,
    pub cluster: ClusterReport,
    pub leiden_coverage_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection_coverage_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity: Option<Similarity>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock times (makes outputs run-dependent).
    pub timings: bool,
}

/// Runs ingest, filter, graph, giant component, clustering, projection,
/// labelling, affinity, comparison and coverage, writing everything under
/// `out_dir` together with `report.json` and `manifest.json`.
pub fn run_pipeline(config: &RunConfig, out_dir: &Path, options: RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let inputs = &config.inputs;
    let mut out = OutputDir::create(out_dir)?;
    let mut warnings = Vec::new();

    let filter = config.filter.to_filter()?;
    let (records, ingest) = stage_ingest(&mut out, "corpus/", &inputs.publications, &filter)?;
    let (graph, graph_summary) = stage_graph(&mut out, "graph/", &records, config.graph.weighting)?;
    let ids = graph.ids().to_vec();
    let total = graph.node_sizes().iter().sum::<u64>();

    let params = config.cluster.to_params(config.seed)?;
    let solution = stage_cluster(&mut out, "cluster/", &graph, &params, options.timings)?;
    let leiden = solution_membership(&graph, &solution);

    let projection = match &inputs.classification {
        Some(path) => {
            out.record_input(path)?;
            if let Some(m) = &inputs.microfields {
                out.record_input(m)?;
            }
            let map = load_classification(path, inputs.microfields.as_deref())?;
            let p = stage_project(
                &mut out,
                "projection/",
                &ids,
                &map,
                config.projection.top_k,
                config.projection.thresholds(),
            )?;
            Some(p)
        }
        None => None,
    };
    let (projection, projection_report) = projection.unzip();
    let projected = projection.as_ref().map(|p| projection_membership(&ids, p));

    // labelling runs over the giant component only
    let in_giant: Vec<PublicationRecord> = records
        .iter()
        .filter(|r| graph.index_of(&r.id).is_some())
        .cloned()
        .collect();
    for p in [&inputs.terms, &inputs.stopwords, &inputs.exclusions]
        .into_iter()
        .flatten()
    {
        out.record_input(p)?;
    }
    let lc = &config.labeling;
    let terms = if lc.modes.contains(&LabelMode::Term) {
        term_vectors(
            &in_giant,
            inputs.terms.as_deref(),
            inputs.stopwords.as_deref(),
            inputs.exclusions.as_deref(),
            lc.exclusion_match,
            lc.max_ngram,
        )?
    } else {
        Vec::new()
    };
    let label_config = |universe| LabelConfig {
        universe,
        top_n: lc.top_n,
        min_doc_freq: lc.min_doc_freq,
        normalization: lc.normalization,
    };
    for &mode in &lc.modes {
        let sets = label_sets(mode, &in_giant, &terms);
        stage_label(
            &mut out,
            "labels/",
            "leiden",
            &leiden,
            &sets,
            mode,
            &label_config(lc.leiden_universe),
        )?;
        if let Some(pm) = &projected {
            stage_label(
                &mut out,
                "labels/",
                "projection",
                pm,
                &sets,
                mode,
                &label_config(lc.projection_universe),
            )?;
        }
    }

    let net = stage_affinity(
        &mut out,
        "affinity/",
        "leiden",
        &graph,
        &leiden,
        &config.affinity,
    )?;
    warnings.extend(net.warning.map(|w| format!("leiden affinity: {w}")));
    if let Some(pm) = &projected {
        let net = stage_affinity(
            &mut out,
            "affinity/",
            "projection",
            &graph,
            pm,
            &config.affinity,
        )?;
        warnings.extend(net.warning.map(|w| format!("projection affinity: {w}")));
    }

    let similarity = match &projected {
        Some(pm) => Some(stage_compare(
            &mut out,
            "compare/",
            ("leiden", &leiden),
            ("projection", pm),
        )?),
        None => None,
    };

    let target = config.projection.coverage_target;
    let leiden_cov = stage_coverage(
        &mut out,
        "coverage/",
        "leiden",
        solution.retained_sizes(),
        total,
        target,
    )?;
    let projection_cov = match &projection {
        Some(p) => Some(stage_coverage(
            &mut out,
            "coverage/",
            "projection",
            &p.sizes(),
            total,
            target,
        )?),
        None => None,
    };

    let report = RunReport {
        ingest,
        graph: graph_summary,
        cluster: ClusterReport {
            clusters: solution.partition.cluster_count(),
            retained_clusters: solution.retained,
            discarded_nodes: solution.discarded_nodes.len(),
            discarded_share: solution.discarded_share,
            quality: solution.partition.quality,
            seed: params.seed,
        },
        leiden_coverage_k: leiden_cov.k,
        projection: projection_report,
        projection_coverage_k: projection_cov.and_then(|c| c.k),
        similarity,
        warnings,
    };
    out.write_json("report.json", &report)?;
    let wall = options.timings.then(|| started.elapsed());
    out.finish("pipeline", Some(config.seed), config, wall)?;
    Ok(report)
}

/// Seed drawn from system entropy for runs that ask for a random seed.
pub fn random_seed() -> u64 {
    rand::random()
}
