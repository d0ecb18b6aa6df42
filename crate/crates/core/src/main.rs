use std::collections::HashSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use topomap::analysis::{read_membership, AffinityConfig, FlowWeight, NullModel};
use topomap::corpus::{ingest_path, CorpusFilter, DocType, ExclusionMatch, InputFormat};
use topomap::graph::{read_graph_dir, Weighting, EDGES_FILE, NODES_FILE};
use topomap::labeling::{LabelConfig, LabelMode, Normalization, UniverseMode};
use topomap::leiden::{Preset, RestartScheme};
use topomap::pipeline::{
    label_sets, load_classification, membership_sizes, random_seed, run_pipeline, stage_affinity,
    stage_cluster, stage_compare, stage_coverage, stage_graph, stage_ingest, stage_label,
    stage_project, term_vectors, ClusterConfig, Membership, OutputDir, RunConfig, RunOptions,
};
use topomap::projection::CategoryThresholds;
use topomap::{Error, Result};

const DEFAULT_OUT: &str = "topomap-out";

#[derive(Parser)]
#[command(name = "topomap", version, about = "Citation-network topic mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read publication records and apply the corpus filter.
    Ingest(IngestArgs),
    /// Build the weighted citation graph and keep its giant component.
    Graph(GraphArgs),
    /// Cluster a graph with Leiden under the Constant Potts Model.
    Cluster(ClusterArgs),
    /// Project the graph's publications onto an external classification.
    Project(ProjectArgs),
    /// Rank NMI labels (terms or journals) for each cluster.
    Label(LabelArgs),
    /// Build the cluster affinity network against the random null model.
    Affinity(AffinityArgs),
    /// Compare two cluster solutions: flow matrix, NMI and ARI.
    Compare(CompareArgs),
    /// Coverage curve of a cluster solution.
    Coverage(CoverageArgs),
    /// Run every stage from a configuration file.
    Pipeline(PipelineArgs),
}

#[derive(Args, Serialize)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "TOPOMAP_OUT")]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Record wall-clock times (outputs stop being byte-reproducible).
    #[arg(long)]
    #[serde(skip)]
    timings: bool,
}

impl OutArgs {
    fn dir(&self) -> Result<OutputDir> {
        OutputDir::create(self.out.clone().unwrap_or_else(|| DEFAULT_OUT.into()))
    }
}

/// Parses a value spelled like the library's serialized enum names; dashes
/// and underscores are interchangeable.
fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unrecognised value {s:?}"))
}

#[derive(Args, Serialize)]
struct IngestArgs {
    /// Publication records (.jsonl or .tsv).
    input: PathBuf,
    #[arg(long, default_value_t = 2000)]
    year_min: i32,
    #[arg(long, default_value_t = 2017)]
    year_max: i32,
    /// Admitted document types.
    #[arg(long, value_delimiter = ',', default_value = "article,letter,review")]
    doc_types: Vec<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct GraphArgs {
    /// Publication records (.jsonl or .tsv), usually the ingest output.
    records: PathBuf,
    #[arg(long, value_parser = parse_enum::<Weighting>, default_value = "normalized-out")]
    weighting: Weighting,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct ClusterArgs {
    /// Directory holding nodes.tsv and edges.tsv.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_parser = parse_enum::<Preset>)]
    preset: Option<Preset>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    min_size: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_parser = parse_enum::<RestartScheme>)]
    scheme: Option<RestartScheme>,
    #[arg(long, default_value_t = 0, conflicts_with = "random_seed")]
    seed: u64,
    /// Draw the seed from system entropy; it is recorded in the outputs.
    #[arg(long)]
    random_seed: bool,
    #[command(flatten)]
    out: OutArgs,
}

impl ClusterArgs {
    fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            preset: self.preset,
            gamma: self.gamma,
            iterations: self.iterations,
            random_starts: self.starts,
            theta: self.theta,
            min_cluster_size: self.min_size,
            scheme: self.scheme,
        }
    }
}

#[derive(Args, Serialize)]
struct ProjectArgs {
    #[arg(long)]
    graph: PathBuf,
    /// pub_id<TAB>microfield_id
    #[arg(long)]
    classification: PathBuf,
    /// microfield_id<TAB>global_size[<TAB>label]
    #[arg(long)]
    microfields: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    core: f64,
    #[arg(long, default_value_t = 0.15)]
    boundary: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct LabelArgs {
    /// pub_id<TAB>cluster_id (-1 for unassigned).
    #[arg(long)]
    clusters: PathBuf,
    /// Publication records supplying titles, abstracts and journals.
    #[arg(long)]
    records: PathBuf,
    #[arg(long, value_parser = parse_enum::<LabelMode>, default_value = "term")]
    mode: LabelMode,
    #[arg(long, value_parser = parse_enum::<UniverseMode>, default_value = "giant-component")]
    universe: UniverseMode,
    #[arg(long, default_value_t = 20)]
    top_n: usize,
    #[arg(long, default_value_t = 5)]
    min_doc_freq: u64,
    #[arg(long, value_parser = parse_enum::<Normalization>, default_value = "sqrt")]
    normalization: Normalization,
    /// Precomputed doc_id<TAB>term rows.
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    exclusions: Option<PathBuf>,
    #[arg(long, value_parser = parse_enum::<ExclusionMatch>, default_value = "exact")]
    exclusion_match: ExclusionMatch,
    #[arg(long, default_value_t = 3)]
    max_ngram: usize,
    /// Output file stem.
    #[arg(long, default_value = "labels")]
    name: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct AffinityArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    /// Keep only links with a binomial z-score of at least this value.
    #[arg(long)]
    min_z: Option<f64>,
    /// Count citations instead of summing their weights.
    #[arg(long)]
    raw_counts: bool,
    #[arg(long, value_parser = parse_enum::<NullModel>, default_value = "configuration")]
    null_model: NullModel,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long)]
    name_a: Option<String>,
    #[arg(long)]
    name_b: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct CoverageArgs {
    #[arg(long)]
    clusters: PathBuf,
    /// Corpus size; defaults to the number of rows in the clusters file.
    #[arg(long)]
    total: Option<u64>,
    #[arg(long, default_value_t = 0.9)]
    target: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML configuration, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, conflicts_with = "random_seed")]
    seed: Option<u64>,
    #[arg(long)]
    random_seed: bool,
    #[arg(long, value_parser = parse_enum::<Preset>)]
    preset: Option<Preset>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    min_size: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn load_membership(path: &Path) -> Result<Membership> {
    read_membership(open(path)?)
}

fn record_graph_inputs(out: &mut OutputDir, dir: &Path) -> Result<()> {
    out.record_input(&dir.join(NODES_FILE))?;
    out.record_input(&dir.join(EDGES_FILE))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "solution".into())
}

fn finish<C: Serialize>(
    out: OutputDir,
    command: &str,
    seed: Option<u64>,
    config: &C,
    timings: bool,
    started: Instant,
) -> Result<()> {
    let root = out.root().to_path_buf();
    out.finish(command, seed, config, timings.then(|| started.elapsed()))?;
    eprintln!("{command}: wrote {}", root.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    match cli.command {
        Command::Ingest(a) => {
            let filter = CorpusFilter::new(
                a.year_min,
                a.year_max,
                a.doc_types.iter().map(|d| DocType::from(d.as_str())),
            )?;
            let mut out = a.out.dir()?;
            let (_, report) = stage_ingest(&mut out, "", &a.input, &filter)?;
            eprintln!(
                "ingest: {} records, {} duplicates, {} kept",
                report.records_retrieved, report.duplicates, report.records_kept
            );
            finish(out, "ingest", None, &a, a.out.timings, started)
        }
        Command::Graph(a) => {
            let mut out = a.out.dir()?;
            out.record_input(&a.records)?;
            let records = ingest_path(&a.records, InputFormat::from_path(&a.records))?.records;
            let (giant, _) = stage_graph(&mut out, "", &records, a.weighting)?;
            eprintln!(
                "graph: giant component {} nodes, {} edges",
                giant.node_count(),
                giant.edge_count()
            );
            finish(out, "graph", None, &a, a.out.timings, started)
        }
        Command::Cluster(a) => {
            let graph = read_graph_dir(&a.graph)?;
            let seed = if a.random_seed { random_seed() } else { a.seed };
            let params = a.cluster_config().to_params(seed)?;
            let mut out = a.out.dir()?;
            record_graph_inputs(&mut out, &a.graph)?;
            let solution = stage_cluster(&mut out, "", &graph, &params, a.out.timings)?;
            eprintln!(
                "cluster: {} clusters kept, discarded share {:.4}",
                solution.retained, solution.discarded_share
            );
            let config = serde_json::json!({ "args": &a, "params": &params });
            finish(out, "cluster", Some(seed), &config, a.out.timings, started)
        }
        Command::Project(a) => {
            let graph = read_graph_dir(&a.graph)?;
            let map = load_classification(&a.classification, a.microfields.as_deref())?;
            let mut out = a.out.dir()?;
            record_graph_inputs(&mut out, &a.graph)?;
            out.record_input(&a.classification)?;
            if let Some(m) = &a.microfields {
                out.record_input(m)?;
            }
            let thresholds = CategoryThresholds {
                core: a.core,
                boundary: a.boundary,
            };
            let (_, report) = stage_project(&mut out, "", graph.ids(), &map, a.top_k, thresholds)?;
            eprintln!(
                "project: {} clusters, {} unmapped",
                report.clusters, report.unmapped
            );
            finish(out, "project", None, &a, a.out.timings, started)
        }
        Command::Label(a) => {
            let membership = load_membership(&a.clusters)?;
            let listed: HashSet<&str> = membership.iter().map(|(d, _)| d.as_str()).collect();
            let records: Vec<_> = ingest_path(&a.records, InputFormat::from_path(&a.records))?
                .records
                .into_iter()
                .filter(|r| listed.contains(r.id.as_str()))
                .collect();
            let mut out = a.out.dir()?;
            out.record_input(&a.clusters)?;
            out.record_input(&a.records)?;
            for p in [&a.terms, &a.stopwords, &a.exclusions]
                .into_iter()
                .flatten()
            {
                out.record_input(p)?;
            }
            let terms = match a.mode {
                LabelMode::Term => term_vectors(
                    &records,
                    a.terms.as_deref(),
                    a.stopwords.as_deref(),
                    a.exclusions.as_deref(),
                    a.exclusion_match,
                    a.max_ngram,
                )?,
                LabelMode::Journal => Vec::new(),
            };
            let sets = label_sets(a.mode, &records, &terms);
            let config = LabelConfig {
                universe: a.universe,
                top_n: a.top_n,
                min_doc_freq: a.min_doc_freq,
                normalization: a.normalization,
            };
            stage_label(&mut out, "", &a.name, &membership, &sets, a.mode, &config)?;
            finish(out, "label", None, &a, a.out.timings, started)
        }
        Command::Affinity(a) => {
            let graph = read_graph_dir(&a.graph)?;
            let membership = load_membership(&a.clusters)?;
            let mut out = a.out.dir()?;
            record_graph_inputs(&mut out, &a.graph)?;
            out.record_input(&a.clusters)?;
            let config = AffinityConfig {
                threshold: a.threshold,
                min_z: a.min_z,
                flow: if a.raw_counts {
                    FlowWeight::RawCounts
                } else {
                    FlowWeight::Weighted
                },
                null_model: a.null_model,
            };
            let net = stage_affinity(&mut out, "", "affinity", &graph, &membership, &config)?;
            if let Some(w) = &net.warning {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "affinity: {} nodes, {} links",
                net.nodes.len(),
                net.edges.len()
            );
            finish(out, "affinity", None, &a, a.out.timings, started)
        }
        Command::Compare(a) => {
            let ma = load_membership(&a.a)?;
            let mb = load_membership(&a.b)?;
            let name_a = a.name_a.clone().unwrap_or_else(|| stem(&a.a));
            let name_b = a.name_b.clone().unwrap_or_else(|| stem(&a.b));
            let mut out = a.out.dir()?;
            out.record_input(&a.a)?;
            out.record_input(&a.b)?;
            let s = stage_compare(&mut out, "", (&name_a, &ma), (&name_b, &mb))?;
            println!("shared\t{}\nnmi\t{}\nari\t{}", s.shared, s.nmi, s.ari);
            finish(out, "compare", None, &a, a.out.timings, started)
        }
        Command::Coverage(a) => {
            let membership = load_membership(&a.clusters)?;
            let total = a.total.unwrap_or(membership.len() as u64);
            let mut out = a.out.dir()?;
            out.record_input(&a.clusters)?;
            let sizes = membership_sizes(&membership);
            let s = stage_coverage(&mut out, "", "coverage", &sizes, total, a.target)?;
            match s.k {
                Some(k) => println!("{k} clusters reach {} of {total}", a.target),
                None => println!(
                    "target {} not reached by {} clusters",
                    a.target, s.cluster_count
                ),
            }
            finish(out, "coverage", None, &a, a.out.timings, started)
        }
        Command::Pipeline(a) => {
            let mut config = RunConfig::load(&a.config)?;
            if a.random_seed {
                config.seed = random_seed();
            } else if let Some(seed) = a.seed {
                config.seed = seed;
            }
            let c = &mut config.cluster;
            c.preset = a.preset.or(c.preset);
            c.gamma = a.gamma.or(c.gamma);
            c.min_cluster_size = a.min_size.or(c.min_cluster_size);
            c.random_starts = a.starts.or(c.random_starts);
            c.iterations = a.iterations.or(c.iterations);
            config.projection.top_k = a.top_k.or(config.projection.top_k);
            let out = a
                .out
                .out
                .clone()
                .or_else(|| config.output_dir.clone())
                .unwrap_or_else(|| DEFAULT_OUT.into());
            let report = run_pipeline(
                &config,
                &out,
                RunOptions {
                    timings: a.out.timings,
                },
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("pipeline: wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            let category = match kind {
                topomap::ErrorKind::MissingInput => "missing input",
                topomap::ErrorKind::Schema => "schema",
                topomap::ErrorKind::Invariant => "invariant",
            };
            eprintln!("error ({category}): {e}");
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
