use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AffinityConfig;
use crate::corpus::{CorpusFilter, DocType, ExclusionMatch, DEFAULT_MAX_NGRAM};
use crate::error::{Error, Result};
use crate::graph::Weighting;
use crate::labeling::{LabelMode, Normalization, UniverseMode};
use crate::leiden::{CpmParams, Preset, RestartScheme};
use crate::projection::CategoryThresholds;

/// Full pipeline configuration, read from a single TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Top-level seed every random choice derives from.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; not part of the recorded configuration.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub inputs: Inputs,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub labeling: LabelingConfig,
    #[serde(default)]
    pub affinity: AffinityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Publication records, JSON Lines or TSV.
    pub publications: PathBuf,
    /// `pub_id<TAB>microfield_id` external classification.
    #[serde(default)]
    pub classification: Option<PathBuf>,
    /// `microfield_id<TAB>global_size[<TAB>label]`.
    #[serde(default)]
    pub microfields: Option<PathBuf>,
    /// Precomputed `doc_id<TAB>term` rows; terms are extracted when absent.
    #[serde(default)]
    pub terms: Option<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Terms never used as labels; the built-in query phrases when absent.
    #[serde(default)]
    pub exclusions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub year_min: i32,
    pub year_max: i32,
    pub doc_types: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let f = CorpusFilter::default();
        FilterConfig {
            year_min: f.year_min,
            year_max: f.year_max,
            doc_types: f.allowed_doc_types.iter().map(|d| d.to_string()).collect(),
        }
    }
}

impl FilterConfig {
    pub fn to_filter(&self) -> Result<CorpusFilter> {
        CorpusFilter::new(
            self.year_min,
            self.year_max,
            self.doc_types.iter().map(|d| DocType::from(d.as_str())),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub weighting: Weighting,
}

/// Clustering settings. Unset values come from the preset, or from the
/// library defaults when no preset is named.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub preset: Option<Preset>,
    pub gamma: Option<f64>,
    pub iterations: Option<usize>,
    pub random_starts: Option<usize>,
    pub theta: Option<f64>,
    pub min_cluster_size: Option<u64>,
    pub scheme: Option<RestartScheme>,
}

impl ClusterConfig {
    pub fn to_params(&self, seed: u64) -> Result<CpmParams> {
        let mut p = self.preset.map(CpmParams::preset).unwrap_or_default();
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.iterations {
            p.iterations = v;
        }
        if let Some(v) = self.random_starts {
            p.random_starts = v;
        }
        if let Some(v) = self.theta {
            p.theta = v;
        }
        if let Some(v) = self.min_cluster_size {
            p.min_cluster_size = v;
        }
        if let Some(v) = self.scheme {
            p.scheme = v;
        }
        p.seed = seed;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub top_k: Option<usize>,
    pub core_threshold: f64,
    pub boundary_threshold: f64,
    /// Share of the giant component the coverage report asks about.
    pub coverage_target: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        let t = CategoryThresholds::default();
        ProjectionConfig {
            top_k: None,
            core_threshold: t.core,
            boundary_threshold: t.boundary,
            coverage_target: 0.9,
        }
    }
}

impl ProjectionConfig {
    pub fn thresholds(&self) -> CategoryThresholds {
        CategoryThresholds {
            core: self.core_threshold,
            boundary: self.boundary_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingConfig {
    pub modes: Vec<LabelMode>,
    pub top_n: usize,
    pub min_doc_freq: u64,
    pub normalization: Normalization,
    pub max_ngram: usize,
    pub exclusion_match: ExclusionMatch,
    pub leiden_universe: UniverseMode,
    pub projection_universe: UniverseMode,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            modes: vec![LabelMode::Term, LabelMode::Journal],
            top_n: 20,
            min_doc_freq: 5,
            normalization: Normalization::Sqrt,
            max_ngram: DEFAULT_MAX_NGRAM,
            exclusion_match: ExclusionMatch::Exact,
            leiden_universe: UniverseMode::GiantComponent,
            projection_universe: UniverseMode::SolutionMembers,
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) -> Result<()> {
    let joined = if p.is_absolute() {
        p.clone()
    } else {
        base.join(&*p)
    };
    *p = std::path::absolute(&joined).map_err(|e| Error::io(&joined, e))?;
    Ok(())
}

fn require(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            p,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config file, or the configuration embedded in a run's
    /// `manifest.json`. Relative paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            let mut value: serde_json::Value = serde_json::from_str(&text)?;
            if let Some(embedded) = value.get_mut("config") {
                value = embedded.take();
            }
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?
        } else {
            Self::from_toml(&text)?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base)?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        let i = &mut self.inputs;
        resolve(base, &mut i.publications)?;
        for p in [
            &mut i.classification,
            &mut i.microfields,
            &mut i.terms,
            &mut i.stopwords,
            &mut i.exclusions,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p)?;
        }
        if let Some(out) = &mut self.output_dir {
            resolve(base, out)?;
        }
        Ok(())
    }

    /// Checks that every referenced input exists and every section is valid.
    pub fn validate(&self) -> Result<()> {
        let i = &self.inputs;
        require(&i.publications)?;
        for p in [
            &i.classification,
            &i.microfields,
            &i.terms,
            &i.stopwords,
            &i.exclusions,
        ]
        .into_iter()
        .flatten()
        {
            require(p)?;
        }
        if i.microfields.is_some() && i.classification.is_none() {
            return Err(Error::Config(
                "microfields given without classification".into(),
            ));
        }
        self.filter.to_filter()?;
        self.cluster.to_params(self.seed)?;
        let t = self.projection.thresholds();
        if !(0.0 <= t.boundary && t.boundary <= t.core && t.core <= 1.0) {
            return Err(Error::Config(format!(
                "category thresholds must satisfy 0 <= boundary <= core <= 1, got {} and {}",
                t.boundary, t.core
            )));
        }
        if !(self.projection.coverage_target > 0.0 && self.projection.coverage_target <= 1.0) {
            return Err(Error::Config("coverage_target must lie in (0, 1]".into()));
        }
        if self.labeling.top_n == 0 || self.labeling.max_ngram == 0 {
            return Err(Error::Config("top_n and max_ngram must be positive".into()));
        }
        if self.affinity.threshold.is_nan() || self.affinity.threshold < 0.0 {
            return Err(Error::Config(
                "affinity threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seed = 7\n[inputs]\npublications = \"pubs.jsonl\"\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.filter.to_filter().unwrap(), CorpusFilter::default());
        let p = c.cluster.to_params(c.seed).unwrap();
        assert_eq!((p.iterations, p.random_starts, p.seed), (100, 10, 7));
        assert_eq!(c.labeling.min_doc_freq, 5);
    }

    #[test]
    fn preset_values_yield_to_explicit_ones() {
        let text = format!("{MINIMAL}[cluster]\npreset = \"fine\"\nmin_cluster_size = 10\n");
        let c = RunConfig::from_toml(&text).unwrap();
        let p = c.cluster.to_params(0).unwrap();
        assert_eq!(p.gamma, 8e-5);
        assert_eq!(p.min_cluster_size, 10);
    }

    #[test]
    fn unknown_keys_are_schema_errors() {
        let err = RunConfig::from_toml(&format!("{MINIMAL}[cluster]\ngama = 1\n")).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Schema);
    }

    #[test]
    fn missing_input_file_is_reported() {
        let mut c = RunConfig::from_toml(MINIMAL).unwrap();
        c.resolve_paths(Path::new("/nonexistent-dir")).unwrap();
        assert_eq!(
            c.validate().unwrap_err().kind(),
            crate::ErrorKind::MissingInput
        );
    }

    #[test]
    fn output_dir_is_not_recorded() {
        let mut c = RunConfig::from_toml(MINIMAL).unwrap();
        c.output_dir = Some("somewhere".into());
        let json = serde_json::to_string(&c).unwrap();
        assert!(!json.contains("somewhere"));
    }
}
