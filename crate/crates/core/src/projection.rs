//! Projection of the corpus onto an external classification: one cluster per
//! microfield intersection, ranked by size, plus core/boundary categories and
//! coverage curves.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassificationMap {
    pub assignment: HashMap<String, String>,
    /// Global publication count per microfield, when known.
    pub microfield_sizes: HashMap<String, u64>,
    pub microfield_labels: HashMap<String, String>,
}

fn rows<R: BufRead>(reader: R, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(|c| c.trim().to_string()).collect();
        if out.is_empty() && cols[0] == header {
            continue;
        }
        out.push((i + 1, cols));
    }
    Ok(out)
}

impl ClassificationMap {
    /// Reads `pub_id<TAB>microfield_id` rows. A publication listed twice with
    /// different microfields is rejected.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut map = ClassificationMap::default();
        for (line, cols) in rows(reader, "pub_id")? {
            let (Some(pub_id), Some(field)) = (cols.first(), cols.get(1)) else {
                return Err(Error::malformed(line, "expected pub_id, microfield_id"));
            };
            if pub_id.is_empty() || field.is_empty() {
                return Err(Error::malformed(line, "empty pub_id or microfield_id"));
            }
            if let Some(prev) = map.assignment.insert(pub_id.clone(), field.clone()) {
                if prev != *field {
                    return Err(Error::malformed(
                        line,
                        format!("{pub_id} mapped to both {prev} and {field}"),
                    ));
                }
            }
        }
        Ok(map)
    }

    /// Reads `microfield_id<TAB>global_size[<TAB>label]` rows.
    pub fn read_metadata<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (line, cols) in rows(reader, "microfield_id")? {
            let field = cols
                .first()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::malformed(line, "empty microfield_id"))?;
            let size_raw = cols.get(1).map(String::as_str).unwrap_or("");
            let size = size_raw
                .parse::<u64>()
                .map_err(|_| Error::malformed(line, format!("bad global_size {size_raw:?}")))?;
            self.microfield_sizes.insert(field.clone(), size);
            if let Some(label) = cols.get(2).filter(|s| !s.is_empty()) {
                self.microfield_labels.insert(field.clone(), label.clone());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicrofieldCategory {
    BoundaryCrossing,
    Boundary,
    Core,
}

impl fmt::Display for MicrofieldCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MicrofieldCategory::Core => "core",
            MicrofieldCategory::Boundary => "boundary",
            MicrofieldCategory::BoundaryCrossing => "boundary_crossing",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryThresholds {
    pub core: f64,
    pub boundary: f64,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        CategoryThresholds {
            core: 0.50,
            boundary: 0.15,
        }
    }
}

/// Share of a microfield's publications inside the corpus mapped to a category.
pub fn categorize_microfield(
    share: f64,
    core_threshold: f64,
    boundary_threshold: f64,
) -> Result<MicrofieldCategory> {
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::InvalidArgument(format!(
            "share {share} outside [0, 1]"
        )));
    }
    if boundary_threshold >= core_threshold {
        return Err(Error::InvalidArgument(format!(
            "boundary threshold {boundary_threshold} must be below core threshold {core_threshold}"
        )));
    }
    Ok(if share >= core_threshold {
        MicrofieldCategory::Core
    } else if share >= boundary_threshold {
        MicrofieldCategory::Boundary
    } else {
        MicrofieldCategory::BoundaryCrossing
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCluster {
    pub id: usize,
    pub microfield: String,
    /// Sorted member ids.
    pub members: Vec<String>,
    pub share: Option<f64>,
    pub category: Option<MicrofieldCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub clusters: Vec<ProjectionCluster>,
    /// Corpus ids absent from the classification, sorted.
    pub unmapped: Vec<String>,
    /// Clusters and members cut off by `top_k`.
    pub truncated_clusters: usize,
    pub truncated_members: usize,
    pub corpus_size: usize,
}

/// Groups corpus ids by microfield. Clusters are ranked by member count
/// (ties: smaller microfield id) and numbered from 0 in that order.
pub fn project<'a, I>(
    corpus: I,
    map: &ClassificationMap,
    top_k: Option<usize>,
) -> Result<Projection>
where
    I: IntoIterator<Item = &'a str>,
{
    let ids: HashSet<&str> = corpus.into_iter().collect();
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut unmapped = Vec::new();
    for &id in &ids {
        match map.assignment.get(id) {
            Some(field) => groups
                .entry(field.as_str())
                .or_default()
                .push(id.to_string()),
            None => unmapped.push(id.to_string()),
        }
    }
    unmapped.sort();

    let mut ranked: Vec<(&str, Vec<String>)> = groups.into_iter().collect();
    ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));

    let keep = top_k.unwrap_or(usize::MAX).min(ranked.len());
    let truncated_clusters = ranked.len() - keep;
    let truncated_members = ranked[keep..].iter().map(|(_, m)| m.len()).sum();

    let mut clusters = Vec::with_capacity(keep);
    for (rank, (field, mut members)) in ranked.into_iter().take(keep).enumerate() {
        members.sort();
        let share = match map.microfield_sizes.get(field) {
            Some(&global) if (global as usize) < members.len() => {
                return Err(Error::Invariant(format!(
                    "microfield {field} has global size {global} but {} corpus members",
                    members.len()
                )))
            }
            Some(&global) => Some(members.len() as f64 / global as f64),
            None => None,
        };
        clusters.push(ProjectionCluster {
            id: rank,
            microfield: field.to_string(),
            members,
            share,
            category: None,
        });
    }
    Ok(Projection {
        clusters,
        unmapped,
        truncated_clusters,
        truncated_members,
        corpus_size: ids.len(),
    })
}

impl Projection {
    /// Fills in categories for clusters with a known share.
    pub fn categorize(&mut self, thresholds: CategoryThresholds) -> Result<()> {
        for c in &mut self.clusters {
            c.category = c
                .share
                .map(|s| categorize_microfield(s, thresholds.core, thresholds.boundary))
                .transpose()?;
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.clusters
            .iter()
            .map(|c| c.members.len() as u64)
            .collect()
    }

    /// Member id -> cluster id.
    pub fn membership(&self) -> HashMap<&str, usize> {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter().map(move |m| (m.as_str(), c.id)))
            .collect()
    }

    pub fn write_clusters_tsv<W: Write>(&self, map: &ClassificationMap, mut out: W) -> Result<()> {
        writeln!(
            out,
            "cluster_id\tmicrofield_id\tmember_count\tshare\tcategory\tlabel"
        )?;
        for c in &self.clusters {
            let share = c.share.map_or_else(|| "NA".to_string(), |s| s.to_string());
            let category = c
                .category
                .map_or_else(|| "NA".to_string(), |k| k.to_string());
            let label = map
                .microfield_labels
                .get(&c.microfield)
                .map(String::as_str)
                .unwrap_or("");
            writeln!(
                out,
                "{}\t{}\t{}\t{share}\t{category}\t{label}",
                c.id,
                c.microfield,
                c.members.len()
            )?;
        }
        Ok(())
    }

    /// `pub_id<TAB>cluster_id` for every corpus id in the given order;
    /// unmapped or truncated ids get -1.
    pub fn write_membership_tsv<'a, W, I>(&self, corpus: I, mut out: W) -> Result<()>
    where
        W: Write,
        I: IntoIterator<Item = &'a str>,
    {
        let membership = self.membership();
        writeln!(out, "pub_id\tcluster_id")?;
        for id in corpus {
            match membership.get(id) {
                Some(c) => writeln!(out, "{id}\t{c}")?,
                None => writeln!(out, "{id}\t-1")?,
            }
        }
        Ok(())
    }
}

/// Cumulative share `(k, sum of the k largest sizes / total)` for k = 1..=n.
pub fn coverage_curve(sizes: &[u64], total: u64) -> Result<Vec<(usize, f64)>> {
    if sizes.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "sizes must be sorted descending".into(),
        ));
    }
    let sum: u64 = sizes.iter().sum();
    if total < sum || total == 0 {
        return Err(Error::InvalidArgument(format!(
            "total {total} must be positive and at least the summed size {sum}"
        )));
    }
    let mut acc = 0u64;
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            acc += s;
            (i + 1, acc as f64 / total as f64)
        })
        .collect())
}

/// Smallest k whose cumulative share reaches `target`; `None` when even all
/// clusters fall short.
pub fn smallest_k(curve: &[(usize, f64)], target: f64) -> Option<usize> {
    if target <= 0.0 {
        return Some(0);
    }
    curve.iter().find(|&&(_, s)| s >= target).map(|&(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub target: f64,
    pub total: u64,
    pub cluster_count: usize,
    /// `None` when the target is unreachable.
    pub k: Option<usize>,
    pub share_at_k: Option<f64>,
    /// Size of the k-th largest cluster.
    pub smallest_size_at_k: Option<u64>,
    pub curve: Vec<(usize, f64)>,
}

pub fn coverage_summary(sizes: &[u64], total: u64, target: f64) -> Result<CoverageSummary> {
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let curve = coverage_curve(&sorted, total)?;
    let k = smallest_k(&curve, target);
    let at = k.filter(|&k| k > 0);
    Ok(CoverageSummary {
        target,
        total,
        cluster_count: sorted.len(),
        k,
        share_at_k: at.map(|k| curve[k - 1].1),
        smallest_size_at_k: at.map(|k| sorted[k - 1]),
        curve,
    })
}
