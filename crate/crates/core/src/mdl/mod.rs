//! Nonparametric clustering of Set1 nodes by minimum description length.
//!
//! A partition is scored by the number of bits needed to transmit the
//! network when Set1 is coarse-grained into communities (see
//! [`description`]). Search strategies live behind [`PartitionSearch`]: an
//! agglomerative greedy merge for real use and an exhaustive enumeration as
//! a test oracle.

pub mod description;
mod exhaustive;
mod greedy;
mod projection;
mod search;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{Hin, HinError};
use crate::pruning::PruneError;

pub use description::{description_length, description_terms, DlTerms, LnFactorial};
pub use exhaustive::{exhaustive_cluster, DEFAULT_MAX_N1};
pub use greedy::{cluster, cluster_with_ordering};
pub use projection::{
    project_cluster, prune_projection, ProjectedNetwork, ProjectedRow, ProjectionPrune,
};
pub use search::{ExhaustiveSearch, GreedyMerge, PartitionSearch, SearchOptions, SearchRegistry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("exhaustive search over {n1} nodes exceeds the limit of {max}")]
    TooLarge { n1: usize, max: usize },
    #[error("cluster {0} does not exist in the partition")]
    UnknownCluster(usize),
    #[error("projection targets are not composite labels, so it has no code x partner form")]
    NotBipartiteProjection,
    #[error("unknown search method {0:?}")]
    UnknownMethod(String),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Hin(#[from] HinError),
}

impl ClusterError {
    pub fn name(&self) -> &'static str {
        match self {
            ClusterError::InvalidPartition(_) => "InvalidPartition",
            ClusterError::TooLarge { .. } => "TooLarge",
            ClusterError::UnknownCluster(_) => "UnknownCluster",
            ClusterError::NotBipartiteProjection => "NotBipartiteProjection",
            ClusterError::UnknownMethod(_) => "UnknownMethod",
            ClusterError::Prune(e) => e.name(),
            ClusterError::Hin(e) => e.name(),
        }
    }
}

/// Group labels over Set1, kept dense (`0..B`) and numbered by first
/// appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PartitionDocument", into = "PartitionDocument")]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Relabels arbitrary group ids densely in order of first appearance.
    pub fn from_labels(raw: &[usize]) -> Result<Self, ClusterError> {
        if raw.is_empty() {
            return Err(ClusterError::InvalidPartition("no nodes".into()));
        }
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut sizes = Vec::new();
        let labels = raw
            .iter()
            .map(|&g| {
                let next = remap.len();
                let id = *remap.entry(g).or_insert(next);
                if id == sizes.len() {
                    sizes.push(0);
                }
                sizes[id] += 1;
                id
            })
            .collect();
        Ok(Self { labels, sizes })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            sizes: vec![1; n],
        }
    }

    pub fn one_group(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            sizes: vec![n],
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn members(&self, group: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &g)| g == group)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionDocument {
    labels: Vec<usize>,
    #[serde(rename = "B", default)]
    groups: usize,
    #[serde(default)]
    sizes: Vec<usize>,
}

impl TryFrom<PartitionDocument> for Partition {
    type Error = ClusterError;

    fn try_from(doc: PartitionDocument) -> Result<Self, Self::Error> {
        Partition::from_labels(&doc.labels)
    }
}

impl From<Partition> for PartitionDocument {
    fn from(p: Partition) -> Self {
        PartitionDocument {
            groups: p.num_groups(),
            labels: p.labels,
            sizes: p.sizes,
        }
    }
}

/// Total weight from each community to each Set2 node, dense `B x N2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockWeights {
    n2: usize,
    cells: Vec<u64>,
}

impl BlockWeights {
    pub fn new(hin: &Hin, partition: &Partition) -> Self {
        let n2 = hin.n2();
        let mut cells = vec![0u64; partition.num_groups() * n2];
        for e in hin.edges() {
            cells[partition.labels()[e.source] * n2 + e.target] += e.weight;
        }
        Self { n2, cells }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.cells[r * self.n2..(r + 1) * self.n2]
    }

    pub fn get(&self, r: usize, j: usize) -> u64 {
        self.cells[r * self.n2 + j]
    }

    pub fn num_groups(&self) -> usize {
        self.cells.len() / self.n2.max(1)
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub step: usize,
    /// Smallest original Set1 index in each of the two merged clusters.
    pub merged: (usize, usize),
    pub delta_dl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub method: String,
    #[serde(flatten)]
    pub best_partition: Partition,
    #[serde(rename = "dl_bits")]
    pub best_dl: f64,
    /// `(B, DL)` for every visited number of groups, from `N1` down to 1.
    #[serde(rename = "trace")]
    pub dl_trace: Vec<(usize, f64)>,
    pub merge_log: Vec<MergeStep>,
}

/// Two description lengths closer than this are treated as tied.
pub const DL_TIE_TOLERANCE: f64 = 1e-9;

/// Lowest DL on the trace; ties go to the smaller `B`.
pub(crate) fn best_on_trace(trace: &[(usize, f64)]) -> (usize, f64) {
    let mut best = trace[0];
    for &(b, dl) in &trace[1..] {
        if dl < best.1 - DL_TIE_TOLERANCE || ((dl - best.1).abs() <= DL_TIE_TOLERANCE && b < best.0) {
            best = (b, dl);
        }
    }
    best
}

/// Normalized mutual information `2 I(a; b) / (H(a) + H(b))`; two trivial
/// partitions score 1.
pub fn normalized_mutual_information(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must cover the same nodes");
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0 / n;
        *pa.entry(x).or_default() += 1.0 / n;
        *pb.entry(y).or_default() += 1.0 / n;
    }
    let entropy = |p: &HashMap<usize, f64>| -p.values().map(|&v| v * v.ln()).sum::<f64>();
    let (ha, hb) = (entropy(&pa), entropy(&pb));
    if ha + hb == 0.0 {
        return 1.0;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &pxy)| pxy * (pxy / (pa[&x] * pb[&y])).ln())
        .sum();
    (2.0 * mi / (ha + hb)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_relabels_densely() {
        let p = Partition::from_labels(&[7, 7, 3, 9, 3]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.sizes(), &[2, 2, 1]);
        assert_eq!(p.members(1), vec![2, 4]);
        assert!(Partition::from_labels(&[]).is_err());
    }

    #[test]
    fn partition_json() {
        let p = Partition::from_labels(&[1, 0, 1]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"labels":[0,1,0],"B":2,"sizes":[2,1]}"#);
        assert_eq!(serde_json::from_str::<Partition>(&text).unwrap(), p);
    }

    #[test]
    fn nmi_values() {
        assert_eq!(normalized_mutual_information(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        assert!(normalized_mutual_information(&[0, 0, 1, 1], &[0, 1, 0, 1]).abs() < 1e-12);
        assert_eq!(normalized_mutual_information(&[0, 0], &[3, 3]), 1.0);
    }

    #[test]
    fn trace_ties_prefer_fewer_groups() {
        assert_eq!(best_on_trace(&[(3, 5.0), (2, 4.0), (1, 4.0)]), (1, 4.0));
        assert_eq!(best_on_trace(&[(3, 5.0), (2, 3.0), (1, 4.0)]), (2, 3.0));
    }
}
