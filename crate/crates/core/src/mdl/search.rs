use serde::{Deserialize, Serialize};

use super::{cluster, exhaustive_cluster, ClusterError, ClusterResult, DEFAULT_MAX_N1};
use crate::hin::Hin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    pub seed: Option<u64>,
    pub restarts: usize,
    /// Size limit for strategies that enumerate partitions.
    pub max_n1: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            seed: None,
            restarts: 1,
            max_n1: DEFAULT_MAX_N1,
        }
    }
}

/// A strategy for minimizing description length over Set1 partitions.
pub trait PartitionSearch: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn search(&self, hin: &Hin, options: &SearchOptions) -> Result<ClusterResult, ClusterError>;
}

pub struct GreedyMerge;

impl PartitionSearch for GreedyMerge {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn description(&self) -> &'static str {
        "agglomerative merging from singletons, lowest DL change first"
    }

    fn search(&self, hin: &Hin, options: &SearchOptions) -> Result<ClusterResult, ClusterError> {
        Ok(cluster(hin, options.seed, options.restarts))
    }
}

pub struct ExhaustiveSearch;

impl PartitionSearch for ExhaustiveSearch {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn description(&self) -> &'static str {
        "enumerates every set partition; small Set1 only"
    }

    fn search(&self, hin: &Hin, options: &SearchOptions) -> Result<ClusterResult, ClusterError> {
        exhaustive_cluster(hin, options.max_n1)
    }
}

static REGISTRY: [&dyn PartitionSearch; 2] = [&GreedyMerge, &ExhaustiveSearch];

pub struct SearchRegistry;

impl SearchRegistry {
    pub fn all() -> &'static [&'static dyn PartitionSearch] {
        &REGISTRY
    }

    pub fn get(name: &str) -> Result<&'static dyn PartitionSearch, ClusterError> {
        REGISTRY
            .iter()
            .copied()
            .find(|s| s.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| ClusterError::UnknownMethod(name.to_string()))
    }

    pub fn names() -> Vec<&'static str> {
        REGISTRY.iter().map(|s| s.name()).collect()
    }
}
