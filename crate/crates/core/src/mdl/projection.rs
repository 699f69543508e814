use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClusterError, Partition};
use crate::hin::{Hin, HinMeta, Node, NodeLabel, COMPOSITE_SEPARATOR};
use crate::pruning::{prune, NullModelSpec, PruneResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectedRow {
    /// Set2 index in the source network.
    pub target: usize,
    pub label: NodeLabel,
    /// Summed weight from every cluster member to `target`.
    pub weight: u64,
    /// First label part when the label is composite.
    pub code: Option<String>,
    /// Remaining label parts when the label is composite.
    pub partner: Option<String>,
}

/// Weight from one cluster onto Set2, one row per target with positive
/// weight, in Set2 order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectedNetwork {
    pub cluster_id: usize,
    pub members: Vec<usize>,
    pub rows: Vec<ProjectedRow>,
}

impl ProjectedNetwork {
    pub fn total_weight(&self) -> u64 {
        self.rows.iter().map(|r| r.weight).sum()
    }

    pub fn is_composite(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.code.is_some())
    }

    /// Re-expresses the projection as a code x partner network.
    pub fn to_bipartite(&self) -> Result<Hin, ClusterError> {
        if !self.is_composite() {
            return Err(ClusterError::NotBipartiteProjection);
        }
        let split = |r: &ProjectedRow| {
            (
                r.code.clone().expect("composite"),
                r.partner.clone().expect("composite"),
            )
        };
        let codes: BTreeSet<String> = self.rows.iter().map(|r| split(r).0).collect();
        let partners: BTreeSet<String> = self.rows.iter().map(|r| split(r).1).collect();
        let index = |set: &BTreeSet<String>| -> BTreeMap<String, usize> {
            set.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect()
        };
        let (ci, pi) = (index(&codes), index(&partners));
        let edges: Vec<(usize, usize, u64)> = self
            .rows
            .iter()
            .map(|r| {
                let (c, p) = split(r);
                (ci[&c], pi[&p], r.weight)
            })
            .collect();
        let nodes = |set: BTreeSet<String>| -> Vec<Node> {
            set.into_iter().map(|s| Node::new(NodeLabel::simple(&s))).collect()
        };
        Ok(Hin::from_nodes(nodes(codes), nodes(partners), edges, self.meta("code x partner"))?)
    }

    /// Canonical graph form: the code x partner network for composite
    /// targets, otherwise a star from one cluster node to its targets.
    pub fn to_hin(&self) -> Result<Hin, ClusterError> {
        if self.is_composite() {
            return self.to_bipartite();
        }
        let hub = Node::new(NodeLabel::simple(&format!("cluster {}", self.cluster_id)));
        let targets = self.rows.iter().map(|r| Node::new(r.label.clone())).collect();
        let edges = self.rows.iter().enumerate().map(|(j, r)| (0, j, r.weight));
        Ok(Hin::from_nodes(vec![hub], targets, edges, self.meta("cluster x target"))?)
    }

    fn meta(&self, form: &str) -> HinMeta {
        HinMeta {
            name: Some(format!("cluster {} projection", self.cluster_id)),
            built_from: Some(form.into()),
        }
    }
}

pub fn project_cluster(
    hin: &Hin,
    partition: &Partition,
    cluster_id: usize,
) -> Result<ProjectedNetwork, ClusterError> {
    if partition.len() != hin.n1() {
        return Err(ClusterError::InvalidPartition(format!(
            "partition covers {} nodes but N1 = {}",
            partition.len(),
            hin.n1()
        )));
    }
    if cluster_id >= partition.num_groups() {
        return Err(ClusterError::UnknownCluster(cluster_id));
    }
    let members = partition.members(cluster_id);
    let mut totals = vec![0u64; hin.n2()];
    for &i in &members {
        for e in hin.row(i) {
            totals[e.target] += e.weight;
        }
    }
    let rows = totals
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w > 0)
        .map(|(target, weight)| {
            let label = hin.set2()[target].label().clone();
            let (code, partner) = match label.parts() {
                [first, rest @ ..] if !rest.is_empty() => {
                    (Some(first.clone()), Some(rest.join(COMPOSITE_SEPARATOR)))
                }
                _ => (None, None),
            };
            ProjectedRow {
                target,
                label,
                weight,
                code,
                partner,
            }
        })
        .collect();
    Ok(ProjectedNetwork {
        cluster_id,
        members,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPrune {
    pub graph: Hin,
    pub result: PruneResult,
}

/// Significant code-partner associations within one cluster.
pub fn prune_projection(
    projection: &ProjectedNetwork,
    spec: &NullModelSpec,
) -> Result<ProjectionPrune, ClusterError> {
    let graph = projection.to_bipartite()?;
    let result = prune(&graph, spec)?;
    Ok(ProjectionPrune { graph, result })
}
