//! The heterogeneous interaction network: an immutable weighted bipartite
//! graph between two typed node sets.
//!
//! Nodes are addressed by dense indices within their set. Edges are stored
//! sorted by `(source, target)`, which doubles as a CSR layout over Set1, and
//! node strengths plus the total weight are cached at construction time.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separator used when rendering composite labels for display.
pub const COMPOSITE_SEPARATOR: &str = " **";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HinError {
    #[error("label references undeclared {set} node {label}")]
    UnknownLabel { set: SetSide, label: String },
    #[error("edge ({set1_index}, {set2_index}) has non-positive weight {weight}")]
    NonPositiveWeight {
        set1_index: usize,
        set2_index: usize,
        weight: i64,
    },
    #[error("{set} declares label {label} more than once")]
    DuplicateLabelInSet { set: SetSide, label: String },
    #[error("{set} index {index} is out of range (size {size})")]
    IndexOutOfRange {
        set: SetSide,
        index: usize,
        size: usize,
    },
    #[error("invalid node label: {0}")]
    InvalidLabel(String),
    #[error("{0} has no nodes")]
    EmptyNodeSet(SetSide),
    #[error("no Set1 node was selected")]
    EmptySelection,
    #[error("malformed graph document: {0}")]
    Malformed(String),
}

impl HinError {
    pub fn name(&self) -> &'static str {
        match self {
            HinError::UnknownLabel { .. } => "UnknownLabel",
            HinError::NonPositiveWeight { .. } => "NonPositiveWeight",
            HinError::DuplicateLabelInSet { .. } => "DuplicateLabelInSet",
            HinError::IndexOutOfRange { .. } => "IndexOutOfRange",
            HinError::InvalidLabel(_) => "InvalidLabel",
            HinError::EmptyNodeSet(_) => "EmptyNodeSet",
            HinError::EmptySelection => "EmptySelection",
            HinError::Malformed(_) => "Malformed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetSide {
    Set1,
    Set2,
}

impl fmt::Display for SetSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSide::Set1 => f.write_str("set1"),
            SetSide::Set2 => f.write_str("set2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub set: SetSide,
    pub index: usize,
}

impl NodeRef {
    pub fn set1(index: usize) -> Self {
        Self {
            set: SetSide::Set1,
            index,
        }
    }

    pub fn set2(index: usize) -> Self {
        Self {
            set: SetSide::Set2,
            index,
        }
    }
}

/// Ordered label parts. A single part names a simple entity; two or more
/// name a composite entity such as `(content code, partner)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NodeLabel(Vec<String>);

impl NodeLabel {
    pub fn new<I, S>(parts: I) -> Result<Self, HinError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let parts: Vec<String> = parts.into_iter().map(Into::into).collect();
        if parts.is_empty() {
            return Err(HinError::InvalidLabel("label has no parts".into()));
        }
        if parts.iter().any(String::is_empty) {
            return Err(HinError::InvalidLabel(format!(
                "empty part in {parts:?}"
            )));
        }
        Ok(Self(parts))
    }

    /// Single-part label. Panics on an empty string.
    pub fn simple(name: &str) -> Self {
        Self::new([name]).expect("simple label must be non-empty")
    }

    pub fn parts(&self) -> &[String] {
        &self.0
    }

    pub fn is_composite(&self) -> bool {
        self.0.len() > 1
    }
}

impl<'de> Deserialize<'de> for NodeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let parts = Vec::<String>::deserialize(deserializer)?;
        NodeLabel::new(parts).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(COMPOSITE_SEPARATOR))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub parts: NodeLabel,
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
}

impl Node {
    pub fn new(label: NodeLabel) -> Self {
        Self {
            parts: label,
            attrs: BTreeMap::new(),
        }
    }

    pub fn label(&self) -> &NodeLabel {
        &self.parts
    }
}

impl From<NodeLabel> for Node {
    fn from(label: NodeLabel) -> Self {
        Node::new(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HinMeta {
    pub name: Option<String>,
    pub built_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HinDocument", into = "HinDocument")]
pub struct Hin {
    set1: Vec<Node>,
    set2: Vec<Node>,
    edges: Vec<Edge>,
    row_offsets: Vec<usize>,
    set1_strengths: Vec<u64>,
    set2_strengths: Vec<u64>,
    total_weight: u64,
    meta: HinMeta,
}

impl Hin {
    /// Builds a network from declared labels and label-addressed weighted
    /// pairs. Duplicate pairs are summed; indices follow declaration order.
    pub fn build<I>(
        set1_labels: Vec<NodeLabel>,
        set2_labels: Vec<NodeLabel>,
        weighted_pairs: I,
    ) -> Result<Self, HinError>
    where
        I: IntoIterator<Item = (NodeLabel, NodeLabel, u64)>,
    {
        let lookup1 = label_lookup(SetSide::Set1, &set1_labels)?;
        let lookup2 = label_lookup(SetSide::Set2, &set2_labels)?;
        let mut indexed = Vec::new();
        for (l1, l2, w) in weighted_pairs {
            let i = *lookup1.get(&l1).ok_or_else(|| HinError::UnknownLabel {
                set: SetSide::Set1,
                label: l1.to_string(),
            })?;
            let j = *lookup2.get(&l2).ok_or_else(|| HinError::UnknownLabel {
                set: SetSide::Set2,
                label: l2.to_string(),
            })?;
            indexed.push((i, j, w));
        }
        Self::from_nodes(
            set1_labels.into_iter().map(Node::new).collect(),
            set2_labels.into_iter().map(Node::new).collect(),
            indexed,
            HinMeta::default(),
        )
    }

    /// Index-addressed constructor shared by every other entry point.
    pub fn from_nodes<I>(
        set1: Vec<Node>,
        set2: Vec<Node>,
        edges: I,
        meta: HinMeta,
    ) -> Result<Self, HinError>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        if set1.is_empty() {
            return Err(HinError::EmptyNodeSet(SetSide::Set1));
        }
        if set2.is_empty() {
            return Err(HinError::EmptyNodeSet(SetSide::Set2));
        }
        check_distinct(SetSide::Set1, &set1)?;
        check_distinct(SetSide::Set2, &set2)?;

        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i >= set1.len() {
                return Err(HinError::IndexOutOfRange {
                    set: SetSide::Set1,
                    index: i,
                    size: set1.len(),
                });
            }
            if j >= set2.len() {
                return Err(HinError::IndexOutOfRange {
                    set: SetSide::Set2,
                    index: j,
                    size: set2.len(),
                });
            }
            if w == 0 {
                return Err(HinError::NonPositiveWeight {
                    set1_index: i,
                    set2_index: j,
                    weight: 0,
                });
            }
            *merged.entry((i, j)).or_insert(0) += w;
        }

        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((source, target), weight)| Edge {
                source,
                target,
                weight,
            })
            .collect();
        let mut set1_strengths = vec![0u64; set1.len()];
        let mut set2_strengths = vec![0u64; set2.len()];
        let mut row_offsets = vec![0usize; set1.len() + 1];
        for e in &edges {
            set1_strengths[e.source] += e.weight;
            set2_strengths[e.target] += e.weight;
            row_offsets[e.source + 1] += 1;
        }
        for k in 0..set1.len() {
            row_offsets[k + 1] += row_offsets[k];
        }
        let total_weight = set1_strengths.iter().sum();
        Ok(Self {
            set1,
            set2,
            edges,
            row_offsets,
            set1_strengths,
            set2_strengths,
            total_weight,
            meta,
        })
    }

    /// Restricts Set1 to the nodes accepted by `keep`. Set2 is left intact so
    /// that diversity normalization by `N2` is unchanged.
    pub fn subnetwork<F>(&self, keep: F) -> Result<Self, HinError>
    where
        F: Fn(usize, &Node) -> bool,
    {
        let kept: Vec<usize> = (0..self.n1()).filter(|&i| keep(i, &self.set1[i])).collect();
        if kept.is_empty() {
            return Err(HinError::EmptySelection);
        }
        let set1 = kept.iter().map(|&i| self.set1[i].clone()).collect();
        let edges = kept.iter().enumerate().flat_map(|(new_i, &old_i)| {
            self.row(old_i)
                .iter()
                .map(move |e| (new_i, e.target, e.weight))
        });
        Self::from_nodes(set1, self.set2.clone(), edges, self.meta.clone())
    }

    pub fn with_meta(mut self, meta: HinMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn with_attribute(
        mut self,
        node: NodeRef,
        name: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<Self, HinError> {
        let nodes = match node.set {
            SetSide::Set1 => &mut self.set1,
            SetSide::Set2 => &mut self.set2,
        };
        let size = nodes.len();
        let target = nodes.get_mut(node.index).ok_or(HinError::IndexOutOfRange {
            set: node.set,
            index: node.index,
            size,
        })?;
        target.attrs.insert(name.into(), value.into());
        Ok(self)
    }

    pub fn n1(&self) -> usize {
        self.set1.len()
    }

    pub fn n2(&self) -> usize {
        self.set2.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn set1(&self) -> &[Node] {
        &self.set1
    }

    pub fn set2(&self) -> &[Node] {
        &self.set2
    }

    pub fn nodes(&self, side: SetSide) -> &[Node] {
        match side {
            SetSide::Set1 => &self.set1,
            SetSide::Set2 => &self.set2,
        }
    }

    pub fn node(&self, node: NodeRef) -> Option<&Node> {
        self.nodes(node.set).get(node.index)
    }

    pub fn meta(&self) -> &HinMeta {
        &self.meta
    }

    /// All edges, sorted by `(source, target)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges incident to Set1 node `i`, sorted by target.
    pub fn row(&self, i: usize) -> &[Edge] {
        &self.edges[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn weight(&self, i: usize, j: usize) -> u64 {
        let row = self.row(i);
        row.binary_search_by_key(&j, |e| e.target)
            .map(|k| row[k].weight)
            .unwrap_or(0)
    }

    pub fn set1_strengths(&self) -> &[u64] {
        &self.set1_strengths
    }

    pub fn set2_strengths(&self) -> &[u64] {
        &self.set2_strengths
    }

    pub fn strength(&self, node: NodeRef) -> u64 {
        match node.set {
            SetSide::Set1 => self.set1_strengths[node.index],
            SetSide::Set2 => self.set2_strengths[node.index],
        }
    }

    pub fn index_of(&self, side: SetSide, label: &NodeLabel) -> Option<usize> {
        self.nodes(side).iter().position(|n| &n.parts == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HinError> {
        serde_json::from_str(text).map_err(|e| HinError::Malformed(e.to_string()))
    }
}

fn label_lookup(
    side: SetSide,
    labels: &[NodeLabel],
) -> Result<HashMap<NodeLabel, usize>, HinError> {
    let mut lookup = HashMap::with_capacity(labels.len());
    for (idx, label) in labels.iter().enumerate() {
        if lookup.insert(label.clone(), idx).is_some() {
            return Err(HinError::DuplicateLabelInSet {
                set: side,
                label: label.to_string(),
            });
        }
    }
    Ok(lookup)
}

fn check_distinct(side: SetSide, nodes: &[Node]) -> Result<(), HinError> {
    let labels: Vec<NodeLabel> = nodes.iter().map(|n| n.parts.clone()).collect();
    label_lookup(side, &labels).map(|_| ())
}

/// On-disk form: `{"set1":[...],"set2":[...],"edges":[[i,j,w],...],"meta":{...}}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HinDocument {
    set1: Vec<Node>,
    set2: Vec<Node>,
    edges: Vec<(usize, usize, i64)>,
    #[serde(default)]
    meta: HinMeta,
}

impl TryFrom<HinDocument> for Hin {
    type Error = HinError;

    fn try_from(doc: HinDocument) -> Result<Self, Self::Error> {
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (i, j, w) in doc.edges {
            if w <= 0 {
                return Err(HinError::NonPositiveWeight {
                    set1_index: i,
                    set2_index: j,
                    weight: w,
                });
            }
            edges.push((i, j, w as u64));
        }
        Hin::from_nodes(doc.set1, doc.set2, edges, doc.meta)
    }
}

impl From<Hin> for HinDocument {
    fn from(hin: Hin) -> Self {
        HinDocument {
            edges: hin
                .edges
                .iter()
                .map(|e| (e.source, e.target, e.weight as i64))
                .collect(),
            set1: hin.set1,
            set2: hin.set2,
            meta: hin.meta,
        }
    }
}
