//! Individual-level measures for Set1 nodes: quantity (share of total
//! interaction weight, optionally within a subgroup) and diversity (Shannon
//! entropy of the node's weight over Set2, normalized by `log N2`).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::Hin;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("Set1 index {index} is out of range (N1 = {size})")]
    InvalidNode { index: usize, size: usize },
    #[error("network has zero total weight")]
    EmptyHin,
    #[error("node {0} is not a member of the group")]
    NodeNotInGroup(usize),
    #[error("group carries zero total weight")]
    EmptyGroupWeight,
    #[error("Set1 node {node} has no value for attribute {attribute:?}")]
    MissingAttribute { node: String, attribute: String },
}

impl MetricsError {
    pub fn name(&self) -> &'static str {
        match self {
            MetricsError::InvalidNode { .. } => "InvalidNode",
            MetricsError::EmptyHin => "EmptyHin",
            MetricsError::NodeNotInGroup(_) => "NodeNotInGroup",
            MetricsError::EmptyGroupWeight => "EmptyGroupWeight",
            MetricsError::MissingAttribute { .. } => "MissingAttribute",
        }
    }
}

fn check_node(hin: &Hin, i: usize) -> Result<(), MetricsError> {
    if i >= hin.n1() {
        return Err(MetricsError::InvalidNode {
            index: i,
            size: hin.n1(),
        });
    }
    Ok(())
}

/// `s_i / W`.
pub fn quantity(hin: &Hin, i: usize) -> Result<f64, MetricsError> {
    check_node(hin, i)?;
    if hin.total_weight() == 0 {
        return Err(MetricsError::EmptyHin);
    }
    Ok(hin.set1_strengths()[i] as f64 / hin.total_weight() as f64)
}

/// `s_i / W_g` where `W_g` is the summed strength of the group.
pub fn quantity_group(hin: &Hin, i: usize, group: &[usize]) -> Result<f64, MetricsError> {
    check_node(hin, i)?;
    for &g in group {
        check_node(hin, g)?;
    }
    if !group.contains(&i) {
        return Err(MetricsError::NodeNotInGroup(i));
    }
    let mut members = group.to_vec();
    members.sort_unstable();
    members.dedup();
    let group_weight: u64 = members.iter().map(|&g| hin.set1_strengths()[g]).sum();
    if group_weight == 0 {
        return Err(MetricsError::EmptyGroupWeight);
    }
    Ok(hin.set1_strengths()[i] as f64 / group_weight as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiversityFlag {
    /// `s_i = 0`; diversity reported as 0.
    IsolatedNode,
    /// `N2 = 1`; the normalizer `log N2` vanishes and diversity is 0.
    DegenerateTargetSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    pub value: f64,
    pub flag: Option<DiversityFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

pub fn diversity(hin: &Hin, i: usize) -> Result<Diversity, MetricsError> {
    diversity_in_base(hin, i, LogBase::Two)
}

/// Normalized entropy evaluated with logarithms in `base`. The result does
/// not depend on the base beyond rounding.
pub fn diversity_in_base(hin: &Hin, i: usize, base: LogBase) -> Result<Diversity, MetricsError> {
    check_node(hin, i)?;
    let strength = hin.set1_strengths()[i];
    if strength == 0 {
        return Ok(Diversity {
            value: 0.0,
            flag: Some(DiversityFlag::IsolatedNode),
        });
    }
    if hin.n2() == 1 {
        return Ok(Diversity {
            value: 0.0,
            flag: Some(DiversityFlag::DegenerateTargetSet),
        });
    }
    let s = strength as f64;
    let entropy: f64 = hin
        .row(i)
        .iter()
        .map(|e| {
            let p = e.weight as f64 / s;
            -p * base.log(p)
        })
        .sum();
    let value = (entropy / base.log(hin.n2() as f64)).clamp(0.0, 1.0);
    Ok(Diversity { value, flag: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub node: usize,
    pub label: String,
    pub group: Option<String>,
    pub strength: u64,
    pub quantity: f64,
    pub quantity_group: Option<f64>,
    pub diversity: f64,
    pub isolated: bool,
}

/// One row per Set1 node in index order. With `group_attribute`, nodes are
/// grouped by that attribute's value and `quantity_group` is filled in
/// (left empty for groups carrying no weight).
pub fn metrics_table(
    hin: &Hin,
    group_attribute: Option<&str>,
) -> Result<Vec<NodeMetrics>, MetricsError> {
    if hin.total_weight() == 0 {
        return Err(MetricsError::EmptyHin);
    }
    let groups: Option<Vec<String>> = match group_attribute {
        None => None,
        Some(attr) => Some(
            hin.set1()
                .iter()
                .map(|n| match n.attrs.get(attr) {
                    Some(v) if !v.is_empty() => Ok(v.clone()),
                    _ => Err(MetricsError::MissingAttribute {
                        node: n.label().to_string(),
                        attribute: attr.to_owned(),
                    }),
                })
                .collect::<Result<_, _>>()?,
        ),
    };
    let mut group_weight: BTreeMap<&str, u64> = BTreeMap::new();
    if let Some(groups) = &groups {
        for (g, s) in groups.iter().zip(hin.set1_strengths()) {
            *group_weight.entry(g.as_str()).or_insert(0) += s;
        }
    }

    let total = hin.total_weight() as f64;
    (0..hin.n1())
        .into_par_iter()
        .map(|i| {
            let strength = hin.set1_strengths()[i];
            let group = groups.as_ref().map(|g| g[i].clone());
            let quantity_group = group.as_deref().and_then(|g| {
                let wg = group_weight[g];
                (wg > 0).then(|| strength as f64 / wg as f64)
            });
            let diversity = diversity(hin, i)?;
            Ok(NodeMetrics {
                node: i,
                label: hin.set1()[i].label().to_string(),
                group,
                strength,
                quantity: strength as f64 / total,
                quantity_group,
                diversity: diversity.value,
                isolated: strength == 0,
            })
        })
        .collect()
}

/// CSV export with columns
/// `label,group,strength,quantity,quantity_group,diversity,isolated`.
pub fn metrics_csv(rows: &[NodeMetrics]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "label",
            "group",
            "strength",
            "quantity",
            "quantity_group",
            "diversity",
            "isolated",
        ])
        .expect("in-memory write");
    for r in rows {
        writer
            .write_record([
                r.label.clone(),
                r.group.clone().unwrap_or_default(),
                r.strength.to_string(),
                r.quantity.to_string(),
                r.quantity_group.map(|q| q.to_string()).unwrap_or_default(),
                r.diversity.to_string(),
                r.isolated.to_string(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{NodeLabel, NodeRef};

    fn l(s: &str) -> NodeLabel {
        NodeLabel::simple(s)
    }

    fn example() -> Hin {
        Hin::build(
            vec![l("a"), l("b")],
            vec![l("x"), l("y")],
            vec![(l("a"), l("x"), 3), (l("a"), l("y"), 1), (l("b"), l("y"), 4)],
        )
        .unwrap()
    }

    fn row_hin(weights: &[u64]) -> Hin {
        let targets: Vec<NodeLabel> = (0..weights.len()).map(|j| l(&format!("t{j}"))).collect();
        let pairs = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(j, &w)| (l("a"), targets[j].clone(), w))
            .collect::<Vec<_>>();
        Hin::build(vec![l("a")], targets, pairs).unwrap()
    }

    #[test]
    fn quantity_examples() {
        let hin = example();
        assert_eq!(quantity(&hin, 0).unwrap(), 0.5);
        assert_eq!(quantity(&row_hin(&[5]), 0).unwrap(), 1.0);
        let sub = Hin::build(vec![l("a"), l("b")], vec![l("x")], vec![(l("a"), l("x"), 2)]).unwrap();
        assert_eq!(quantity(&sub, 1).unwrap(), 0.0);
        assert!(quantity(&hin, 7).is_err());
    }

    #[test]
    fn quantity_group_examples() {
        let hin = example();
        assert_eq!(quantity_group(&hin, 0, &[0, 1]).unwrap(), 0.5);
        assert_eq!(quantity_group(&hin, 0, &[0]).unwrap(), 1.0);
        assert_eq!(
            quantity_group(&hin, 0, &[1]).unwrap_err(),
            MetricsError::NodeNotInGroup(0)
        );

        let bigger = Hin::build(
            vec![l("a"), l("b")],
            vec![l("x"), l("y")],
            vec![
                (l("a"), l("x"), 3),
                (l("a"), l("y"), 1),
                (l("b"), l("y"), 4),
                (l("b"), l("x"), 4),
            ],
        )
        .unwrap();
        assert!((quantity_group(&bigger, 0, &[0, 1]).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let isolated = Hin::build(vec![l("a"), l("b")], vec![l("x")], vec![(l("a"), l("x"), 2)]).unwrap();
        assert_eq!(
            quantity_group(&isolated, 1, &[1]).unwrap_err(),
            MetricsError::EmptyGroupWeight
        );
    }

    #[test]
    fn diversity_examples() {
        assert!((diversity(&row_hin(&[3, 3, 3, 3]), 0).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(diversity(&row_hin(&[7, 0, 0, 0]), 0).unwrap().value, 0.0);
        assert!((diversity(&row_hin(&[2, 2, 0, 0]), 0).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diversity_degenerate_cases() {
        let single_target = row_hin(&[4]);
        assert_eq!(
            diversity(&single_target, 0).unwrap(),
            Diversity {
                value: 0.0,
                flag: Some(DiversityFlag::DegenerateTargetSet)
            }
        );
        let isolated = Hin::build(vec![l("a"), l("b")], vec![l("x"), l("y")], vec![(l("a"), l("x"), 2)]).unwrap();
        assert_eq!(
            diversity(&isolated, 1).unwrap().flag,
            Some(DiversityFlag::IsolatedNode)
        );
    }

    #[test]
    fn table_without_groups() {
        let rows = metrics_table(&example(), None).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].quantity, 0.5);
        let expected = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((rows[0].diversity - expected).abs() < 1e-12);
        assert!((rows[0].diversity - 0.811278).abs() < 1e-6);
        assert_eq!(rows[1].diversity, 0.0);
        assert!(rows[0].quantity_group.is_none());
    }

    #[test]
    fn table_with_groups() {
        let hin = example()
            .with_attribute(NodeRef::set1(0), "team", "t1")
            .unwrap()
            .with_attribute(NodeRef::set1(1), "team", "t2")
            .unwrap();
        let rows = metrics_table(&hin, Some("team")).unwrap();
        assert_eq!(rows[0].quantity_group, Some(1.0));
        assert_eq!(rows[1].group.as_deref(), Some("t2"));
        assert_eq!(
            metrics_table(&hin, Some("missing")).unwrap_err().name(),
            "MissingAttribute"
        );
    }

    #[test]
    fn csv_columns() {
        let csv = metrics_csv(&metrics_table(&example(), None).unwrap());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "label,group,strength,quantity,quantity_group,diversity,isolated"
        );
        assert!(lines.next().unwrap().starts_with("a,,4,0.5,,0.811"));
    }
}
