//! Turning tabular interaction logs into networks.
//!
//! Each row is one interaction. The columns named in [`HinSpec`] type the
//! two endpoints (several columns form a composite label) and the weight is
//! either the number of matching rows or the sum of an integer column.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{Hin, HinError, HinMeta, Node, NodeLabel, SetSide};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("column {0:?} is not present in the table")]
    MissingColumn(String),
    #[error("no rows remain after filtering")]
    EmptyAfterFilter,
    #[error("row {row}: weight cell {value:?} in column {column:?} is not an integer")]
    NonIntegerWeightCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: weight {value} in column {column:?} is not positive")]
    NonPositiveWeight {
        row: usize,
        column: String,
        value: i64,
    },
    #[error("could not read table: {0}")]
    Read(String),
    #[error(transparent)]
    Hin(#[from] HinError),
}

impl IngestError {
    pub fn name(&self) -> &'static str {
        match self {
            IngestError::InvalidSpec(_) => "InvalidSpec",
            IngestError::MissingColumn(_) => "MissingColumn",
            IngestError::EmptyAfterFilter => "EmptyAfterFilter",
            IngestError::NonIntegerWeightCell { .. } => "NonIntegerWeightCell",
            IngestError::NonPositiveWeight { .. } => "NonPositiveWeight",
            IngestError::Read(_) => "Read",
            IngestError::Hin(e) => e.name(),
        }
    }
}

/// A header row plus string cells. Short rows are padded with empty cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Self { headers, rows }
    }

    /// Parses delimiter-separated text with a header row. Without an explicit
    /// delimiter, tab is chosen when the header has more tabs than commas.
    pub fn parse(text: &str, delimiter: Option<u8>) -> Result<Self, IngestError> {
        let delimiter = delimiter.unwrap_or_else(|| detect_delimiter(text));
        Self::from_reader(text.as_bytes(), delimiter)
    }

    pub fn from_reader<R: Read>(reader: R, delimiter: u8) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| IngestError::Read(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| IngestError::Read(e.to_string()))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            rows.push(record.iter().map(str::to_owned).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn cell(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).map(String::as_str).unwrap_or("")
    }
}

pub fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    let tabs = header.matches('\t').count();
    let commas = header.matches(',').count();
    if tabs > commas {
        b'\t'
    } else {
        b','
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    CountRows,
    SumColumn(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeColumn {
    pub column: String,
    pub attach_to: SetSide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFilter {
    pub column: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HinSpec {
    pub set1_columns: Vec<String>,
    pub set2_columns: Vec<String>,
    #[serde(default)]
    pub weight_mode: WeightMode,
    #[serde(default)]
    pub attribute_columns: Vec<AttributeColumn>,
    #[serde(default)]
    pub allow_self_pairs: bool,
    #[serde(default)]
    pub row_filter: Vec<RowFilter>,
}

impl HinSpec {
    pub fn new<S: Into<String>>(
        set1: impl IntoIterator<Item = S>,
        set2: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            set1_columns: set1.into_iter().map(Into::into).collect(),
            set2_columns: set2.into_iter().map(Into::into).collect(),
            weight_mode: WeightMode::CountRows,
            attribute_columns: Vec::new(),
            allow_self_pairs: false,
            row_filter: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.set1_columns.is_empty() || self.set2_columns.is_empty() {
            return Err(IngestError::InvalidSpec(
                "both node sets need at least one column".into(),
            ));
        }
        let set1: BTreeSet<&String> = self.set1_columns.iter().collect();
        if let Some(shared) = self.set2_columns.iter().find(|c| set1.contains(c)) {
            return Err(IngestError::InvalidSpec(format!(
                "column {shared:?} is used by both node sets"
            )));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "{} -> {}",
            self.set1_columns.join(","),
            self.set2_columns.join(",")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    /// Zero-based data row index (header excluded).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    /// Rows removed by `row_filter`.
    pub filtered_out: usize,
    /// Rows rejected for a missing node cell; see `diagnostics`.
    pub rejected: usize,
    /// Rows that passed the filter with complete node cells.
    pub filtered: usize,
    pub dropped_self: usize,
    pub kept: usize,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    #[serde(rename = "W")]
    pub total_weight: u64,
    /// Nodes whose attribute column carried more than one distinct value; the
    /// lexicographically smallest value is attached.
    pub attribute_conflicts: usize,
    pub diagnostics: Vec<RowDiagnostic>,
}

pub fn ingest(table: &Table, spec: &HinSpec) -> Result<Hin, IngestError> {
    ingest_with_report(table, spec).map(|(hin, _)| hin)
}

pub fn ingest_report(table: &Table, spec: &HinSpec) -> Result<IngestReport, IngestError> {
    ingest_with_report(table, spec).map(|(_, report)| report)
}

pub fn ingest_with_report(
    table: &Table,
    spec: &HinSpec,
) -> Result<(Hin, IngestReport), IngestError> {
    spec.validate()?;
    let resolve = |name: &String| {
        table
            .column(name)
            .ok_or_else(|| IngestError::MissingColumn(name.clone()))
    };
    let cols1 = spec.set1_columns.iter().map(resolve).collect::<Result<Vec<_>, _>>()?;
    let cols2 = spec.set2_columns.iter().map(resolve).collect::<Result<Vec<_>, _>>()?;
    let filters = spec
        .row_filter
        .iter()
        .map(|f| resolve(&f.column).map(|c| (c, f.value.as_str())))
        .collect::<Result<Vec<_>, _>>()?;
    let weight_col = match &spec.weight_mode {
        WeightMode::CountRows => None,
        WeightMode::SumColumn(name) => Some((resolve(name)?, name.as_str())),
    };
    let attr_cols = spec
        .attribute_columns
        .iter()
        .map(|a| resolve(&a.column).map(|c| (c, a)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = IngestReport {
        rows: table.rows.len(),
        filtered_out: 0,
        rejected: 0,
        filtered: 0,
        dropped_self: 0,
        kept: 0,
        n1: 0,
        n2: 0,
        total_weight: 0,
        attribute_conflicts: 0,
        diagnostics: Vec::new(),
    };
    let mut pairs: BTreeMap<(NodeLabel, NodeLabel), u64> = BTreeMap::new();
    // (side, label) -> attribute -> observed values
    let mut attrs: BTreeMap<(SetSide, NodeLabel), BTreeMap<String, BTreeSet<String>>> =
        BTreeMap::new();

    for row in 0..table.rows.len() {
        if filters.iter().any(|&(c, v)| table.cell(row, c) != v) {
            report.filtered_out += 1;
            continue;
        }
        let (label1, label2) = match (
            row_label(table, row, &cols1, &spec.set1_columns),
            row_label(table, row, &cols2, &spec.set2_columns),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(reason), _) | (_, Err(reason)) => {
                report.rejected += 1;
                report.diagnostics.push(RowDiagnostic { row, reason });
                continue;
            }
        };
        report.filtered += 1;
        if !spec.allow_self_pairs && is_self_pair(&label1, &label2) {
            report.dropped_self += 1;
            continue;
        }
        let weight = match weight_col {
            None => 1,
            Some((c, name)) => parse_weight(row, name, table.cell(row, c))?,
        };
        for &(c, attr) in &attr_cols {
            let value = table.cell(row, c);
            if value.is_empty() {
                continue;
            }
            let label = match attr.attach_to {
                SetSide::Set1 => label1.clone(),
                SetSide::Set2 => label2.clone(),
            };
            attrs
                .entry((attr.attach_to, label))
                .or_default()
                .entry(attr.column.clone())
                .or_default()
                .insert(value.to_owned());
        }
        report.kept += 1;
        *pairs.entry((label1, label2)).or_insert(0) += weight;
    }

    if pairs.is_empty() {
        return Err(IngestError::EmptyAfterFilter);
    }

    let set1: BTreeSet<&NodeLabel> = pairs.keys().map(|(a, _)| a).collect();
    let set2: BTreeSet<&NodeLabel> = pairs.keys().map(|(_, b)| b).collect();
    let make_nodes = |side: SetSide, labels: &BTreeSet<&NodeLabel>, conflicts: &mut usize| {
        labels
            .iter()
            .map(|&label| {
                let mut node = Node::new(label.clone());
                if let Some(values) = attrs.get(&(side, label.clone())) {
                    for (name, seen) in values {
                        if seen.len() > 1 {
                            *conflicts += 1;
                        }
                        if let Some(first) = seen.iter().next() {
                            node.attrs.insert(name.clone(), first.clone());
                        }
                    }
                }
                node
            })
            .collect::<Vec<_>>()
    };
    let mut conflicts = 0;
    let nodes1 = make_nodes(SetSide::Set1, &set1, &mut conflicts);
    let nodes2 = make_nodes(SetSide::Set2, &set2, &mut conflicts);
    let index1: BTreeMap<&NodeLabel, usize> = set1.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let index2: BTreeMap<&NodeLabel, usize> = set2.iter().enumerate().map(|(j, &l)| (l, j)).collect();
    let edges = pairs
        .iter()
        .map(|((a, b), &w)| (index1[a], index2[b], w))
        .collect::<Vec<_>>();
    let meta = HinMeta {
        name: None,
        built_from: Some(spec.describe()),
    };
    let hin = Hin::from_nodes(nodes1, nodes2, edges, meta)?;

    report.attribute_conflicts = conflicts;
    report.n1 = hin.n1();
    report.n2 = hin.n2();
    report.total_weight = hin.total_weight();
    Ok((hin, report))
}

fn row_label(
    table: &Table,
    row: usize,
    cols: &[usize],
    names: &[String],
) -> Result<NodeLabel, String> {
    let mut parts = Vec::with_capacity(cols.len());
    for (&c, name) in cols.iter().zip(names) {
        let value = table.cell(row, c);
        if value.is_empty() {
            return Err(format!("missing value in node column {name:?}"));
        }
        parts.push(value.to_owned());
    }
    NodeLabel::new(parts).map_err(|e| e.to_string())
}

/// A row pairs an entity with itself when both labels coincide, or when a
/// simple Set1 label reappears as one of the parts of a composite Set2 label
/// (a student addressing themself in a `(code, partner)` node).
fn is_self_pair(label1: &NodeLabel, label2: &NodeLabel) -> bool {
    if label1 == label2 {
        return true;
    }
    match label1.parts() {
        [single] if label2.is_composite() => label2.parts().iter().any(|p| p == single),
        _ => false,
    }
}

fn parse_weight(row: usize, column: &str, cell: &str) -> Result<u64, IngestError> {
    let value: i64 = cell.parse().map_err(|_| IngestError::NonIntegerWeightCell {
        row,
        column: column.to_owned(),
        value: cell.to_owned(),
    })?;
    if value <= 0 {
        return Err(IngestError::NonPositiveWeight {
            row,
            column: column.to_owned(),
            value,
        });
    }
    Ok(value as u64)
}
