//! Edge significance under binomial null models.
//!
//! An edge `(i, j)` is kept when its weight reaches the `(1 - alpha)`
//! binomial quantile of its null family. Discrete weights make the keep
//! rule slightly liberal: under the null a cell is kept with probability
//! `P(X >= t) = 1 - CDF(t - 1)`, which lies in `(alpha, alpha + P(X = t)]`,
//! while the probability of strictly exceeding the threshold is at most
//! `alpha`.

pub mod binomial;
pub mod null_model;
mod simulate;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::Hin;
pub use binomial::{binomial_quantile, BinomialError};
pub use null_model::{NullModel, NullModelRegistry, NullParams};
pub use simulate::{null_simulation, CalibrationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PruneError {
    #[error("network has zero total weight")]
    EmptyHin,
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("unknown null model {0:?}")]
    UnknownNullModel(String),
    #[error(transparent)]
    Binomial(#[from] BinomialError),
}

impl PruneError {
    pub fn name(&self) -> &'static str {
        match self {
            PruneError::EmptyHin => "EmptyHin",
            PruneError::InvalidAlpha(_) => "InvalidAlpha",
            PruneError::UnknownNullModel(_) => "UnknownNullModel",
            PruneError::Binomial(_) => "InvalidProbability",
        }
    }
}

/// Which node set, if any, has its strengths held fixed by the null model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixDeg {
    #[default]
    None,
    Set1,
    Set2,
}

impl FixDeg {
    pub fn model(self) -> &'static dyn NullModel {
        let name = match self {
            FixDeg::None => "none",
            FixDeg::Set1 => "set1",
            FixDeg::Set2 => "set2",
        };
        NullModelRegistry::get(name).expect("built-in null model is registered")
    }

    pub const ALL: [FixDeg; 3] = [FixDeg::None, FixDeg::Set1, FixDeg::Set2];
}

impl fmt::Display for FixDeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.model().name())
    }
}

impl FromStr for FixDeg {
    type Err = PruneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let model = NullModelRegistry::get(s).ok_or_else(|| PruneError::UnknownNullModel(s.into()))?;
        Ok(match model.name() {
            "set1" => FixDeg::Set1,
            "set2" => FixDeg::Set2,
            _ => FixDeg::None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullModelSpec {
    #[serde(default)]
    pub fix_deg: FixDeg,
    pub alpha: f64,
    /// Divide `alpha` by the number of candidate cells `N1 N2`.
    #[serde(default)]
    pub bonferroni: bool,
}

impl NullModelSpec {
    pub fn new(fix_deg: FixDeg, alpha: f64) -> Self {
        Self {
            fix_deg,
            alpha,
            bonferroni: false,
        }
    }

    pub fn validate(&self) -> Result<(), PruneError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PruneError::InvalidAlpha(self.alpha));
        }
        Ok(())
    }

    /// Per-test significance level after the optional correction.
    pub fn effective_alpha(&self, hin: &Hin) -> f64 {
        if self.bonferroni {
            self.alpha / (hin.n1() as f64 * hin.n2() as f64)
        } else {
            self.alpha
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedEdge {
    pub source: usize,
    pub target: usize,
    pub weight: u64,
    pub kept: bool,
    pub threshold: u64,
    pub n: u64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneResult {
    pub spec: NullModelSpec,
    pub edges: Vec<AnnotatedEdge>,
}

impl PruneResult {
    pub fn kept_edges(&self) -> impl Iterator<Item = &AnnotatedEdge> {
        self.edges.iter().filter(|e| e.kept)
    }

    pub fn kept_pairs(&self) -> Vec<(usize, usize)> {
        self.kept_edges().map(|e| (e.source, e.target)).collect()
    }

    pub fn kept_count(&self) -> usize {
        self.kept_edges().count()
    }
}

/// Thresholds `q_{n,rho}(1 - alpha)` for every family of the model. Families
/// with equal trial counts share one quantile evaluation.
pub fn family_thresholds(
    hin: &Hin,
    model: &dyn NullModel,
    alpha: f64,
) -> Result<Vec<(NullParams, u64)>, PruneError> {
    let families = model.families(hin);
    let mut distinct: Vec<(u64, u64)> = families.iter().map(|f| (f.n, f.rho.to_bits())).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let quantiles = distinct
        .par_iter()
        .map(|&(n, rho)| Ok(((n, rho), binomial_quantile(n, f64::from_bits(rho), 1.0 - alpha)?)))
        .collect::<Result<HashMap<_, _>, PruneError>>()?;
    Ok(families
        .into_iter()
        .map(|f| (f, quantiles[&(f.n, f.rho.to_bits())]))
        .collect())
}

pub fn prune(hin: &Hin, spec: &NullModelSpec) -> Result<PruneResult, PruneError> {
    spec.validate()?;
    if hin.total_weight() == 0 {
        return Err(PruneError::EmptyHin);
    }
    let model = spec.fix_deg.model();
    let thresholds = family_thresholds(hin, model, spec.effective_alpha(hin))?;
    let edges = hin
        .edges()
        .iter()
        .map(|e| {
            let (params, threshold) = thresholds[model.family_of(e.source, e.target)];
            AnnotatedEdge {
                source: e.source,
                target: e.target,
                weight: e.weight,
                kept: e.weight >= threshold,
                threshold,
                n: params.n,
                rho: params.rho,
            }
        })
        .collect();
    Ok(PruneResult { spec: *spec, edges })
}

/// Descriptive spread of node strengths in one set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthSummary {
    pub mean: f64,
    pub variance: f64,
    pub gini: f64,
}

impl StrengthSummary {
    pub fn of(strengths: &[u64]) -> Self {
        let n = strengths.len() as f64;
        let mean = strengths.iter().sum::<u64>() as f64 / n;
        let variance = strengths
            .iter()
            .map(|&s| (s as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let mut sorted = strengths.to_vec();
        sorted.sort_unstable();
        let total: f64 = sorted.iter().sum::<u64>() as f64;
        let gini = if total == 0.0 {
            0.0
        } else {
            let weighted: f64 = sorted
                .iter()
                .enumerate()
                .map(|(k, &s)| (2.0 * (k as f64 + 1.0) - n - 1.0) * s as f64)
                .sum();
            weighted / (n * total)
        };
        Self {
            mean,
            variance,
            gini,
        }
    }
}

/// Strength heterogeneity of both node sets, offered as context for choosing
/// a null model. No choice is made automatically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthHeterogeneity {
    pub set1: StrengthSummary,
    pub set2: StrengthSummary,
}

pub fn strength_heterogeneity(hin: &Hin) -> StrengthHeterogeneity {
    StrengthHeterogeneity {
        set1: StrengthSummary::of(hin.set1_strengths()),
        set2: StrengthSummary::of(hin.set2_strengths()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::NodeLabel;

    fn l(s: &str) -> NodeLabel {
        NodeLabel::simple(s)
    }

    #[test]
    fn global_threshold_example() {
        let hin = Hin::build(
            vec![l("a"), l("b")],
            vec![l("x"), l("y")],
            vec![(l("a"), l("x"), 3), (l("a"), l("y"), 1)],
        )
        .unwrap();
        let result = prune(&hin, &NullModelSpec::new(FixDeg::None, 0.05)).unwrap();
        assert!(result.edges.iter().all(|e| e.threshold == 3 && e.n == 4 && e.rho == 0.25));
        assert_eq!(result.kept_pairs(), vec![(0, 0)]);
    }

    #[test]
    fn permissive_alpha_keeps_everything() {
        let hin = Hin::build(
            vec![l("a"), l("b")],
            vec![l("x"), l("y")],
            vec![(l("a"), l("x"), 3), (l("a"), l("y"), 1), (l("b"), l("y"), 1)],
        )
        .unwrap();
        for fix in FixDeg::ALL {
            let result = prune(&hin, &NullModelSpec::new(fix, 0.999)).unwrap();
            assert!(result.edges.iter().all(|e| e.threshold <= 1 && e.kept), "{fix}");
        }
    }

    #[test]
    fn fixed_set1_uses_node_strength() {
        let hin = Hin::build(
            vec![l("a"), l("b"), l("c")],
            vec![l("x"), l("y")],
            vec![(l("a"), l("x"), 9), (l("a"), l("y"), 1), (l("b"), l("y"), 4)],
        )
        .unwrap();
        let result = prune(&hin, &NullModelSpec::new(FixDeg::Set1, 0.05)).unwrap();
        let a_edges: Vec<_> = result.edges.iter().filter(|e| e.source == 0).collect();
        assert!(a_edges.iter().all(|e| e.n == 10 && e.rho == 0.5 && e.threshold == 8));
        assert!(a_edges[0].kept && !a_edges[1].kept);
        // node c has no edges and contributes nothing
        assert!(result.edges.iter().all(|e| e.source != 2));
        let b = result.edges.iter().find(|e| e.source == 1).unwrap();
        assert_eq!((b.n, b.threshold), (4, 4));
    }

    #[test]
    fn fixed_set2_uses_target_strength() {
        let hin = Hin::build(
            vec![l("a"), l("b")],
            vec![l("x")],
            vec![(l("a"), l("x"), 9), (l("b"), l("x"), 1)],
        )
        .unwrap();
        let result = prune(&hin, &NullModelSpec::new(FixDeg::Set2, 0.05)).unwrap();
        assert!(result.edges.iter().all(|e| e.n == 10 && e.rho == 0.5 && e.threshold == 8));
        assert_eq!(result.kept_pairs(), vec![(0, 0)]);
    }

    #[test]
    fn invalid_alpha_and_names() {
        let hin = Hin::build(vec![l("a")], vec![l("x")], vec![(l("a"), l("x"), 1)]).unwrap();
        assert_eq!(
            prune(&hin, &NullModelSpec::new(FixDeg::None, 1.0)).unwrap_err(),
            PruneError::InvalidAlpha(1.0)
        );
        assert_eq!("set1".parse::<FixDeg>().unwrap(), FixDeg::Set1);
        assert_eq!("NONE".parse::<FixDeg>().unwrap(), FixDeg::None);
        assert!("both".parse::<FixDeg>().is_err());
        assert_eq!(
            serde_json::to_string(&NullModelSpec::new(FixDeg::Set2, 0.05)).unwrap(),
            r#"{"fix_deg":"set2","alpha":0.05,"bonferroni":false}"#
        );
    }

    #[test]
    fn bonferroni_tightens() {
        let hin = Hin::build(
            vec![l("a"), l("b")],
            vec![l("x"), l("y")],
            vec![(l("a"), l("x"), 6), (l("b"), l("y"), 1)],
        )
        .unwrap();
        let plain = prune(&hin, &NullModelSpec::new(FixDeg::None, 0.05)).unwrap();
        let strict = prune(
            &hin,
            &NullModelSpec {
                bonferroni: true,
                ..NullModelSpec::new(FixDeg::None, 0.05)
            },
        )
        .unwrap();
        assert!(strict.edges[0].threshold >= plain.edges[0].threshold);
    }

    #[test]
    fn heterogeneity_summary() {
        let even = StrengthSummary::of(&[5, 5, 5, 5]);
        assert_eq!(even.variance, 0.0);
        assert!(even.gini.abs() < 1e-12);
        let skewed = StrengthSummary::of(&[0, 0, 0, 12]);
        assert!((skewed.gini - 0.75).abs() < 1e-12);
    }
}
