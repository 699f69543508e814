//! Description length of a network given a partition of Set1, in bits.
//!
//! The code transmits, in order: the number of groups `B`, the group sizes,
//! the labels given the sizes, the community-to-target weight totals
//! `w_cn[r][j]` (stars and bars over `B N2` cells), and finally each edge
//! weight given those totals (stars and bars over the `n_r` members of each
//! community, independently per `(r, j)`).

use serde::{Deserialize, Serialize};

use super::{BlockWeights, ClusterError, Partition};
use crate::hin::Hin;

/// `ln k!` lookup for the small arguments that dominate the inner loops,
/// falling back to `lgamma` beyond the table.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub fn with_capacity(max: usize) -> Self {
        let table = (0..=max).map(|k| libm::lgamma(k as f64 + 1.0)).collect();
        Self { table }
    }

    pub fn for_hin(hin: &Hin) -> Self {
        Self::with_capacity(hin.n1() + hin.total_weight() as usize + 1)
    }

    #[inline]
    pub fn ln(&self, k: u64) -> f64 {
        match self.table.get(k as usize) {
            Some(&v) => v,
            None => libm::lgamma(k as f64 + 1.0),
        }
    }

    /// `log2 C(n, k)`, zero when `k = 0` or `k = n`.
    #[inline]
    pub fn log2_binomial(&self, n: u64, k: u64) -> f64 {
        debug_assert!(k <= n);
        if k == 0 || k == n {
            return 0.0;
        }
        (self.ln(n) - self.ln(k) - self.ln(n - k)) / std::f64::consts::LN_2
    }

    /// `log2 C(n + w - 1, w)`: ways to spread weight `w` over `n` slots.
    #[inline]
    pub fn log2_multiset(&self, n: u64, w: u64) -> f64 {
        if w == 0 {
            return 0.0;
        }
        self.log2_binomial(n + w - 1, w)
    }
}

/// The five additive pieces of the description length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlTerms {
    /// `log N1`: the number of groups.
    pub group_count: f64,
    /// `log C(N1 - 1, B - 1)`: the group sizes.
    pub group_sizes: f64,
    /// `log N1! / prod n_r!`: the labels given the sizes.
    pub labels: f64,
    /// `log C(B N2 + W - 1, W)`: community-to-target totals.
    pub block_weights: f64,
    /// `sum log C(n_r + w_rj - 1, w_rj)`: edge weights given the totals.
    pub edges: f64,
}

impl DlTerms {
    pub fn total(&self) -> f64 {
        self.group_count + self.group_sizes + self.labels + self.block_weights + self.edges
    }
}

/// Terms that depend on the partition only through `B`.
pub(crate) fn count_terms(lf: &LnFactorial, n1: usize, n2: usize, w: u64, groups: usize) -> f64 {
    let n1 = n1 as u64;
    let b = groups as u64;
    (n1 as f64).log2()
        + lf.log2_binomial(n1 - 1, b - 1)
        + lf.log2_multiset(b * n2 as u64, w)
}

pub fn description_terms(hin: &Hin, partition: &Partition) -> Result<DlTerms, ClusterError> {
    if partition.len() != hin.n1() {
        return Err(ClusterError::InvalidPartition(format!(
            "partition covers {} nodes but N1 = {}",
            partition.len(),
            hin.n1()
        )));
    }
    let lf = LnFactorial::for_hin(hin);
    let blocks = BlockWeights::new(hin, partition);
    Ok(terms_from_blocks(&lf, hin, partition, &blocks))
}

pub(crate) fn terms_from_blocks(
    lf: &LnFactorial,
    hin: &Hin,
    partition: &Partition,
    blocks: &BlockWeights,
) -> DlTerms {
    let n1 = hin.n1() as u64;
    let b = partition.num_groups() as u64;
    let sizes = partition.sizes();
    let labels = (lf.ln(n1) - sizes.iter().map(|&n| lf.ln(n as u64)).sum::<f64>())
        / std::f64::consts::LN_2;
    let edges = (0..partition.num_groups())
        .map(|r| {
            blocks
                .row(r)
                .iter()
                .map(|&w| lf.log2_multiset(sizes[r] as u64, w))
                .sum::<f64>()
        })
        .sum();
    DlTerms {
        group_count: (n1 as f64).log2(),
        group_sizes: lf.log2_binomial(n1 - 1, b - 1),
        labels,
        block_weights: lf.log2_multiset(b * hin.n2() as u64, hin.total_weight()),
        edges,
    }
}

/// Total description length in bits.
pub fn description_length(hin: &Hin, partition: &Partition) -> Result<f64, ClusterError> {
    description_terms(hin, partition).map(|t| t.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::NodeLabel;

    fn diagonal() -> Hin {
        let l = NodeLabel::simple;
        Hin::build(
            vec![l("1"), l("2")],
            vec![l("a"), l("b")],
            vec![(l("1"), l("a"), 2), (l("2"), l("b"), 2)],
        )
        .unwrap()
    }

    #[test]
    fn one_group_worked_value() {
        let dl = description_length(&diagonal(), &Partition::one_group(2)).unwrap();
        let expected = 1.0 + 5f64.log2() + 2.0 * 3f64.log2();
        assert!((dl - expected).abs() < 1e-12);
        assert!((dl - 6.4919).abs() < 1e-3);
    }

    #[test]
    fn singleton_worked_value() {
        let terms = description_terms(&diagonal(), &Partition::singletons(2)).unwrap();
        assert_eq!(terms.group_count, 1.0);
        assert_eq!(terms.group_sizes, 0.0);
        assert!((terms.labels - 1.0).abs() < 1e-12);
        assert!((terms.block_weights - 35f64.log2()).abs() < 1e-12);
        assert_eq!(terms.edges, 0.0);
        assert!((terms.total() - 7.1293).abs() < 1e-3);
    }

    #[test]
    fn single_node_reduces_to_stars_and_bars() {
        let l = NodeLabel::simple;
        let hin = Hin::build(
            vec![l("u")],
            vec![l("a"), l("b"), l("c")],
            vec![(l("u"), l("a"), 4), (l("u"), l("c"), 1)],
        )
        .unwrap();
        let dl = description_length(&hin, &Partition::one_group(1)).unwrap();
        // C(3 + 5 - 1, 5) = 21
        assert!((dl - 21f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(matches!(
            description_length(&diagonal(), &Partition::one_group(3)),
            Err(ClusterError::InvalidPartition(_))
        ));
    }

    #[test]
    fn table_and_lgamma_agree() {
        let lf = LnFactorial::with_capacity(10);
        for k in [0u64, 1, 5, 10, 11, 500] {
            assert!((lf.ln(k) - libm::lgamma(k as f64 + 1.0)).abs() < 1e-12);
        }
        assert!((lf.log2_binomial(10, 3) - 120f64.log2()).abs() < 1e-12);
        assert_eq!(lf.log2_multiset(4, 0), 0.0);
    }
}
