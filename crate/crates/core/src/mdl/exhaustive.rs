use super::description::{count_terms, LnFactorial};
use super::{ClusterError, ClusterResult, Partition, DL_TIE_TOLERANCE};
use crate::hin::Hin;

pub const DEFAULT_MAX_N1: usize = 10;

struct Enumeration<'a> {
    hin: &'a Hin,
    lf: LnFactorial,
    labels: Vec<usize>,
    sizes: Vec<u64>,
    rows: Vec<Vec<u64>>,
    best: Option<(f64, usize, Vec<usize>)>,
    best_per_b: Vec<f64>,
}

impl Enumeration<'_> {
    fn score(&self) -> f64 {
        let hin = self.hin;
        let groups = self.sizes.len();
        let labels = (self.lf.ln(hin.n1() as u64)
            - self.sizes.iter().map(|&n| self.lf.ln(n)).sum::<f64>())
            / std::f64::consts::LN_2;
        let edges: f64 = self
            .rows
            .iter()
            .zip(&self.sizes)
            .map(|(row, &n)| row.iter().map(|&w| self.lf.log2_multiset(n, w)).sum::<f64>())
            .sum();
        count_terms(&self.lf, hin.n1(), hin.n2(), hin.total_weight(), groups) + labels + edges
    }

    fn visit(&mut self, node: usize) {
        if node == self.hin.n1() {
            let dl = self.score();
            let groups = self.sizes.len();
            if dl < self.best_per_b[groups] {
                self.best_per_b[groups] = dl;
            }
            let replace = match &self.best {
                None => true,
                Some((best, b, _)) => {
                    dl < best - DL_TIE_TOLERANCE
                        || ((dl - best).abs() <= DL_TIE_TOLERANCE && groups < *b)
                }
            };
            if replace {
                self.best = Some((dl, groups, self.labels.clone()));
            }
            return;
        }
        let open = self.sizes.len();
        for g in 0..=open {
            if g == open {
                self.sizes.push(0);
                self.rows.push(vec![0; self.hin.n2()]);
            }
            self.labels[node] = g;
            self.sizes[g] += 1;
            for e in self.hin.row(node) {
                self.rows[g][e.target] += e.weight;
            }
            self.visit(node + 1);
            for e in self.hin.row(node) {
                self.rows[g][e.target] -= e.weight;
            }
            self.sizes[g] -= 1;
            if g == open {
                self.sizes.pop();
                self.rows.pop();
            }
        }
    }
}

/// Global DL minimizer over every set partition of Set1 (Bell(N1) of them),
/// enumerated as restricted growth strings in lexicographic order. Ties go
/// to the smaller `B`, then to the lexicographically smallest labels.
pub fn exhaustive_cluster(hin: &Hin, max_n1: usize) -> Result<ClusterResult, ClusterError> {
    let n1 = hin.n1();
    if n1 > max_n1 {
        return Err(ClusterError::TooLarge { n1, max: max_n1 });
    }
    let mut search = Enumeration {
        hin,
        lf: LnFactorial::for_hin(hin),
        labels: vec![0; n1],
        sizes: Vec::new(),
        rows: Vec::new(),
        best: None,
        best_per_b: vec![f64::INFINITY; n1 + 1],
    };
    search.visit(0);
    let (best_dl, _, labels) = search.best.expect("at least one partition");
    let dl_trace = (1..=n1).rev().map(|b| (b, search.best_per_b[b])).collect();
    Ok(ClusterResult {
        method: "exhaustive".into(),
        best_partition: Partition::from_labels(&labels)?,
        best_dl,
        dl_trace,
        merge_log: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::NodeLabel;
    use crate::mdl::description_length;

    #[test]
    fn two_node_optimum() {
        let l = NodeLabel::simple;
        let hin = Hin::build(
            vec![l("1"), l("2")],
            vec![l("a"), l("b")],
            vec![(l("1"), l("a"), 2), (l("2"), l("b"), 2)],
        )
        .unwrap();
        let result = exhaustive_cluster(&hin, DEFAULT_MAX_N1).unwrap();
        assert_eq!(result.best_partition.num_groups(), 1);
        assert!((result.best_dl - 6.4919).abs() < 1e-3);
        assert!((result.dl_trace[0].1 - 7.1293).abs() < 1e-3);
    }

    #[test]
    fn visits_bell_many_partitions() {
        // Every B from N1 down to 1 appears on the trace with a finite value.
        let set1: Vec<NodeLabel> = (0..5).map(|i| NodeLabel::simple(&format!("s{i}"))).collect();
        let set2 = vec![NodeLabel::simple("t")];
        let pairs = set1.iter().map(|s| (s.clone(), set2[0].clone(), 1)).collect::<Vec<_>>();
        let hin = Hin::build(set1, set2, pairs).unwrap();
        let result = exhaustive_cluster(&hin, 10).unwrap();
        assert_eq!(result.dl_trace.iter().map(|t| t.0).collect::<Vec<_>>(), vec![5, 4, 3, 2, 1]);
        assert!(result.dl_trace.iter().all(|t| t.1.is_finite()));
        let check = description_length(&hin, &result.best_partition).unwrap();
        assert!((check - result.best_dl).abs() < 1e-9);
    }

    #[test]
    fn too_large() {
        let set1: Vec<NodeLabel> = (0..11).map(|i| NodeLabel::simple(&format!("s{i}"))).collect();
        let hin = Hin::build(set1, vec![NodeLabel::simple("t")], vec![]).unwrap();
        assert_eq!(
            exhaustive_cluster(&hin, DEFAULT_MAX_N1).unwrap_err(),
            ClusterError::TooLarge { n1: 11, max: 10 }
        );
    }
}
