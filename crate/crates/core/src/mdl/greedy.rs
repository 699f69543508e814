//! Agglomerative greedy merging.
//!
//! Start from singletons, repeatedly commit the merge with the lowest change
//! in description length (a decrease if any exists, otherwise the smallest
//! increase), record the DL at every `B` down to 1, and replay the merge log
//! up to the best recorded `B`.
//!
//! Only the terms touching the two merged rows of the block-weight matrix
//! and the partition-size terms change on a merge, so each candidate is
//! scored from cached per-community costs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::description::{count_terms, terms_from_blocks, LnFactorial};
use super::{best_on_trace, BlockWeights, ClusterResult, MergeStep, Partition, DL_TIE_TOLERANCE};
use crate::hin::Hin;

const LN_2: f64 = std::f64::consts::LN_2;

struct Community {
    /// Smallest tie-break rank among members.
    key: usize,
    /// Smallest original Set1 index among members.
    rep: usize,
    size: u64,
    /// Sparse `(target, weight)` row of the block-weight matrix.
    row: Vec<(usize, u64)>,
    /// `sum_j log2 C(size + w_j - 1, w_j)` over the row.
    cost: f64,
}

fn row_cost(lf: &LnFactorial, size: u64, row: &[(usize, u64)]) -> f64 {
    row.iter().map(|&(_, w)| lf.log2_multiset(size, w)).sum()
}

fn merge_rows(a: &[(usize, u64)], b: &[(usize, u64)]) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].0.cmp(&b[y].0) {
            std::cmp::Ordering::Less => {
                out.push(a[x]);
                x += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[y]);
                y += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[x].0, a[x].1 + b[y].1));
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&a[x..]);
    out.extend_from_slice(&b[y..]);
    out
}

/// Change in the label and edge terms when `a` and `b` merge.
fn pair_delta(lf: &LnFactorial, a: &Community, b: &Community) -> f64 {
    let size = a.size + b.size;
    let labels = (lf.ln(a.size) + lf.ln(b.size) - lf.ln(size)) / LN_2;
    let merged = merge_rows(&a.row, &b.row);
    labels + row_cost(lf, size, &merged) - a.cost - b.cost
}

/// Runs the greedy pass once in index order, then `restarts - 1` more times
/// with the tie-break order shuffled by `seed`, keeping the lowest DL.
pub fn cluster(hin: &Hin, seed: Option<u64>, restarts: usize) -> ClusterResult {
    let n1 = hin.n1();
    let identity: Vec<usize> = (0..n1).collect();
    let mut best = cluster_with_ordering(hin, &identity);
    for attempt in 1..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
        rng.set_stream(attempt as u64);
        let mut order = identity.clone();
        order.shuffle(&mut rng);
        let mut rank = vec![0; n1];
        for (pos, &node) in order.iter().enumerate() {
            rank[node] = pos;
        }
        let candidate = cluster_with_ordering(hin, &rank);
        if candidate.best_dl < best.best_dl - DL_TIE_TOLERANCE {
            best = candidate;
        }
    }
    best
}

/// One deterministic greedy pass. `rank[i]` orders Set1 nodes for breaking
/// ties between merges of equal DL change: the pair whose (lower, higher)
/// minimum member ranks sort first wins.
pub fn cluster_with_ordering(hin: &Hin, rank: &[usize]) -> ClusterResult {
    let n1 = hin.n1();
    assert_eq!(rank.len(), n1, "rank must cover Set1");
    let lf = LnFactorial::for_hin(hin);

    let singletons = Partition::singletons(n1);
    let mut dl = terms_from_blocks(&lf, hin, &singletons, &BlockWeights::new(hin, &singletons)).total();
    let mut trace = vec![(n1, dl)];
    let mut merge_log = Vec::with_capacity(n1.saturating_sub(1));

    let mut slots: Vec<Option<Community>> = (0..n1)
        .map(|i| {
            let row: Vec<(usize, u64)> = hin.row(i).iter().map(|e| (e.target, e.weight)).collect();
            Some(Community {
                key: rank[i],
                rep: i,
                size: 1,
                cost: row_cost(&lf, 1, &row),
                row,
            })
        })
        .collect();

    // delta[a * n1 + b] for a < b
    let mut delta = vec![0.0f64; n1 * n1];
    delta
        .par_chunks_mut(n1.max(1))
        .enumerate()
        .for_each(|(a, out)| {
            let ca = slots[a].as_ref().expect("all slots start occupied");
            for b in a + 1..n1 {
                out[b] = pair_delta(&lf, ca, slots[b].as_ref().expect("occupied"));
            }
        });

    let mut active: Vec<usize> = (0..n1).collect();
    let mut step = 0;
    while active.len() > 1 {
        let groups = active.len();
        let shift = count_terms(&lf, n1, hin.n2(), hin.total_weight(), groups - 1)
            - count_terms(&lf, n1, hin.n2(), hin.total_weight(), groups);

        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for (x, &a) in active.iter().enumerate() {
            let key_a = slots[a].as_ref().map(|c| c.key).expect("active");
            for &b in &active[x + 1..] {
                let key_b = slots[b].as_ref().map(|c| c.key).expect("active");
                let d = delta[a * n1 + b];
                let keys = (key_a.min(key_b), key_a.max(key_b));
                let better = match best {
                    None => true,
                    Some((bd, bkeys, _, _)) => {
                        d < bd - DL_TIE_TOLERANCE
                            || ((d - bd).abs() <= DL_TIE_TOLERANCE && keys < bkeys)
                    }
                };
                if better {
                    best = Some((d, keys, a, b));
                }
            }
        }
        let (d, _, a, b) = best.expect("at least one pair");

        let cb = slots[b].take().expect("active");
        let ca = slots[a].take().expect("active");
        let size = ca.size + cb.size;
        let row = merge_rows(&ca.row, &cb.row);
        let merged = Community {
            key: ca.key.min(cb.key),
            rep: ca.rep.min(cb.rep),
            size,
            cost: row_cost(&lf, size, &row),
            row,
        };
        let delta_dl = shift + d;
        dl += delta_dl;
        step += 1;
        merge_log.push(MergeStep {
            step,
            merged: (ca.rep.min(cb.rep), ca.rep.max(cb.rep)),
            delta_dl,
        });
        trace.push((groups - 1, dl));
        slots[a] = Some(merged);
        active.retain(|&s| s != b);

        let updates: Vec<(usize, f64)> = active
            .par_iter()
            .filter(|&&c| c != a)
            .map(|&c| {
                let cc = slots[c].as_ref().expect("active");
                (c, pair_delta(&lf, slots[a].as_ref().expect("merged"), cc))
            })
            .collect();
        for (c, v) in updates {
            let (lo, hi) = (a.min(c), a.max(c));
            delta[lo * n1 + hi] = v;
        }
    }

    let (best_b, best_dl) = best_on_trace(&trace);
    let best_partition = replay(n1, &merge_log[..n1 - best_b]);
    ClusterResult {
        method: "greedy".into(),
        best_partition,
        best_dl,
        dl_trace: trace,
        merge_log,
    }
}

/// Applies the first merges of a log to the singleton partition.
pub(crate) fn replay(n1: usize, steps: &[MergeStep]) -> Partition {
    let mut labels: Vec<usize> = (0..n1).collect();
    for s in steps {
        let (keep, gone) = (labels[s.merged.0], labels[s.merged.1]);
        for l in labels.iter_mut() {
            if *l == gone {
                *l = keep;
            }
        }
    }
    Partition::from_labels(&labels).expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::NodeLabel;
    use crate::mdl::description_length;

    fn planted(block: usize, weight: u64) -> Hin {
        let n1 = 2 * block;
        let set1: Vec<NodeLabel> = (0..n1).map(|i| NodeLabel::simple(&format!("s{i}"))).collect();
        let set2: Vec<NodeLabel> = (0..2 * 5).map(|j| NodeLabel::simple(&format!("t{j}"))).collect();
        let mut pairs = Vec::new();
        for (i, node) in set1.iter().enumerate() {
            let g = i / block;
            for j in 0..5 {
                pairs.push((node.clone(), set2[g * 5 + j].clone(), weight));
            }
        }
        Hin::build(set1, set2, pairs).unwrap()
    }

    #[test]
    fn recovers_planted_blocks() {
        let hin = planted(10, 5);
        let result = cluster(&hin, None, 1);
        assert_eq!(result.best_partition.num_groups(), 2);
        let labels = result.best_partition.labels();
        assert!(labels[..10].iter().all(|&g| g == labels[0]));
        assert!(labels[10..].iter().all(|&g| g == labels[10]));
        assert_ne!(labels[0], labels[10]);
    }

    #[test]
    fn single_node() {
        let l = NodeLabel::simple;
        let hin = Hin::build(vec![l("u")], vec![l("a")], vec![(l("u"), l("a"), 3)]).unwrap();
        let result = cluster(&hin, None, 1);
        assert_eq!(result.best_partition.num_groups(), 1);
        assert!(result.merge_log.is_empty());
        assert_eq!(result.dl_trace.len(), 1);
    }

    #[test]
    fn uniform_noise_prefers_one_group() {
        let set1: Vec<NodeLabel> = (0..6).map(|i| NodeLabel::simple(&format!("s{i}"))).collect();
        let set2: Vec<NodeLabel> = (0..6).map(|j| NodeLabel::simple(&format!("t{j}"))).collect();
        let pairs = (0..36)
            .map(|c| (set1[c / 6].clone(), set2[c % 6].clone(), 1))
            .collect::<Vec<_>>();
        let hin = Hin::build(set1, set2, pairs).unwrap();
        assert_eq!(cluster(&hin, None, 1).best_partition.num_groups(), 1);
    }

    #[test]
    fn incremental_trace_matches_full_recompute() {
        let hin = planted(4, 3);
        let result = cluster(&hin, None, 1);
        for (k, &(b, dl)) in result.dl_trace.iter().enumerate() {
            let p = replay(hin.n1(), &result.merge_log[..k]);
            assert_eq!(p.num_groups(), b);
            let full = description_length(&hin, &p).unwrap();
            assert!((full - dl).abs() < 1e-9, "B={b}: {full} vs {dl}");
        }
    }

    #[test]
    fn restarts_are_deterministic() {
        let hin = planted(4, 2);
        let a = cluster(&hin, Some(9), 4);
        let b = cluster(&hin, Some(9), 4);
        assert_eq!(a, b);
        assert!(a.best_dl <= cluster(&hin, None, 1).best_dl + 1e-12);
    }
}
