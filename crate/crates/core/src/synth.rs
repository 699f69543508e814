//! Synthetic networks and interaction logs for tests, benchmarks and demos.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hin::{Hin, HinMeta, Node, NodeLabel};

fn nodes(prefix: &str, n: usize) -> Vec<Node> {
    (0..n)
        .map(|i| Node::new(NodeLabel::simple(&format!("{prefix}{i}"))))
        .collect()
}

/// Throws `weight` unit interactions uniformly onto an `n1 x n2` grid.
pub fn random_hin<R: Rng + ?Sized>(rng: &mut R, n1: usize, n2: usize, weight: u64) -> Hin {
    let mut cells = vec![0u64; n1 * n2];
    for _ in 0..weight {
        cells[rng.gen_range(0..n1 * n2)] += 1;
    }
    let edges = cells
        .iter()
        .enumerate()
        .filter(|&(_, &w)| w > 0)
        .map(|(c, &w)| (c / n2, c % n2, w));
    Hin::from_nodes(nodes("u", n1), nodes("v", n2), edges, HinMeta::default())
        .expect("generated network is valid")
}

/// A random network with sizes drawn from `1..=max_n1`, `1..=max_n2` and
/// total weight from `1..=max_w`.
pub fn random_sized_hin<R: Rng + ?Sized>(rng: &mut R, max_n1: usize, max_n2: usize, max_w: u64) -> Hin {
    let n1 = rng.gen_range(1..=max_n1);
    let n2 = rng.gen_range(1..=max_n2);
    let w = rng.gen_range(1..=max_w);
    random_hin(rng, n1, n2, w)
}

/// Block-diagonal network: every Set1 node of block `r` sends `in_weight` to
/// each of `targets_per_block` Set2 nodes owned by that block, plus a random
/// weight in `0..=cross_max` to every other Set2 node. Returns the network
/// and the planted block of each Set1 node.
pub fn planted_blocks<R: Rng + ?Sized>(
    rng: &mut R,
    block_sizes: &[usize],
    targets_per_block: usize,
    in_weight: u64,
    cross_max: u64,
) -> (Hin, Vec<usize>) {
    let truth: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(r, &n)| std::iter::repeat_n(r, n))
        .collect();
    let n2 = block_sizes.len() * targets_per_block;
    let mut edges = Vec::new();
    for (i, &r) in truth.iter().enumerate() {
        for j in 0..n2 {
            let w = if j / targets_per_block == r {
                in_weight
            } else {
                rng.gen_range(0..=cross_max)
            };
            if w > 0 {
                edges.push((i, j, w));
            }
        }
    }
    let hin = Hin::from_nodes(nodes("u", truth.len()), nodes("v", n2), edges, HinMeta::default())
        .expect("generated network is valid");
    (hin, truth)
}

pub const CASE_STUDENTS: usize = 27;
pub const CASE_AI_ONLY: usize = 9;
pub const CASE_PEER_GROUP: usize = 14;

/// The fourteen interaction codes, grouped cognitive, metacognitive,
/// socio-emotional, coordinative.
pub const CASE_CODES: [&str; 14] = [
    "Question",
    "New Idea/Suggestion",
    "Critical Assessment",
    "Elaboration",
    "Planning",
    "Monitoring",
    "Reflection",
    "Agreement/Alignment",
    "Encouragement/Greetings",
    "Disagreement",
    "Task Clarification",
    "Task Assignment",
    "Resource Coordination",
    "Off-task",
];

pub fn case_student(i: usize) -> String {
    format!("S{:02}", i + 1)
}

/// Message log for a 27-student collaborative class with a chatbot partner
/// `AI`, one row per message with columns `student,partner,code`.
///
/// Students `S01..S14` collaborate with each other and the chatbot. The
/// remaining 13 use the chatbot; `S15..S23` talk to nobody else, which gives
/// them zero partner diversity. With `planted` set, the peer group draws its
/// codes from the first seven (asking the chatbot only questions) and the
/// chatbot group from the last seven, so the two groups are separable on
/// content; otherwise every message code is uniform over all fourteen.
pub fn case_study_log(seed: u64, planted: bool) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(String, String, &str)> = Vec::new();
    let peer_codes = &CASE_CODES[..7];
    let ai_codes = &CASE_CODES[7..];
    let pick = |rng: &mut ChaCha8Rng, preferred: &'static [&'static str]| -> &'static str {
        if planted {
            preferred.choose(rng).copied().expect("non-empty")
        } else {
            CASE_CODES.choose(rng).copied().expect("non-empty")
        }
    };
    for i in 0..CASE_PEER_GROUP {
        for p in 0..CASE_PEER_GROUP {
            if p == i {
                continue;
            }
            for code in peer_codes {
                let code = if planted { *code } else { pick(&mut rng, peer_codes) };
                for _ in 0..rng.gen_range(1..=2) {
                    rows.push((case_student(i), case_student(p), code));
                }
            }
        }
        for _ in 0..rng.gen_range(3..=5) {
            let code = if planted { CASE_CODES[0] } else { pick(&mut rng, peer_codes) };
            rows.push((case_student(i), "AI".into(), code));
        }
    }
    for i in CASE_PEER_GROUP..CASE_STUDENTS {
        for code in ai_codes {
            let code = if planted { *code } else { pick(&mut rng, ai_codes) };
            for _ in 0..rng.gen_range(4..=6) {
                rows.push((case_student(i), "AI".into(), code));
            }
        }
        if i >= CASE_PEER_GROUP + CASE_AI_ONLY {
            let peer = case_student(rng.gen_range(0..CASE_PEER_GROUP));
            let code = pick(&mut rng, ai_codes);
            rows.push((case_student(i), peer, code));
        }
    }
    rows.shuffle(&mut rng);
    let mut out = String::from("student,partner,code\n");
    for (s, p, c) in rows {
        writeln!(out, "{s},{p},{c}").expect("write to string");
    }
    out
}

/// Planted group of each student in [`case_study_log`] order of students.
pub fn case_study_truth() -> Vec<usize> {
    (0..CASE_STUDENTS).map(|i| usize::from(i >= CASE_PEER_GROUP)).collect()
}
