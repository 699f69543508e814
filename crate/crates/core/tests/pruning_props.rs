use hina_core::synth::random_hin;
use hina_core::{binomial_quantile, prune, FixDeg, Hin, NullModelSpec};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_hin() -> impl Strategy<Value = Hin> {
    (1usize..15, 1usize..15, 1u64..300, any::<u64>()).prop_map(|(n1, n2, w, seed)| {
        random_hin(&mut ChaCha8Rng::seed_from_u64(seed), n1, n2, w)
    })
}

fn arb_fix_deg() -> impl Strategy<Value = FixDeg> {
    prop::sample::select(FixDeg::ALL.to_vec())
}

fn choose(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for t in 0..k {
        acc = acc * (n - t) / (t + 1);
    }
    acc
}

/// Quantile for a rational success probability `num / den`, using exact
/// integer arithmetic for `P(X <= k) >= p`. `p` is compared after scaling by
/// `den^n`, which is exact except for the rounding of `p` itself.
fn exact_quantile(n: u64, num: u64, den: u64, p: f64) -> u64 {
    let total = BigUint::from(den).pow(n as u32);
    // p as an exact binary fraction m / 2^52
    let m = BigUint::from((p * (1u64 << 52) as f64) as u64);
    let mut acc = BigUint::from(0u32);
    for k in 0..=n {
        acc += choose(n, k) * BigUint::from(num).pow(k as u32) * BigUint::from(den - num).pow((n - k) as u32);
        if &acc << 52 >= &total * &m {
            return k;
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quantile_matches_exact_arithmetic(n in 1u64..120, den in 2u64..40, num_frac in 0.0f64..1.0, p in 0.001f64..0.999) {
        let num = 1 + ((den - 2) as f64 * num_frac) as u64;
        let q = binomial_quantile(n, num as f64 / den as f64, p).unwrap();
        let exact = exact_quantile(n, num, den, p);
        // only a CDF value within rounding of p could legitimately differ
        if q != exact {
            let near = |k: u64| {
                let total = BigUint::from(den).pow(n as u32);
                let mut acc = BigUint::from(0u32);
                for j in 0..=k {
                    acc += choose(n, j) * BigUint::from(num).pow(j as u32) * BigUint::from(den - num).pow((n - j) as u32);
                }
                let ratio = acc.to_string().parse::<f64>().unwrap() / total.to_string().parse::<f64>().unwrap();
                (ratio - p).abs() < 1e-12
            };
            prop_assert!(near(q.min(exact)), "n={n} rho={num}/{den} p={p}: {q} vs {exact}");
        }
    }

    #[test]
    fn kept_sets_are_nested(hin in arb_hin(), fix in arb_fix_deg()) {
        let kept = |alpha: f64| prune(&hin, &NullModelSpec::new(fix, alpha)).unwrap().kept_pairs();
        let (a, b, c) = (kept(0.01), kept(0.05), kept(0.10));
        prop_assert!(a.iter().all(|e| b.contains(e)));
        prop_assert!(b.iter().all(|e| c.contains(e)));
    }

    #[test]
    fn decisions_match_their_thresholds(hin in arb_hin(), fix in arb_fix_deg(), alpha in 0.001f64..0.5) {
        let result = prune(&hin, &NullModelSpec::new(fix, alpha)).unwrap();
        for e in &result.edges {
            prop_assert_eq!(e.kept, e.weight >= e.threshold);
            prop_assert_eq!(e.threshold, binomial_quantile(e.n, e.rho, 1.0 - alpha).unwrap());
        }
    }

    #[test]
    fn relabeling_set2_permutes_decisions(hin in arb_hin(), fix in arb_fix_deg(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..hin.n2()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        // order[new] = old
        let mut position = vec![0; hin.n2()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let permuted = Hin::from_nodes(
            hin.set1().to_vec(),
            order.iter().map(|&old| hin.set2()[old].clone()).collect(),
            hin.edges().iter().map(|e| (e.source, position[e.target], e.weight)),
            hin.meta().clone(),
        ).unwrap();
        let spec = NullModelSpec::new(fix, 0.05);
        let mut a: Vec<(usize, usize)> = prune(&hin, &spec).unwrap().kept_pairs()
            .into_iter().map(|(i, j)| (i, position[j])).collect();
        let mut b = prune(&permuted, &spec).unwrap().kept_pairs();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }
}
