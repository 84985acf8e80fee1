use proptest::prelude::*;
use safetynet_stats::*;

proptest! {
    #[test]
    fn wilson_brackets_point_estimate(n in 1u64..500, frac in 0.0f64..=1.0, conf in prop::sample::select(vec![0.9, 0.95, 0.99])) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_counts(k, n, conf).unwrap();
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn wilson_widens_with_confidence(n in 1u64..300, k in 0u64..300) {
        let k = k.min(n);
        let (a, b) = wilson_counts(k, n, 0.9).unwrap();
        let (c, d) = wilson_counts(k, n, 0.99).unwrap();
        prop_assert!(c <= a + 1e-12 && d >= b - 1e-12);
    }

    #[test]
    fn fisher_is_a_probability(a in 0u64..60, b in 0u64..60, c in 0u64..60, d in 0u64..60) {
        prop_assume!(a + b + c + d > 0);
        let p = fisher_exact(&TwoByTwo::new(a, b, c, d)).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        // Swapping arms leaves the two-sided p unchanged.
        let q = fisher_exact(&TwoByTwo::new(c, d, a, b)).unwrap();
        prop_assert!((p - q).abs() <= 1e-12);
    }

    #[test]
    fn katz_interval_contains_estimate(a in 1u64..300, b in 0u64..300, c in 1u64..300, d in 0u64..300) {
        let rr = risk_ratio(&TwoByTwo::new(a, b, c, d), 0.95).unwrap();
        prop_assert!(rr.low <= rr.rr && rr.rr <= rr.high);
    }

    #[test]
    fn bh_adjusted_dominate_raw(p in prop::collection::vec(0.0f64..=1.0, 0..20)) {
        let r = benjamini_hochberg(&p, 0.05).unwrap();
        for (i, &raw) in p.iter().enumerate() {
            prop_assert!(r.adjusted[i] >= raw - 1e-15 && r.adjusted[i] <= 1.0);
            prop_assert_eq!(r.rejected[i], r.adjusted[i] <= 0.05 + 1e-15);
        }
    }

    #[test]
    fn quantile_is_monotone(v in prop::collection::vec(-1e3f64..1e3, 1..50), q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(quantile(&v, lo).unwrap() <= quantile(&v, hi).unwrap() + 1e-9);
    }

    #[test]
    fn kappa_is_bounded(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..80)) {
        if let Ok(k) = fleiss_kappa_binary(&pairs) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k));
        }
    }

    #[test]
    fn mann_whitney_u_sums(x in prop::collection::vec(0u8..6, 1..30), y in prop::collection::vec(0u8..6, 1..30)) {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let u1 = mann_whitney_u(&xf, &yf).unwrap().u;
        let u2 = mann_whitney_u(&yf, &xf).unwrap().u;
        prop_assert!((u1 + u2 - (x.len() * y.len()) as f64).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn katz_ci_excludes_one_iff_wald_significant(a in 1u64..200, b in 1u64..400, c in 1u64..200, d in 1u64..400) {
        let t = TwoByTwo::new(a, b, c, d);
        let rr = risk_ratio(&t, 0.95).unwrap();
        let se = (1.0 / a as f64 - 1.0 / (a + b) as f64 + 1.0 / c as f64 - 1.0 / (c + d) as f64).sqrt();
        let s = wald_summary("rr", rr.rr.ln(), se * se, 0.95);
        let excludes = rr.low > 1.0 || rr.high < 1.0;
        // Skip knife-edge cases where rounding decides the side.
        prop_assume!((s.p - 0.05).abs() > 1e-9);
        prop_assert_eq!(excludes, s.p < 0.05);
    }

    #[test]
    fn bh_is_permutation_invariant(p in prop::collection::vec(0.0f64..=0.2, 1..12), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
        let r1 = benjamini_hochberg(&p, 0.05).unwrap();
        let r2 = benjamini_hochberg(&shuffled, 0.05).unwrap();
        for (k, &i) in idx.iter().enumerate() {
            prop_assert_eq!(r1.rejected[i], r2.rejected[k]);
        }
    }
}

#[test]
fn bh_step_up_example() {
    let r = benjamini_hochberg(&[0.01, 0.02, 0.03, 0.04], 0.05).unwrap();
    assert!(r.rejected.iter().all(|&x| x));
}
