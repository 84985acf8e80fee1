mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safetynet_stats::*;

#[test]
fn fisher_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let t = TwoByTwo::new(
            rng.random_range(0..30),
            rng.random_range(0..30),
            rng.random_range(0..30),
            rng.random_range(0..30),
        );
        if t.total() == 0 {
            continue;
        }
        let got = fisher_exact(&t).unwrap();
        let want = common::fisher_enumeration(&t);
        assert!((got - want).abs() <= 1e-12 * want, "{t:?}: {got} vs {want}");
    }
}

#[test]
fn wilson_matches_score_inversion() {
    for conf in [0.90, 0.95, 0.99] {
        for n in 1..=200u64 {
            for k in [0, 1, n / 3, n / 2, n - 1, n] {
                let (lo, hi) = wilson_counts(k, n, conf).unwrap();
                let (olo, ohi) = common::wilson_score_inversion(k, n, conf);
                assert!((lo - olo).abs() < 1e-6 && (hi - ohi).abs() < 1e-6, "{k}/{n} @ {conf}");
            }
        }
    }
}

#[test]
fn katz_matches_alternate_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let t = TwoByTwo::new(
            rng.random_range(1..200),
            rng.random_range(0..500),
            rng.random_range(1..200),
            rng.random_range(0..500),
        );
        let rr = risk_ratio(&t, 0.95).unwrap();
        let (orr, olo, ohi) = common::katz_alternate(&t, 0.95);
        for (g, w) in [(rr.rr, orr), (rr.low, olo), (rr.high, ohi)] {
            assert!((g - w).abs() <= 1e-10 * w.abs().max(1.0), "{t:?}");
        }
    }
}

#[test]
fn fleiss_matches_hand_computation() {
    let mut pairs = vec![(true, true); 2];
    pairs.extend([(false, false); 6]);
    pairs.extend([(true, false), (false, true)]);
    // P̄ = 0.8, p = (0.3, 0.7), Pe = 0.58.
    assert!((fleiss_kappa_binary(&pairs).unwrap() - 0.5238095238095238).abs() < 1e-9);
}

#[test]
fn impact_reproduces_table_nnt() {
    // Yearly volume and (RRR, NNT) per category.
    for (nnt, averted) in [(11.3f64, 35_383.0), (27.8, 14_388.0), (18.1, 22_102.0), (13.9, 28_880.0)] {
        let implied: f64 = 400_000.0 / nnt;
        assert!((implied - averted).abs() / averted < 0.005, "{nnt}");
    }
    let i = impact(0.25, 0.25 - 1.0 / 11.3, 400_000).unwrap();
    assert!((i.nnt.unwrap() - 11.3).abs() < 1e-9);
    assert_eq!(i.averted, Some((400_000.0f64 / 11.3).round() as i64));
}

#[test]
fn fisher_matches_enumeration_exhaustively_for_small_cells() {
    let mut checked = 0;
    for a in 0..=12 {
        for b in 0..=12 {
            for c in 0..=12 {
                for d in 0..=12 {
                    let t = TwoByTwo::new(a, b, c, d);
                    if t.total() == 0 {
                        continue;
                    }
                    let got = fisher_exact(&t).unwrap();
                    let want = common::fisher_enumeration(&t);
                    assert!((got - want).abs() <= 1e-12 * want, "{t:?}: {got} vs {want}");
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 13usize.pow(4) - 1);
}

#[test]
fn mann_whitney_separated_samples() {
    let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert_eq!(r.u, 0.0);
}

#[test]
fn weighted_rate_is_mean_of_visit_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let visits: Vec<Vec<bool>> =
        (0..300).map(|_| (0..rng.random_range(1..=2)).map(|_| rng.random_bool(0.3)).collect()).collect();
    let w = weighted_error_rate(visits.iter().map(|v| v.as_slice())).unwrap();
    let direct: f64 = visits.iter().map(|v| v.iter().filter(|&&e| e).count() as f64 / v.len() as f64).sum::<f64>()
        / visits.len() as f64;
    assert!((w.rate() - direct).abs() < 1e-12);
}
