use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::quantile::quantile_sorted;

/// Percentile bootstrap interval for `statistic` over `values`.
/// The same seed always yields the same interval.
pub fn bootstrap_ci<F>(values: &[f64], statistic: F, resamples: usize, conf: f64, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if values.is_empty() {
        return domain("bootstrap of an empty sample");
    }
    if resamples == 0 {
        return domain("bootstrap needs at least one resample");
    }
    if !(conf > 0.0 && conf < 1.0) {
        return domain("confidence level must lie in (0, 1)");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; values.len()];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = values[rng.random_range(0..values.len())];
        }
        stats.push(statistic(&buf));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - conf;
    Ok((quantile_sorted(&stats, alpha / 2.0), quantile_sorted(&stats, 1.0 - alpha / 2.0)))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        let v: Vec<f64> = (0..50).map(|i| (i * 7 % 13) as f64).collect();
        let a = bootstrap_ci(&v, mean, 500, 0.95, 9).unwrap();
        let b = bootstrap_ci(&v, mean, 500, 0.95, 9).unwrap();
        assert_eq!(a, b);
        let m = mean(&v);
        assert!(a.0 < m && m < a.1);
    }

    #[test]
    fn constant_sample_collapses() {
        let a = bootstrap_ci(&[3.0; 10], mean, 100, 0.95, 1).unwrap();
        assert_eq!(a, (3.0, 3.0));
    }
}
