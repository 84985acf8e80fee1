//! Binomial proportion intervals and normal reference quantiles.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// Two-sided standard normal critical value for a confidence level.
pub fn z_critical(conf: f64) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(1.0 - (1.0 - conf) / 2.0)
}

/// Two-sided p-value for a standard normal test statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let normal = Normal::standard();
    (2.0 * normal.sf(z.abs())).min(1.0)
}

/// Wilson score interval for `successes` out of `n`.
///
/// Accepts fractional counts so that 0.5-weighted ratings can be summarised
/// without rounding.
pub fn wilson_interval(successes: f64, n: f64, conf: f64) -> Result<(f64, f64)> {
    if !(n > 0.0) {
        return domain("wilson interval needs n >= 1");
    }
    if !(0.0..=n).contains(&successes) {
        return domain(format!("successes {successes} outside [0, {n}]"));
    }
    if !(conf > 0.0 && conf < 1.0) {
        return domain(format!("confidence level {conf} outside (0, 1)"));
    }
    let z = z_critical(conf);
    let z2 = z * z;
    let p = successes / n;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == n { 1.0 } else { (center + half).min(1.0) };
    Ok((low, high))
}

/// Integer-count convenience wrapper over [`wilson_interval`].
pub fn wilson_counts(successes: u64, n: u64, conf: f64) -> Result<(f64, f64)> {
    wilson_interval(successes as f64, n as f64, conf)
}
