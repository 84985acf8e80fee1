//! Two-sided Fisher exact test.

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::table::TwoByTwo;

/// Relative slack used when comparing table probabilities against the observed one.
pub const FISHER_RELATIVE_SLACK: f64 = 1e-7;

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Two-sided p-value: the total probability of all tables with the observed
/// margins whose probability does not exceed the observed table's.
pub fn fisher_exact(t: &TwoByTwo) -> Result<f64> {
    if t.total() == 0 {
        return domain("fisher exact test on an empty table");
    }
    let n1 = t.n1();
    let n2 = t.n2();
    let m1 = t.a + t.c;
    let lo = m1.saturating_sub(n2);
    let hi = n1.min(m1);

    // Normalising by the sum over the support cancels the shared ln C(N, m1) term.
    let logs: Vec<f64> = (lo..=hi).map(|x| ln_choose(n1, x) + ln_choose(n2, m1 - x)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let observed = weights[(t.a - lo) as usize];
    let cutoff = observed * (1.0 + FISHER_RELATIVE_SLACK);

    let total: f64 = weights.iter().sum();
    let tail: f64 = weights.iter().filter(|&&w| w <= cutoff).sum();
    Ok((tail / total).min(1.0))
}
