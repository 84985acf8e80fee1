//! Inter-rater agreement for doubly-rated visits.

use crate::error::{domain, Result};

/// Fleiss' κ for two raters and a binary outcome.
pub fn fleiss_kappa_binary(pairs: &[(bool, bool)]) -> Result<f64> {
    let counts: Vec<[u32; 2]> = pairs
        .iter()
        .map(|&(x, y)| {
            let pos = x as u32 + y as u32;
            [pos, 2 - pos]
        })
        .collect();
    fleiss_kappa(&counts)
}

/// Fleiss' κ from per-item category counts. Every item must have the same
/// number of ratings (at least two).
pub fn fleiss_kappa<const K: usize>(items: &[[u32; K]]) -> Result<f64> {
    if items.is_empty() {
        return domain("fleiss kappa needs at least one item");
    }
    let raters: u32 = items[0].iter().sum();
    if raters < 2 {
        return domain("fleiss kappa needs at least two ratings per item");
    }
    if items.iter().any(|row| row.iter().sum::<u32>() != raters) {
        return domain("every item must have the same number of ratings");
    }
    let n = raters as f64;
    let big_n = items.len() as f64;

    let p_bar = items
        .iter()
        .map(|row| {
            let s: f64 = row.iter().map(|&c| c as f64 * (c as f64 - 1.0)).sum();
            s / (n * (n - 1.0))
        })
        .sum::<f64>()
        / big_n;
    let p_e: f64 = (0..K)
        .map(|j| {
            let pj = items.iter().map(|row| row[j] as f64).sum::<f64>() / (big_n * n);
            pj * pj
        })
        .sum();
    if (1.0 - p_e).abs() < f64::EPSILON {
        return domain("chance agreement is 1; kappa undefined");
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Share of rating pairs whose Likert scores differ by at most one point.
pub fn within_one_agreement(pairs: &[(u8, u8)]) -> Result<f64> {
    if pairs.is_empty() {
        return domain("within-1 agreement needs at least one pair");
    }
    if pairs.iter().any(|&(x, y)| !(1..=5).contains(&x) || !(1..=5).contains(&y)) {
        return domain("likert scores must lie in 1..=5");
    }
    let close = pairs.iter().filter(|&&(x, y)| x.abs_diff(y) <= 1).count();
    Ok(close as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let mut pairs = vec![(true, true); 2];
        pairs.extend(vec![(false, false); 6]);
        pairs.push((true, false));
        pairs.push((false, true));
        let k = fleiss_kappa_binary(&pairs).unwrap();
        assert!((k - 0.22 / 0.42).abs() < 1e-12);
        assert!((k - 0.5238).abs() < 1e-4);
    }

    #[test]
    fn perfect_agreement() {
        let pairs = [(true, true), (false, false), (true, true)];
        assert!((fleiss_kappa_binary(&pairs).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn within_one() {
        let v = within_one_agreement(&[(1, 2), (3, 5), (4, 4), (5, 1)]).unwrap();
        assert_eq!(v, 0.5);
        assert!(within_one_agreement(&[(0, 2)]).is_err());
    }
}
