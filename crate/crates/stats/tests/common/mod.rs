//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safetynet_stats::{Design, TwoByTwo};

fn choose_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact two-sided Fisher p-value by integer enumeration. Valid while the
/// binomial products fit in u128 (N up to about 120).
pub fn fisher_enumeration(t: &TwoByTwo) -> f64 {
    let (n1, n2, m1) = (t.a + t.b, t.c + t.d, t.a + t.c);
    let weight = |x: u64| choose_u128(n1, x) * choose_u128(n2, m1 - x);
    let observed = weight(t.a);
    let lo = m1.saturating_sub(n2);
    let hi = n1.min(m1);
    let mut tail: u128 = 0;
    let mut total: u128 = 0;
    for x in lo..=hi {
        let w = weight(x);
        total += w;
        if w <= observed {
            tail += w;
        }
    }
    tail as f64 / total as f64
}

fn z(conf: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(1.0 - (1.0 - conf) / 2.0)
}

/// Wilson bounds by bisection on the score statistic |p̂ − p| = z·sqrt(p(1−p)/n).
pub fn wilson_score_inversion(k: u64, n: u64, conf: f64) -> (f64, f64) {
    let zc = z(conf);
    let phat = k as f64 / n as f64;
    let excess = |p: f64| (phat - p).abs() - zc * (p * (1.0 - p) / n as f64).sqrt();
    // excess > 0 outside the interval, <= 0 inside.
    let solve = |mut outside: f64, mut inside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (outside + inside);
            if excess(mid) > 0.0 {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        0.5 * (outside + inside)
    };
    let low = if k == 0 { 0.0 } else { solve(0.0, phat) };
    let high = if k == n { 1.0 } else { solve(1.0, phat) };
    (low, high)
}

/// Katz interval written as sqrt(b/(a·n1) + d/(c·n2)).
pub fn katz_alternate(t: &TwoByTwo, conf: f64) -> (f64, f64, f64) {
    let (a, b, c, d) = (t.a as f64, t.b as f64, t.c as f64, t.d as f64);
    let n1 = a + b;
    let n2 = c + d;
    let rr = (a * n2) / (c * n1);
    let se = (b / (a * n1) + d / (c * n2)).sqrt();
    let zc = z(conf);
    (rr, rr * (-zc * se).exp(), rr * (zc * se).exp())
}

fn same_cluster<C: PartialEq>(clusters: &[C]) -> DMatrix<f64> {
    let n = clusters.len();
    DMatrix::from_fn(n, n, |i, j| if clusters[i] == clusters[j] { 1.0 } else { 0.0 })
}

/// Poisson sandwich from full N×N matrices:
/// (X'MX)⁻¹ X' diag(e) C diag(e) X (X'MX)⁻¹ with M = diag(μ), C the same-cluster indicator.
pub fn poisson_sandwich_direct<C: PartialEq>(
    x: &DMatrix<f64>,
    y: &[f64],
    clusters: &[C],
    beta: &[f64],
) -> DMatrix<f64> {
    let mu = x * DVector::from_column_slice(beta);
    let mu = mu.map(f64::exp);
    let m = DMatrix::from_diagonal(&mu);
    let e = DMatrix::from_diagonal(&DVector::from_fn(y.len(), |i, _| y[i] - mu[i]));
    let bread = (x.transpose() * &m * x).try_inverse().expect("invertible");
    let meat = x.transpose() * &e * same_cluster(clusters) * &e * x;
    &bread * meat * &bread
}

/// GEE log-binomial sandwich from full N×N matrices:
/// D = diag(μ)X, V = A^{1/2} R A^{1/2}, S = (y−μ)(y−μ)' ∘ C,
/// B = D'V⁻¹D, robust = B⁻¹ D'V⁻¹ S V⁻¹ D B⁻¹.
pub fn gee_sandwich_direct<C: PartialEq>(
    x: &DMatrix<f64>,
    y: &[f64],
    clusters: &[C],
    beta: &[f64],
    alpha: f64,
) -> DMatrix<f64> {
    let n = y.len();
    let mu = (x * DVector::from_column_slice(beta)).map(f64::exp);
    let d = DMatrix::from_diagonal(&mu) * x;
    let c = same_cluster(clusters);
    let sd = mu.map(|m| (m * (1.0 - m)).sqrt());
    let v = DMatrix::from_fn(n, n, |i, j| {
        if c[(i, j)] == 0.0 {
            0.0
        } else if i == j {
            sd[i] * sd[j]
        } else {
            alpha * sd[i] * sd[j]
        }
    });
    let v_inv = v.try_inverse().expect("working covariance invertible");
    let r = DVector::from_fn(n, |i, _| y[i] - mu[i]);
    let s = (&r * r.transpose()).component_mul(&c);
    let b = d.transpose() * &v_inv * &d;
    let b_inv = b.try_inverse().expect("invertible");
    &b_inv * (d.transpose() * &v_inv * s * &v_inv * &d) * &b_inv
}

pub fn max_rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs() / scale))
}

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("x{i}")).collect()
}

/// Intercept, binary arm, continuous covariate; clusters of varying size.
pub fn fixture(n: usize, seed: u64) -> (Design, Vec<f64>, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut clusters = Vec::new();
    for i in 0..n {
        let cluster = (i / 4) as u32 + (i % 3 == 0) as u32 * 100;
        let arm = rng.random_bool(0.5) as u8 as f64;
        let age = rng.random_range(-1.0..1.0);
        let p = (0.3f64.ln() + arm * 0.8f64.ln() + 0.2 * age).exp();
        y.push(rng.random_bool(p) as u8 as f64);
        rows.push(vec![1.0, arm, age]);
        clusters.push(cluster);
    }
    (Design::from_rows(names(3), &rows).unwrap(), y, clusters)
}
