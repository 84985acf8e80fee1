use nalgebra::{DMatrix, DVector};

use super::{group_rows, invert_spd, max_abs, sandwich, start_values, validate, Design, FitOptions, FitResult};
use crate::error::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkingCorrelation {
    Independence,
    Exchangeable,
}

struct Pieces {
    bread: DMatrix<f64>,
    scores: Vec<DVector<f64>>,
    scale: f64,
    alpha: f64,
}

/// Log-binomial GEE with a robust (sandwich) covariance.
///
/// Per cluster: `Dᵢ = diag(μ) Xᵢ`, `Vᵢ = φ A^{1/2} R(α) A^{1/2}` with `A = diag(μ(1−μ))`.
/// Scores are assembled in Pearson form, so φ cancels from the estimating equation.
pub fn fit_log_binomial_gee<C: Ord>(
    design: &Design,
    y: &[f64],
    clusters: &[C],
    corr: WorkingCorrelation,
    opts: FitOptions,
) -> Result<FitResult> {
    validate(design, y, true)?;
    if clusters.len() != y.len() {
        return Err(StatsError::Domain("cluster ids do not match the outcome length".into()));
    }
    let groups = group_rows(clusters);
    let x = &design.x;
    let mut beta = start_values(design, y)?;
    if (x * &beta).iter().any(|&e| e >= 0.0) {
        return Err(StatsError::Boundary { halvings: 0, estimates: beta.iter().copied().collect() });
    }

    let mut iterations = 0;
    loop {
        if iterations == opts.max_iter {
            return Err(StatsError::Convergence {
                iterations,
                last_step: f64::NAN,
                estimates: beta.iter().copied().collect(),
            });
        }
        iterations += 1;
        let pieces = assemble(x, y, &groups, &beta, corr);
        let mut u = DVector::zeros(x.ncols());
        for s in &pieces.scores {
            u += s;
        }
        let step = invert_spd(&pieces.bread)? * u;

        let mut t = 1.0;
        let mut halvings = 0;
        while (x * (&beta + &step * t)).iter().any(|&e| e >= 0.0) {
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(StatsError::Boundary {
                    halvings: opts.max_halvings,
                    estimates: beta.iter().copied().collect(),
                });
            }
            t *= 0.5;
        }
        let applied = &step * t;
        beta += &applied;
        if max_abs(&applied) < opts.tol {
            break;
        }
    }

    let pieces = assemble(x, y, &groups, &beta, corr);
    let bread_inv = invert_spd(&pieces.bread)?;
    Ok(FitResult {
        names: design.names.clone(),
        estimates: beta.iter().copied().collect(),
        robust_covariance: sandwich(&bread_inv, &pieces.scores),
        model_covariance: &bread_inv * pieces.scale,
        iterations,
        scale: pieces.scale,
        correlation: match corr {
            WorkingCorrelation::Independence => None,
            WorkingCorrelation::Exchangeable => Some(pieces.alpha),
        },
        n_obs: y.len(),
        n_clusters: groups.len(),
    })
}

fn assemble(
    x: &DMatrix<f64>,
    y: &[f64],
    groups: &[Vec<usize>],
    beta: &DVector<f64>,
    corr: WorkingCorrelation,
) -> Pieces {
    let (n, p) = (x.nrows(), x.ncols());
    let mu = (x * beta).map(f64::exp);
    let sd: Vec<f64> = mu.iter().map(|m| (m * (1.0 - m)).sqrt()).collect();
    let resid: Vec<f64> = (0..n).map(|i| (y[i] - mu[i]) / sd[i]).collect();

    let scale = resid.iter().map(|r| r * r).sum::<f64>() / (n - p) as f64;
    let alpha = match corr {
        WorkingCorrelation::Independence => 0.0,
        WorkingCorrelation::Exchangeable => exchangeable_alpha(groups, &resid, scale),
    };

    let mut bread = DMatrix::zeros(p, p);
    let mut scores = Vec::with_capacity(groups.len());
    for rows in groups {
        let m = rows.len();
        // Wᵢ = diag(μ/√v) Xᵢ
        let w = DMatrix::from_fn(m, p, |r, j| mu[rows[r]] / sd[rows[r]] * x[(rows[r], j)]);
        let e = DVector::from_fn(m, |r, _| resid[rows[r]]);
        // R⁻¹ = (I − c·11') / (1 − α)
        let c = alpha / (1.0 + (m as f64 - 1.0) * alpha);
        let col_sum = w.row_sum().transpose();
        let e_sum = e.sum();
        let k = 1.0 / (1.0 - alpha);
        bread += (w.transpose() * &w - &col_sum * col_sum.transpose() * c) * k;
        scores.push((w.transpose() * &e - &col_sum * (c * e_sum)) * k);
    }
    Pieces { bread, scores, scale, alpha }
}

/// Moment estimate of the exchangeable correlation, clamped to the range where
/// every cluster's working correlation matrix stays positive definite.
fn exchangeable_alpha(groups: &[Vec<usize>], resid: &[f64], scale: f64) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    let mut largest = 1usize;
    for rows in groups {
        let m = rows.len();
        largest = largest.max(m);
        if m < 2 {
            continue;
        }
        let s: f64 = rows.iter().map(|&i| resid[i]).sum();
        let ss: f64 = rows.iter().map(|&i| resid[i] * resid[i]).sum();
        num += (s * s - ss) / 2.0;
        pairs += (m * (m - 1)) as f64 / 2.0;
    }
    if pairs == 0.0 || scale <= 0.0 {
        return 0.0;
    }
    let alpha = num / pairs / scale;
    let floor = -1.0 / (largest as f64 - 1.0) + 1e-6;
    alpha.clamp(floor, 1.0 - 1e-6)
}
