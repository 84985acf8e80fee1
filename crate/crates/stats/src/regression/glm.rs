use nalgebra::{DMatrix, DVector};

use super::{invert_spd, max_abs, sandwich, start_values, validate, Design, FitOptions, FitResult};
use crate::error::{Result, StatsError};

/// Log-binomial GLM by IRLS. The robust covariance treats each row as its own
/// cluster (HC0).
pub fn fit_log_binomial_glm(design: &Design, y: &[f64], opts: FitOptions) -> Result<FitResult> {
    validate(design, y, true)?;
    let x = &design.x;
    let (n, p) = (x.nrows(), x.ncols());
    let yv = DVector::from_column_slice(y);
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
        let eta = x * &beta;
        let mu = eta.map(f64::exp);
        let w = mu.zip_map(&mu, |m, _| m / (1.0 - m));
        let z = DVector::from_fn(n, |i, _| eta[i] + (yv[i] - mu[i]) / mu[i]);
        let xtw = DMatrix::from_fn(p, n, |j, i| x[(i, j)] * w[i]);
        let info = &xtw * x;
        let target = invert_spd(&info)? * (&xtw * z);
        let step = target - &beta;

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

    let mu = (x * &beta).map(f64::exp);
    let w = mu.map(|m| m / (1.0 - m));
    let info = DMatrix::from_fn(p, p, |a, b| (0..n).map(|i| x[(i, a)] * w[i] * x[(i, b)]).sum());
    let bread_inv = invert_spd(&info)?;
    let scores: Vec<DVector<f64>> = (0..n).map(|i| x.row(i).transpose() * ((yv[i] - mu[i]) / (1.0 - mu[i]))).collect();
    Ok(FitResult {
        names: design.names.clone(),
        estimates: beta.iter().copied().collect(),
        robust_covariance: sandwich(&bread_inv, &scores),
        model_covariance: bread_inv,
        iterations,
        scale: 1.0,
        correlation: None,
        n_obs: n,
        n_clusters: n,
    })
}
