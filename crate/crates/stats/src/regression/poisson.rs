use nalgebra::{DMatrix, DVector};

use super::{group_rows, invert_spd, max_abs, sandwich, start_values, validate, Design, FitOptions, FitResult};
use crate::error::{Result, StatsError};

/// Modified Poisson regression: Poisson log-link IRLS on a binary outcome with a
/// cluster-robust (CR0) sandwich. Without `clusters`, each row is its own cluster.
pub fn fit_modified_poisson<C: Ord>(
    design: &Design,
    y: &[f64],
    clusters: Option<&[C]>,
    opts: FitOptions,
) -> Result<FitResult> {
    validate(design, y, false)?;
    let groups = match clusters {
        Some(c) if c.len() != y.len() => {
            return Err(StatsError::Domain("cluster ids do not match the outcome length".into()))
        }
        Some(c) => group_rows(c),
        None => (0..y.len()).map(|i| vec![i]).collect(),
    };
    let x = &design.x;
    let (n, p) = (x.nrows(), x.ncols());
    let mut beta = start_values(design, y)?;

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
        let xtw = DMatrix::from_fn(p, n, |j, i| x[(i, j)] * mu[i]);
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / mu[i]);
        let next = invert_spd(&(&xtw * x))? * (&xtw * z);
        let step = &next - &beta;
        beta = next;
        if max_abs(&step) < opts.tol {
            break;
        }
    }

    let mu = (x * &beta).map(f64::exp);
    let info = DMatrix::from_fn(p, p, |a, b| (0..n).map(|i| x[(i, a)] * mu[i] * x[(i, b)]).sum());
    let bread_inv = invert_spd(&info)?;
    let scores: Vec<DVector<f64>> = groups
        .iter()
        .map(|rows| {
            let mut s = DVector::zeros(p);
            for &i in rows {
                s += x.row(i).transpose() * (y[i] - mu[i]);
            }
            s
        })
        .collect();
    Ok(FitResult {
        names: design.names.clone(),
        estimates: beta.iter().copied().collect(),
        robust_covariance: sandwich(&bread_inv, &scores),
        model_covariance: bread_inv,
        iterations,
        scale: 1.0,
        correlation: None,
        n_obs: n,
        n_clusters: groups.len(),
    })
}
