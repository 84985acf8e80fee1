//! Log-link regression for binary outcomes: log-binomial GLM and GEE, and
//! modified Poisson with a cluster-robust sandwich.
//!
//! All fitters return a [`FitResult`]; interval and p-value derivations are
//! pure functions of an estimate and its variance ([`wald_summary`]).

mod gee;
mod glm;
mod poisson;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, StatsError};
use crate::interval::{normal_two_sided_p, z_critical};

pub use gee::{fit_log_binomial_gee, WorkingCorrelation};
pub use glm::fit_log_binomial_glm;
pub use poisson::fit_modified_poisson;

/// Named design matrix, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
}

impl Design {
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        if rows.iter().any(|r| r.len() != p) {
            return domain("design row width does not match the column names");
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Ok(Self { names, x })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, max_halvings: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub model_covariance: DMatrix<f64>,
    pub robust_covariance: DMatrix<f64>,
    pub iterations: usize,
    /// Pearson dispersion; 1 for fitters that do not estimate it.
    pub scale: f64,
    /// Exchangeable working correlation, when one was estimated.
    pub correlation: Option<f64>,
    pub n_obs: usize,
    pub n_clusters: usize,
}

impl FitResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn robust_se(&self, i: usize) -> f64 {
        self.robust_covariance[(i, i)].sqrt()
    }

    pub fn coefficient(&self, i: usize, conf: f64) -> CoefficientSummary {
        wald_summary(&self.names[i], self.estimates[i], self.robust_covariance[(i, i)], conf)
    }

    /// Robust Wald summaries for every coefficient, on the relative-risk scale.
    pub fn summary(&self, conf: f64) -> Vec<CoefficientSummary> {
        (0..self.names.len()).map(|i| self.coefficient(i, conf)).collect()
    }

    /// Summary for a linear combination `w'β`, e.g. the implied omitted level of a
    /// sum-to-zero factor.
    pub fn contrast(&self, name: &str, weights: &[f64], conf: f64) -> CoefficientSummary {
        let w = DVector::from_column_slice(weights);
        let b = DVector::from_column_slice(&self.estimates);
        let est = w.dot(&b);
        let var = (w.transpose() * &self.robust_covariance * &w)[(0, 0)];
        wald_summary(name, est, var, conf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub rr: f64,
    pub low: f64,
    pub high: f64,
    pub p: f64,
}

/// Wald interval and p-value on the log scale, exponentiated.
pub fn wald_summary(name: &str, estimate: f64, variance: f64, conf: f64) -> CoefficientSummary {
    let se = variance.max(0.0).sqrt();
    let z = z_critical(conf);
    CoefficientSummary {
        name: name.to_string(),
        estimate,
        se,
        rr: estimate.exp(),
        low: (estimate - z * se).exp(),
        high: (estimate + z * se).exp(),
        p: normal_two_sided_p(estimate / se),
    }
}

/// Row indices grouped by cluster id, in id order.
pub(crate) fn group_rows<C: Ord>(clusters: &[C]) -> Vec<Vec<usize>> {
    let mut map: BTreeMap<&C, Vec<usize>> = BTreeMap::new();
    for (i, c) in clusters.iter().enumerate() {
        map.entry(c).or_default().push(i);
    }
    map.into_values().collect()
}

pub(crate) fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or(StatsError::Singular)?;
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Singular);
    }
    Ok(inv)
}

pub(crate) fn validate(design: &Design, y: &[f64], binary: bool) -> Result<()> {
    if design.nrows() != y.len() {
        return domain("outcome length does not match the design");
    }
    if design.nrows() <= design.ncols() {
        return domain("fewer observations than coefficients");
    }
    if binary && y.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return domain("binary outcome must lie in [0, 1]");
    }
    if !binary && y.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return domain("count outcome must be non-negative");
    }
    Ok(())
}

/// Least-squares start that puts every linear predictor at ln(ȳ).
pub(crate) fn start_values(design: &Design, y: &[f64]) -> Result<DVector<f64>> {
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    if ybar <= 0.0 {
        return domain("outcome has no events");
    }
    let target = DVector::from_element(y.len(), ybar.ln());
    let svd = design.x.clone().svd(true, true);
    svd.solve(&target, 1e-12).map_err(|_| StatsError::Singular)
}

pub(crate) fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Sandwich `B⁻¹ (Σ UᵢUᵢ') B⁻¹` from per-cluster score contributions.
pub(crate) fn sandwich(bread_inv: &DMatrix<f64>, scores: &[DVector<f64>]) -> DMatrix<f64> {
    let p = bread_inv.nrows();
    let mut meat = DMatrix::zeros(p, p);
    for u in scores {
        meat += u * u.transpose();
    }
    bread_inv * meat * bread_inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wald_symmetry_on_log_scale() {
        let s = wald_summary("x", 0.2_f64.ln(), 0.04, 0.95);
        assert!((s.rr - 0.2).abs() < 1e-12);
        assert!(((s.rr / s.low).ln() - (s.high / s.rr).ln()).abs() < 1e-12);
        assert!(s.p < 1e-10);
    }

    #[test]
    fn grouping_preserves_membership() {
        let g = group_rows(&["b", "a", "b", "c"]);
        assert_eq!(g, vec![vec![1], vec![0, 2], vec![3]]);
    }
}
