//! Categorical coding for regression designs.

use crate::error::{domain, Result};

/// Sum-to-zero (deviation) coding. Each non-omitted level gets a column;
/// the omitted level is coded −1 in every column, so coefficients are
/// deviations from the mean level and the omitted effect is minus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SumToZero {
    levels: Vec<String>,
    omitted: usize,
}

impl SumToZero {
    pub fn new(levels: Vec<String>, omitted: &str) -> Result<Self> {
        if levels.len() < 2 {
            return domain("sum-to-zero coding needs at least two levels");
        }
        let Some(omitted) = levels.iter().position(|l| l == omitted) else {
            return domain(format!("omitted level {omitted:?} is not among the levels"));
        };
        Ok(Self { levels, omitted })
    }

    /// Non-omitted levels in column order.
    pub fn column_levels(&self) -> Vec<&str> {
        self.levels.iter().enumerate().filter(|&(i, _)| i != self.omitted).map(|(_, l)| l.as_str()).collect()
    }

    pub fn omitted(&self) -> &str {
        &self.levels[self.omitted]
    }

    pub fn width(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn encode(&self, value: &str) -> Result<Vec<f64>> {
        let Some(idx) = self.levels.iter().position(|l| l == value) else {
            return domain(format!("unknown level {value:?}"));
        };
        if idx == self.omitted {
            return Ok(vec![-1.0; self.width()]);
        }
        let col = if idx < self.omitted { idx } else { idx - 1 };
        let mut row = vec![0.0; self.width()];
        row[col] = 1.0;
        Ok(row)
    }

    /// Effect of the omitted level implied by the fitted column coefficients.
    pub fn omitted_effect(coefs: &[f64]) -> f64 {
        -coefs.iter().sum::<f64>()
    }
}
