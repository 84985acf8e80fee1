//! Risk ratios and derived impact measures.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, StatsError};
use crate::interval::z_critical;
use crate::table::TwoByTwo;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskRatio {
    pub rr: f64,
    pub low: f64,
    pub high: f64,
}

impl RiskRatio {
    /// Relative risk reduction with its interval (bounds swap under 1 − x).
    pub fn rrr(&self) -> (f64, f64, f64) {
        (1.0 - self.rr, 1.0 - self.high, 1.0 - self.low)
    }
}

/// Katz log interval for the risk ratio of row 1 over row 2.
pub fn risk_ratio(t: &TwoByTwo, conf: f64) -> Result<RiskRatio> {
    risk_ratio_weighted(t.a as f64, t.n1() as f64, t.c as f64, t.n2() as f64, conf)
}

/// Katz interval on possibly fractional (weighted) counts.
pub fn risk_ratio_weighted(a: f64, n1: f64, c: f64, n2: f64, conf: f64) -> Result<RiskRatio> {
    if !(n1 > 0.0 && n2 > 0.0) {
        return domain("risk ratio needs both arms non-empty");
    }
    if !(0.0..=n1).contains(&a) || !(0.0..=n2).contains(&c) {
        return domain("event counts exceed arm sizes");
    }
    if a == 0.0 {
        return Err(StatsError::ZeroCell { arm: "exposed" });
    }
    if c == 0.0 {
        return Err(StatsError::ZeroCell { arm: "reference" });
    }
    let rr = (a / n1) / (c / n2);
    let se = (1.0 / a - 1.0 / n1 + 1.0 / c - 1.0 / n2).max(0.0).sqrt();
    let z = z_critical(conf);
    Ok(RiskRatio { rr, low: (rr.ln() - z * se).exp(), high: (rr.ln() + z * se).exp() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impact {
    pub rrr: f64,
    pub arr: f64,
    /// `None` when the exposed arm is not better than the reference.
    pub nnt: Option<f64>,
    pub averted: Option<i64>,
}

/// RRR, ARR, NNT and the number of events averted over `volume` visits.
pub fn impact(p_ref: f64, p_exposed: f64, volume: u64) -> Result<Impact> {
    if !(0.0..=1.0).contains(&p_ref) || !(0.0..=1.0).contains(&p_exposed) {
        return domain("proportions must lie in [0, 1]");
    }
    if p_ref == 0.0 {
        return domain("reference proportion of 0 leaves RRR undefined");
    }
    let arr = p_ref - p_exposed;
    let rrr = arr / p_ref;
    let (nnt, averted) =
        if arr > 0.0 { (Some(1.0 / arr), Some((volume as f64 * arr).round() as i64)) } else { (None, None) };
    Ok(Impact { rrr, arr, nnt, averted })
}
