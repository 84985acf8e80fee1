use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhResult {
    pub rejected: Vec<bool>,
    pub adjusted: Vec<f64>,
}

/// Benjamini–Hochberg step-up procedure at false discovery rate `q`.
/// Outputs are in the input order.
pub fn benjamini_hochberg(p: &[f64], q: f64) -> Result<BhResult> {
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return domain("p-values must lie in [0, 1]");
    }
    if !(q > 0.0 && q < 1.0) {
        return domain("FDR level must lie in (0, 1)");
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p[i].total_cmp(&p[j]));

    // Largest rank k with p_(k)·m <= k·q; ranks 1..=k are rejected.
    let mut k = 0;
    for (rank0, &i) in order.iter().enumerate() {
        if p[i] * m as f64 <= (rank0 + 1) as f64 * q {
            k = rank0 + 1;
        }
    }
    let mut rejected = vec![false; m];
    for &i in &order[..k] {
        rejected[i] = true;
    }

    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank0 in (0..m).rev() {
        let i = order[rank0];
        running = running.min(p[i] * m as f64 / (rank0 + 1) as f64);
        adjusted[i] = running.min(1.0);
    }
    Ok(BhResult { rejected, adjusted })
}
