use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Fractional event count where each visit contributes total weight 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedCount {
    pub events: f64,
    pub n: f64,
}

impl WeightedCount {
    pub fn rate(&self) -> f64 {
        self.events / self.n
    }
}

/// Pools per-visit error flags. A visit with two ratings gives each 0.5 weight.
pub fn weighted_error_rate<'a, I>(visits: I) -> Result<WeightedCount>
where
    I: IntoIterator<Item = &'a [bool]>,
{
    let mut acc = WeightedCount::default();
    for ratings in visits {
        let w = match ratings.len() {
            1 => 1.0,
            2 => 0.5,
            k => return domain(format!("a visit carries {k} ratings; expected 1 or 2")),
        };
        acc.events += w * ratings.iter().filter(|&&e| e).count() as f64;
        acc.n += 1.0;
    }
    Ok(acc)
}
