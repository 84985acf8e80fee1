use serde::{Deserialize, Serialize};

/// 2×2 contingency table. Row 1 is the exposed arm (`a` events, `b` non-events),
/// row 2 the reference arm (`c` events, `d` non-events).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoByTwo {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl TwoByTwo {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    /// Builds a table from event counts and arm sizes.
    pub fn from_events(exposed_events: u64, exposed_n: u64, ref_events: u64, ref_n: u64) -> Self {
        assert!(exposed_events <= exposed_n && ref_events <= ref_n);
        Self::new(exposed_events, exposed_n - exposed_events, ref_events, ref_n - ref_events)
    }

    pub fn n1(&self) -> u64 {
        self.a + self.b
    }

    pub fn n2(&self) -> u64 {
        self.c + self.d
    }

    pub fn total(&self) -> u64 {
        self.n1() + self.n2()
    }
}
