//! Fixtures shared by the kernel benchmarks.

use nstable::sim::OffspringLaw;
use nstable::{PgfFamily, TruncatedSeries};

/// Series of `geometric(p)` at the given order.
pub fn geometric_series(p: f64, order: usize) -> TruncatedSeries {
    PgfFamily::geometric(p).and_then(|f| f.series(order)).expect("valid geometric parameter")
}

/// Series of `sibuya(p)` at the given order.
pub fn sibuya_series(p: f64, order: usize) -> TruncatedSeries {
    PgfFamily::sibuya(p).and_then(|f| f.series(order)).expect("valid sibuya parameter")
}

pub fn geometric_offspring(p: f64) -> OffspringLaw {
    PgfFamily::geometric(p).and_then(OffspringLaw::new).expect("valid geometric parameter")
}

/// `s` values spread over `(0, 1)`.
pub fn probe_points(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}
