//! Fixtures for the acceptance suite.

use std::sync::Arc;

use reset_ldp::abs_law::{AbsAreaLaw, QUANTILE_COUNT};

/// In-process table of ∫₀¹|B|: 2^18 paths at step 2^-10. The cache file is
/// never touched.
pub fn suite_law() -> Arc<AbsAreaLaw> {
    Arc::new(AbsAreaLaw::simulate(1 << 18, 10, 0x5eed).expect("law simulation"))
}

/// Stand-in for runs whose selected criteria never read the law.
pub fn placeholder_law() -> Arc<AbsAreaLaw> {
    let q = (0..QUANTILE_COUNT).map(|j| j as f64 / QUANTILE_COUNT as f64).collect();
    Arc::new(AbsAreaLaw::from_quantiles(q, 1, None).expect("sorted quantiles"))
}
