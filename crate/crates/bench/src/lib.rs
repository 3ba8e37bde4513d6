//! Shared fixtures for the criterion benchmarks.

use svmom_core::eval::{HestonParams, SvjParams};

/// The parameter point used throughout the comparison tables.
pub fn table_params() -> SvjParams {
    let heston = HestonParams::new(0.125, 0.1, 0.25, 0.1, -0.7, 1.0).unwrap();
    SvjParams::new(heston, 0.01, 0.0, 0.05).unwrap()
}
