//! Shared fixtures for the benchmarks.

use degenwave_core::observables::random_family;
use degenwave_core::{build_radial_grid, InitialData, ModelParams, SpectralBasis};

/// Default parameters at a given radial resolution and angular cut-off.
pub fn params(alpha: f64, n_r: usize, n_theta: usize) -> ModelParams {
    ModelParams { alpha, n_r, n_theta, ..Default::default() }
}

pub fn basis(p: &ModelParams) -> SpectralBasis {
    SpectralBasis::new(p.alpha, p.n_theta, p.k_max, &build_radial_grid(p.n_r).expect("valid grid")).expect("basis")
}

/// One seeded random datum for `basis`.
pub fn datum(basis: &SpectralBasis, seed: u64) -> InitialData {
    random_family(basis, 1, seed).remove(0).init
}
