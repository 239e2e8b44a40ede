//! Spectrum of the Fibonacci Hamiltonian computed through the dynamics of the
//! Fibonacci trace map.

pub mod dd;
pub mod logscalar;
pub mod trace;

pub use dd::Dd;
pub use logscalar::LogScalar;
pub mod bands;
pub mod combinatorics;
pub mod orbits;
pub mod thermo;
pub mod report;
pub mod operator;
pub mod cli;

/// 17 significant digits, lossless for f64.
#[must_use]
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
