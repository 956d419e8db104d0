//! Extended Fourier pseudospectral (eFP) solvers for the one-dimensional
//! Gross-Pitaevskii equation
//!
//! ```text
//! i psi_t = -psi_xx + V(x) psi + beta |psi|^{2 sigma} psi,   x in (a, b), periodic,
//! ```
//!
//! with potentials of low regularity (discontinuous wells, power-law kinks).
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: grids, trigonometric polynomials, interpolation/truncation,
//!   the free Schrodinger flow and the alias-free extended product.
//! * [`potentials`]: the potential catalog and the certified projection of the
//!   phase factor `e^{-i tau V}` onto `X_{2N}`.
//! * [`propagators`]: Lie-Trotter/Strang eFP steppers, the quadrature-based
//!   Fourier spectral baseline (FSwQ-M), the run loop and reference solutions.
//! * [`experiments`]: spatial/temporal convergence studies, slope fitting and
//!   report emission.

pub mod error;
pub mod experiments;
mod fft;
pub mod potentials;
pub mod propagators;
mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
