//! Transfer matrices and spectral singularities of complex one-dimensional
//! potentials supported on `[0, 1]`.
//!
//! Three engines compute the same objects by independent routes:
//!
//! - [`transfer`]: direct integration of the Schrödinger equation for the
//!   fundamental solutions, the Jost functions and the transfer matrix;
//! - [`delta`]: exact closed forms for arrays of complex delta functions,
//!   plus a composition oracle;
//! - [`perturbation`]: the Green's-function perturbation series, generic in
//!   the exactly solvable background, with the constant-barrier
//!   specialization.
//!
//! [`optics`] maps an inhomogeneously pumped planar gain slab onto the
//! barrier problem and [`finder`] locates its threshold-lasing points
//! (spectral singularities) to zeroth and first order in the inhomogeneity,
//! with a full nonlinear solve as oracle.

pub mod config;
pub mod delta;
mod error;
pub mod finder;
pub mod ode;
pub mod optics;
pub mod perturbation;
pub mod potential;
pub mod quadrature;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default integration tolerance (mixed relative/absolute).
pub const DEFAULT_TOL: f64 = 1e-12;
