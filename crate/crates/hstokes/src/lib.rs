//! Numerical solver for the initial-boundary value problem of the Stokes and
//! Navier-Stokes systems on a truncated half space.
//!
//! The velocity is assembled from four explicit pieces,
//! `u = v + V + grad(phi) + w`:
//!
//! * `v`  - heat evolution of the (reflected) initial velocity,
//! * `V`  - Duhamel integral of the Leray-projected force `div F`,
//! * `grad(phi)` - harmonic gradient correcting the wall-normal trace,
//! * `w`  - boundary propagator driven by the residual tangential wall data.
//!
//! Nonlinear solves run the Picard iteration `u^{m+1} = Stokes(h, g,
//! -u^m (x) u^m)` with contraction monitoring and automatic horizon control.
//! Everything is verifiable: anisotropic Hoelder norm estimators, weak-form
//! residuals, and independent finite-difference oracles live alongside the
//! solver.

pub mod analysis;
pub mod cases;
pub mod domain;
pub mod error;
pub mod extension;
pub mod io;
pub mod kernels;
pub mod navier_stokes;
pub mod oracle;
pub mod spectral;
pub mod stokes;

pub use error::{HsError, Result};
