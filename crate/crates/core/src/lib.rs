//! Pseudo-spectral simulation and harmonic-analysis toolkit for the 3D
//! incompressible Hall-MHD system on a periodic box.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: spectral vector/scalar fields on a periodic grid and the exact
//!   Fourier-side operators (div, curl, curl⁻¹, Leray projection, heat flow,
//!   L^p quadrature, dilations).
//! - [`lp`]: Littlewood-Paley shells, homogeneous Besov norms, Bony
//!   paraproducts, Bernstein and commutator diagnostics.
//! - [`dynamics`]: the bilinear forms `Q_a`/`Q_b`, the extended `(u, b, J)`
//!   right-hand side and the original curl form, pressure recovery, electron
//!   velocity and the structural cancellation/energy residuals.
//! - [`integrate`]: integrating-factor Runge-Kutta time stepping and the
//!   Duhamel-Picard iteration with contraction monitoring.
//! - [`experiments`]: scripted checks that turn the analytic statements into
//!   pass/fail reports.
//! - [`snapshot`]: the `HMH1` binary snapshot format.
//!
//! Coefficient convention: the forward transform carries the `1/n³` factor,
//! so a constant field `c` has `c` as its zero-mode coefficient and
//! `f(x) = Σ_k f̂(k) e^{ik·x}`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod integrate;
pub mod lp;
pub mod random;
pub mod snapshot;
pub(crate) mod sum;

pub use error::{Error, Result};

pub use num_complex::Complex64;
