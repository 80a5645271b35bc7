//! Explicit self-similar solutions of the nonlocal porous medium equation
//! (NPME) and the isotropic random flights whose time-rescaled laws coincide
//! with them.
//!
//! The crate is organized in four layers:
//!
//! * [`specfun`] — the real special functions the analytic formulas need
//!   (log-gamma, regularized incomplete beta, Bessel J of real order);
//! * [`kernel`] — the analytic solution family: derived constants, densities,
//!   CDFs, moments, Fourier transforms, the flight-parameter correspondence
//!   and the diffusivity classification;
//! * [`flight`] — Monte Carlo simulation of the random flights `X^n(t)` and
//!   their time-rescaled versions `Y^n(t) = X^n(t^beta)`;
//! * [`verify`] — the statistical harness confronting simulated flights with
//!   the analytic kernel (KS tests, moments, characteristic functions,
//!   quadrature mass checks).
//!
//! Batch sampling runs data-parallel on rayon by default; build with
//! `--no-default-features` for the sequential fallback.

pub mod flight;
pub mod kernel;
pub mod quad;
pub mod specfun;
pub mod verify;

mod error;

pub use error::{Error, Result};
