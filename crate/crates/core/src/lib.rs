//! Radial numerics for the critical Choquard equation
//!
//! ```text
//! -Δu + u = (I_α * |u|^p)|u|^{p-2}u + |u|^{q-2}u   in R^N,   p = (N+α)/(N-2)
//! ```
//!
//! The crate discretizes radial profiles on a log-spaced grid, builds the
//! sphere-averaged Riesz kernel, evaluates the energy functional and its
//! derivatives, and checks the strict energy-level inequalities that give
//! compactness below the critical threshold.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubbles;
pub mod cli;
pub mod constants;
pub mod error;
pub mod io;
pub mod level;
pub mod profiles;
pub mod quadrature;
pub mod radial;
pub mod riesz;
pub mod variational;

pub use constants::{ConstantsReport, ProblemParams};
pub use error::{Error, Result};
pub use radial::{RadialField, RadialGrid};
pub use riesz::KernelMatrix;
pub use variational::EnergyBreakdown;
