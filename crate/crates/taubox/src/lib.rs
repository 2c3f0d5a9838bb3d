//! Exact divisor-power sums over quadratic polynomial boxes and their
//! circle-method main terms.
//!
//! The crate computes, for an integer quadratic polynomial F in l variables
//! positive on the box \[1,X\]^l with nondegenerate symmetrized matrix:
//!
//! * the exact sum of tau_k(F(x)) over the lattice box (`divisor`),
//! * the predicted main term: coefficients assembled from the local factors
//!   of an Euler product at s = 1 (`local`, `singular`) paired with
//!   log-power box integrals (`integrals`),
//! * direct evaluators for the exponential sums behind the derivation plus
//!   empirical checks of their approximation and bound shapes (`verify`),
//! * an end-to-end comparison engine and a batch CLI (`engine`, `cli`).

pub mod cli;
pub mod config;
pub mod dd;
pub mod divisor;
pub mod engine;
pub mod error;
pub mod exec;
pub mod integrals;
pub mod jets;
pub mod local;
pub mod quadpoly;
pub mod report;
pub mod singular;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use quadpoly::QuadPoly;
