//! Backward SDE solver that estimates conditional expectations by ridge
//! regression on truncated signatures of the time-augmented Brownian path.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs and an explicit seed; IO, timing and the command
//! line live in the `sigbsde` companion crate.
//!
//! Layout, bottom-up:
//!
//! - [`tensor`]: words, the truncated tensor algebra, concatenation and
//!   shuffle products.
//! - [`signature`]: signatures of piecewise-linear paths folded with Chen's
//!   relation, plus the per-batch feature cube used by the solver.
//! - [`ridge`]: ridge regression with an unpenalized intercept.
//! - [`simulate`]: seeded Brownian batches, forward Euler–Maruyama and a
//!   full-truncation CIR scheme.
//! - [`ce`]: conditional expectations by signature regression.
//! - [`bsde`]: the explicit and Picard-implicit backward schemes.
//! - [`risk`]: benchmark problems, their closed forms and Monte Carlo oracles.
//! - [`mlp`]: the small ReLU network that learns the ambiguous-rate driver.
//! - [`metrics`]: path errors and the per-iteration experiment kernel.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bsde;
pub mod ce;
mod error;
pub mod matrix;
pub mod metrics;
pub mod mlp;
pub mod ridge;
pub mod risk;
pub mod signature;
pub mod simulate;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
