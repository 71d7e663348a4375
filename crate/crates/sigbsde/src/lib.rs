//! Command-line front end for the signature BSDE solver: run configuration,
//! CSV artifacts and the experiment runner.

pub mod config;
mod error;
pub mod io;
pub mod runner;

pub use error::{Error, Result};
