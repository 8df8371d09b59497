//! Mutually unbiased periodic coarse-grained (PCG) measurements of continuous
//! quantum variables.
//!
//! * [`numtheory`]: the number-theoretic bound `R <= p + 1` and a brute-force
//!   search over multiplier families.
//! * [`config`]: construction and verification of measurement configurations,
//!   including the mapping to modulator pixels.
//! * [`cvsim`]: grid simulation of preparation and measurement with fractional
//!   Fourier transforms and periodic bin masks.
//! * [`analysis`]: entropies, divergences, period sweeps and tables.

pub mod analysis;
pub mod config;
pub mod cvsim;
pub mod error;
pub mod numtheory;

pub use error::{Error, Result};
