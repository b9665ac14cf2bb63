//! Nonlinear discrete-time quantum walks on a one-dimensional lattice.
//!
//! The walker carries a two-component spinor per site and evolves by a
//! Kerr-like intensity-dependent phase, a one-parameter coin
//! `C(θ) = cos θ Z + sin θ X` and a conditional shift. Coin angles can be
//! homogeneous, frozen per site, or redrawn every step.
//!
//! - [`walk`]: the state and the step kernel.
//! - [`disorder`]: reproducible coin-angle fields.
//! - [`observables`]: return probability, participation, averages and fits.
//! - [`sweep`]: single runs, ensembles and `(χ, θ₀)` phase diagrams.
//! - [`cli`]: experiment files, output formats and the `ntqw` commands.

pub mod cli;
pub mod config;
pub mod disorder;
pub mod error;
pub mod observables;
pub mod sweep;
pub mod walk;

pub use error::{Error, Result};
