//! Laboratory for gradient descent with large step sizes on linearly
//! separable logistic regression.
//!
//! The crate simulates full-batch GD trajectories from `w0 = 0`, decomposes
//! iterates along the max-margin direction, detects oscillations in the
//! orthogonal subspace, measures the unstable-to-stable transition time, and
//! verifies a family of trajectory inequalities as slack-reporting checkers.
//! It also builds two worst-case datasets that make the transition provably
//! slow, and runs seeded parameter sweeps over step sizes and dimensions.
//!
//! Modules:
//! - [`dataset`]: dataset representation, normalization, exact 2-D max-margin
//!   solver plus an independent angle-grid oracle, random generation, CSV IO.
//! - [`engine`]: numerically stable loss/gradient/potential and the GD loop.
//! - [`diagnostics`]: iterate decomposition, oscillation detection,
//!   transition-time measurement, stable-phase rate checks.
//! - [`theory`]: registry of inequality checkers over trajectories.
//! - [`lowerbound`]: worst-case dataset constructions and their verifiers.
//! - [`experiments`]: sweep harness, rate experiment, SVG rendering.

pub mod dataset;
pub mod diagnostics;
pub mod engine;
mod error;
pub mod experiments;
pub mod lowerbound;
pub mod math;
pub mod theory;

pub use error::{Error, Result};
