//! Numerical laboratory for the exterior-domain radially symmetric viscous
//! Burgers equation.
//!
//! The library is organized around the pipeline used by the command-line
//! runner:
//!
//! 1. [`problem`] validates parameters and classifies the boundary data
//!    into asymptotic regimes.
//! 2. [`stationary`] solves the shifted first-order stationary equation by
//!    forward adaptive integration into its stable far-field equilibrium and
//!    recovers the stationary wave profile.
//! 3. [`weight`] constructs the positive bounded weight used by the energy
//!    estimates, by stable backward integration of its linear equation.
//! 4. [`evolve`] advances the full initial-boundary value problem with an
//!    implicit-diffusion / explicit-flux scheme and builds the anti-derivative
//!    variable.
//! 5. [`diagnostics`] turns the stability and decay statements into
//!    measurements: weighted norms, energy-identity residuals, coefficient
//!    bounds, and decay-rate fits.

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fd;
pub mod grid;
pub mod ode;
pub mod problem;
pub mod stationary;
pub mod weight;

pub use error::{Error, Result};
pub use grid::{Profile, RadialGrid};
pub use problem::{ProblemParams, Regime, RegimeTag};
pub use stationary::{solve_stationary, StationarySolveOptions, StationaryWave};
pub use weight::{build_weight, default_generator, epsilon_generator, WeightFunction, WeightGenerator};
