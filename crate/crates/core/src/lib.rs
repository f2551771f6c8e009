//! Radial linear-quadratic control through the Riccati / HJB / linear triality.
//!
//! The regular solution `u` of `u″ + ((N−1)/r)u′ = (b/σ⁴)u` is seeded by a
//! power series at the origin and continued with an adaptive Runge–Kutta
//! method. The Riccati field `φ = u′/(ru)`, the value function
//! `z = −2σ² ln u` and the feedback law are derived from it.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases at the
//! crate root fix the scalar to `f64`.

// `!(a > b)` is deliberate throughout: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod control;
pub mod error;
pub mod extended;
pub mod integrator;
pub mod pipeline;
pub mod potential;
pub mod scalar;
pub mod series;
pub mod triality;

pub use error::{Error, Result};
pub use extended::ExtendedReal;
pub use potential::SeedMode;
pub use control::SimConfig;
pub use pipeline::solve;
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Potential = potential::Potential<f64>;
pub type SeriesSolution = series::SeriesSolution<f64>;
pub type SolverConfig = integrator::SolverConfig<f64>;
pub type RadialSolution = integrator::RadialSolution<f64>;
pub type TrialityFields = triality::TrialityFields<f64>;
pub type AsymptoticReport = asymptotics::AsymptoticReport<f64>;
pub type Solve = pipeline::Solve<f64>;
