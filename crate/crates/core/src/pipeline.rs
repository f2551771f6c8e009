//! Series seed, radial integration and triality fields in one call.

use serde::Serialize;

use crate::error::Result;
use crate::integrator::{integrate_on, RadialSolution, SolverConfig};
use crate::potential::Potential;
use crate::scalar::Real;
use crate::series::SeriesSolution;
use crate::triality::{riccati_from_u, TrialityFields};

#[derive(Debug, Clone, Serialize)]
pub struct Solve<T: Real> {
    pub series: SeriesSolution<T>,
    pub solution: RadialSolution<T>,
    pub fields: TrialityFields<T>,
    /// The potential grows slower than `r²` near the origin, outside the
    /// existence theory; the solve still runs from the seed.
    pub hypothesis_unmet: bool,
}

/// Builds the seed series (falling back to a local quadratic fit when the
/// potential has no expansion) and solves on the uniform grid of `cfg`.
pub fn solve<T: Real>(pot: &Potential<T>, cfg: &SolverConfig<T>, order: usize) -> Result<Solve<T>> {
    solve_on(pot, cfg, order, &cfg.grid())
}

pub fn solve_on<T: Real>(pot: &Potential<T>, cfg: &SolverConfig<T>, order: usize, radii: &[T]) -> Result<Solve<T>> {
    cfg.validate()?;
    let (coeffs, mode) = pot.seed_coefficients(cfg.epsilon)?;
    let series = SeriesSolution::from_potential_coeffs(coeffs, mode, cfg.dimension, cfg.sigma, order, pot.domain_end())?;
    let solution = integrate_on(pot, cfg, &series, radii)?;
    let fields = riccati_from_u(&solution);
    Ok(Solve {
        series,
        solution,
        fields,
        hypothesis_unmet: pot.growth_rates().origin.is_infinite(),
    })
}
