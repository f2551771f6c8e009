//! The three faces of one solution: Riccati drift `φ = u′/(ru)`, value
//! function `z = −2σ² ln u`, and the radial feedback law.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{RadialSolution, SolverConfig};
use crate::potential::Potential;
use crate::scalar::Real;

/// Discount rate of the control problem. Only the undiscounted case has an
/// equation behind it, so it is fixed.
pub const DISCOUNT: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialityFields<T: Real> {
    pub r: Vec<T>,
    pub phi: Vec<T>,
    pub z: Vec<T>,
    pub zprime: Vec<T>,
    pub pmag: Vec<T>,
    pub sigma: T,
    pub dimension: T,
}

pub fn riccati_from_u<T: Real>(sol: &RadialSolution<T>) -> TrialityFields<T> {
    let sigma = sol.config.sigma;
    let s2 = sigma * sigma;
    let two = T::lit(2.0);
    let n = sol.len();
    let mut phi = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let r = sol.r[i];
        phi.push(if r > T::zero() {
            sol.log_derivative(i) / r
        } else {
            sol.phi_origin
        });
        z.push(T::zero() - two * s2 * sol.log_u(i));
    }
    let zprime: Vec<T> = (0..n).map(|i| -two * s2 * sol.r[i] * phi[i]).collect();
    let pmag = (0..n).map(|i| s2 * sol.r[i] * phi[i]).collect();
    TrialityFields {
        r: sol.r.clone(),
        phi,
        z,
        zprime,
        pmag,
        sigma,
        dimension: sol.config.dimension,
    }
}

/// Three-point first and second derivatives on a possibly uneven stencil.
fn stencil<T: Real>(r: &[T], f: &[T], i: usize) -> (T, T) {
    let h0 = r[i] - r[i - 1];
    let h1 = r[i + 1] - r[i];
    let (fm, f0, fp) = (f[i - 1], f[i], f[i + 1]);
    let d1 = (h0 * h0 * (fp - f0) + h1 * h1 * (f0 - fm)) / (h0 * h1 * (h0 + h1));
    let d2 = T::lit(2.0) * (h0 * (fp - f0) - h1 * (f0 - fm)) / (h0 * h1 * (h0 + h1));
    (d1, d2)
}

fn interior<T: Real>(r: &[T], cfg: &SolverConfig<T>) -> impl Iterator<Item = usize> {
    let window = (T::lit(2.0) * cfg.epsilon).max(cfg.radius / T::lit(500.0));
    let n = r.len();
    let first = r.iter().position(|x| *x >= window).unwrap_or(n).max(1);
    first..n.saturating_sub(1)
}

/// Largest `|φ′ + rφ² + (N/r)φ − b/(σ⁴r)|` with `φ′` from central
/// differences, away from the origin window `r < max(2ε, R/500)`.
pub fn riccati_residual<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, cfg: &SolverConfig<T>) -> Result<T> {
    let inv_s4 = T::one() / fields.sigma.powi(4);
    let mut worst = T::zero();
    for i in interior(&fields.r, cfg) {
        let r = fields.r[i];
        let phi = fields.phi[i];
        let (dphi, _) = stencil(&fields.r, &fields.phi, i);
        let rhs = -r * phi * phi - fields.dimension / r * phi + pot.eval(r)? * inv_s4 / r;
        worst = worst.max((dphi - rhs).abs());
    }
    Ok(worst)
}

/// Largest `|z″ + ((N−1)/r)z′ − z′²/(2σ²) + 2b/σ²|` with both derivatives
/// from finite differences of `z`. Also returns `max |z″|` over the same
/// points, the natural scale of the residual.
pub fn hjb_residual<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, cfg: &SolverConfig<T>) -> Result<(T, T)> {
    let s2 = fields.sigma * fields.sigma;
    let two = T::lit(2.0);
    let mut worst = T::zero();
    let mut scale = T::zero();
    for i in interior(&fields.r, cfg) {
        let r = fields.r[i];
        let (dz, d2z) = stencil(&fields.r, &fields.z, i);
        let res = d2z + (fields.dimension - T::one()) / r * dz - dz * dz / (two * s2) + two * pot.eval(r)? / s2;
        worst = worst.max(res.abs());
        scale = scale.max(d2z.abs());
    }
    Ok((worst, scale))
}

/// Largest `|z′ + 2σ²rφ|`; zero by construction.
pub fn zprime_identity<T: Real>(fields: &TrialityFields<T>) -> T {
    let two_s2 = T::lit(2.0) * fields.sigma * fields.sigma;
    (0..fields.r.len())
        .map(|i| (fields.zprime[i] + two_s2 * fields.r[i] * fields.phi[i]).abs())
        .fold(T::zero(), T::max)
}

/// Bracketing grid interval and weight for a radius in `[r₀, r_last]`.
pub(crate) fn locate<T: Real>(r: &[T], x: T) -> Option<(usize, T)> {
    let last = *r.last()?;
    if !(x >= r[0]) || x > last {
        return None;
    }
    let j = r.partition_point(|v| *v <= x).clamp(1, r.len() - 1);
    let h = r[j] - r[j - 1];
    let w = if h > T::zero() { (x - r[j - 1]) / h } else { T::zero() };
    Some((j - 1, w))
}

impl<T: Real> TrialityFields<T> {
    pub fn radius(&self) -> T {
        *self.r.last().expect("fields are never empty")
    }

    /// `φ(r)` by linear interpolation.
    pub fn phi_at(&self, r: T) -> Result<T> {
        let (i, w) = locate(&self.r, r).ok_or(Error::OutOfDomain {
            r: r.as_f64(),
            max: self.radius().as_f64(),
        })?;
        if w == T::zero() {
            return Ok(self.phi[i]);
        }
        Ok(self.phi[i] + w * (self.phi[i + 1] - self.phi[i]))
    }

    /// `z(r)` by cubic Hermite interpolation of `(z, z′)`.
    pub fn z_at(&self, r: T) -> Result<T> {
        let (i, w) = locate(&self.r, r).ok_or(Error::OutOfDomain {
            r: r.as_f64(),
            max: self.radius().as_f64(),
        })?;
        if w == T::zero() {
            return Ok(self.z[i]);
        }
        let h = self.r[i + 1] - self.r[i];
        let (two, three) = (T::lit(2.0), T::lit(3.0));
        let w2 = w * w;
        let w3 = w2 * w;
        let h00 = two * w3 - three * w2 + T::one();
        let h10 = w3 - two * w2 + w;
        let h01 = -two * w3 + three * w2;
        let h11 = w3 - w2;
        Ok(h00 * self.z[i] + h10 * h * self.zprime[i] + h01 * self.z[i + 1] + h11 * h * self.zprime[i + 1])
    }
}

/// `α*(x) = −2σ⁴ φ(|x|) x`.
pub fn optimal_control<T: Real>(fields: &TrialityFields<T>, x: &[T]) -> Result<Vec<T>> {
    let norm = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let gain = -T::lit(2.0) * fields.sigma.powi(4) * fields.phi_at(norm)?;
    Ok(x.iter().map(|v| gain * *v).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constraint<T> {
    pub lhs: T,
    pub rhs: T,
    pub gap: T,
}

/// `∫₀^R sφ ds` (trapezoid) against `ln u(R)`.
pub fn dirichlet_constraint<T: Real>(sol: &RadialSolution<T>, fields: &TrialityFields<T>) -> Constraint<T> {
    let lhs = cumulative_log_u(fields).last().copied().unwrap_or_else(T::zero);
    let rhs = sol.log_u(sol.len() - 1);
    Constraint {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    }
}

fn cumulative_log_u<T: Real>(fields: &TrialityFields<T>) -> Vec<T> {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let mut out = vec![acc];
    for i in 1..fields.r.len() {
        let h = fields.r[i] - fields.r[i - 1];
        acc += half * h * (fields.r[i - 1] * fields.phi[i - 1] + fields.r[i] * fields.phi[i]);
        out.push(acc);
    }
    out
}

/// Largest `|∫₀^r sφ ds − ln u(r)|` over the grid: the Riccati field
/// reconstructs `u` through `u(r) = u(0) exp(∫ sφ)`.
pub fn round_trip<T: Real>(sol: &RadialSolution<T>, fields: &TrialityFields<T>) -> T {
    cumulative_log_u(fields)
        .iter()
        .enumerate()
        .map(|(i, v)| (*v - sol.log_u(i)).abs())
        .fold(T::zero(), T::max)
}

/// Discrete shape checks at interior grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryReport<T> {
    /// Points where the second difference of `u` is not positive.
    pub convexity_failures: usize,
    /// Smallest `(Δ²u/h²)/u ÷ b/(Nσ⁴)` over points with `b > 0`.
    pub min_convexity_ratio: Option<T>,
    /// Points where the lower bound `u″ ≥ bu/(Nσ⁴)` fails beyond 1e-6 relative.
    pub lower_bound_failures: usize,
    /// Points where the second difference of `z` is not negative.
    pub concavity_failures: usize,
    /// Points where `φ` fails to increase.
    pub monotonicity_failures: usize,
    pub points: usize,
}

impl<T> GeometryReport<T> {
    pub fn holds(&self) -> bool {
        self.convexity_failures == 0
            && self.lower_bound_failures == 0
            && self.concavity_failures == 0
            && self.monotonicity_failures == 0
    }
}

pub fn geometry_check<T: Real>(sol: &RadialSolution<T>, fields: &TrialityFields<T>, pot: &Potential<T>) -> Result<GeometryReport<T>> {
    let n = sol.len();
    let inv = T::one() / (fields.dimension * fields.sigma.powi(4));
    let mut rep = GeometryReport {
        convexity_failures: 0,
        min_convexity_ratio: None,
        lower_bound_failures: 0,
        concavity_failures: 0,
        monotonicity_failures: 0,
        points: n.saturating_sub(2),
    };
    for i in 1..n.saturating_sub(1) {
        let h0 = sol.r[i] - sol.r[i - 1];
        let h1 = sol.r[i + 1] - sol.r[i];
        let lm = sol.log_u(i - 1) - sol.log_u(i);
        let lp = sol.log_u(i + 1) - sol.log_u(i);
        let dm = log_step(sol, i, i - 1).unwrap_or(lm);
        let dp = log_step(sol, i, i + 1).unwrap_or(lp);
        let w = T::lit(2.0) / (h0 * h1 * (h0 + h1));
        // u″/u and (ln u)″ from the same three-point formula.
        let upp = w * (h0 * dp.exp_m1() + h1 * dm.exp_m1());
        let lpp = w * (h0 * dp + h1 * dm);
        if !(upp > T::zero()) {
            rep.convexity_failures += 1;
        }
        let b = pot.eval(sol.r[i])?;
        if b > T::zero() {
            let ratio = upp / (b * inv);
            rep.min_convexity_ratio = Some(rep.min_convexity_ratio.map_or(ratio, |m: T| m.min(ratio)));
            if ratio < T::one() - T::lit(1e-6) {
                rep.lower_bound_failures += 1;
            }
        }
        // z″ = −2σ² (ln u)″
        if !(lpp > T::zero()) {
            rep.concavity_failures += 1;
        }
    }
    for i in 1..n {
        if !(fields.phi[i] > fields.phi[i - 1]) {
            rep.monotonicity_failures += 1;
        }
    }
    Ok(rep)
}

/// `ln(u_j/u_i)` via `ln_1p` when no rescale separates the points.
fn log_step<T: Real>(sol: &RadialSolution<T>, i: usize, j: usize) -> Option<T> {
    (sol.logscale[i] == sol.logscale[j]).then(|| ((sol.u[j] - sol.u[i]) / sol.u[i]).ln_1p())
}
