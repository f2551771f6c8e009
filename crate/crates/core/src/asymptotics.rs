//! Barrier function, large-`r` asymptote, and the two noise limits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::SolverConfig;
use crate::pipeline::solve;
use crate::potential::Potential;
use crate::scalar::Real;
use crate::triality::TrialityFields;

/// Positive root of `r²X² + NX − b/σ⁴ = 0`, written as
/// `(2b/σ⁴) / (√(N² + 4r²b/σ⁴) + N)` to avoid cancellation at small `r`.
/// At `r = 0` this is the limit `b(0)/(Nσ⁴)`.
pub fn barrier<T: Real>(pot: &Potential<T>, dimension: T, sigma: T, r: T) -> Result<T> {
    let q = pot.eval(r)? / sigma.powi(4);
    let t = T::lit(4.0) * r * r * q;
    Ok(T::lit(2.0) * q / ((dimension * dimension + t).sqrt() + dimension))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport<T: Real> {
    pub g: Vec<T>,
    /// `√L/σ²` with `L = lim b/r²`; absent unless `0 < L < ∞`.
    pub asymptote: Option<T>,
    /// Grid points `r > 0` with `φ ≥ g`.
    pub barrier_violations: usize,
    /// `|φ(R) − asymptote|`.
    pub tail_error: Option<T>,
    pub g_monotone: bool,
    /// `b ≡ 0` on the grid: `φ ≡ g ≡ 0` and the barrier is not informative.
    pub degenerate: bool,
}

pub fn asymptotic_report<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, cfg: &SolverConfig<T>) -> Result<AsymptoticReport<T>> {
    let g = fields
        .r
        .iter()
        .map(|r| barrier(pot, cfg.dimension, cfg.sigma, *r))
        .collect::<Result<Vec<T>>>()?;
    let degenerate = g.iter().all(|v| *v == T::zero());
    let barrier_violations = if degenerate {
        0
    } else {
        (0..g.len())
            .filter(|&i| fields.r[i] > T::zero() && fields.phi[i] >= g[i])
            .count()
    };
    let asymptote = pot
        .growth_rates()
        .infinity
        .positive_finite()
        .map(|l| l.sqrt() / (cfg.sigma * cfg.sigma));
    let last = *fields.phi.last().expect("fields are never empty");
    Ok(AsymptoticReport {
        g_monotone: g.windows(2).all(|w| w[1] >= w[0]),
        tail_error: asymptote.map(|a| (last - a).abs()),
        asymptote,
        barrier_violations,
        degenerate,
        g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseRow<T> {
    pub sigma: T,
    pub r: T,
    pub phi: T,
    pub sigma2_phi: T,
    pub target: T,
}

/// One full solve on `[0, r]` per noise level; tabulates `σ²φ_σ(r)`
/// against the vanishing-noise limit `√b(r)/r`. Rows keep the input order.
pub fn vanishing_noise_check<T: Real>(
    pot: &Potential<T>,
    base: &SolverConfig<T>,
    sigmas: &[T],
    r: T,
    order: usize,
) -> Result<Vec<NoiseRow<T>>> {
    if sigmas.is_empty() {
        return Err(Error::InvalidConfig("sigma list is empty".into()));
    }
    let b = pot.eval(r)?;
    if !(b > T::zero()) {
        return Err(Error::Domain(format!("b({r}) must be positive")));
    }
    let target = b.sqrt() / r;
    sigmas
        .par_iter()
        .map(|&sigma| {
            let cfg = base.with_sigma(sigma).with_radius(r);
            let s = solve(pot, &cfg, order)?;
            let phi = *s.fields.phi.last().expect("fields are never empty");
            Ok(NoiseRow {
                sigma,
                r,
                phi,
                sigma2_phi: sigma * sigma * phi,
                target,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HighNoiseBound<T> {
    pub sup_phi: T,
    pub bound: T,
    pub holds: bool,
}

/// `sup φ ≤ R‖b‖∞/(Nσ⁴)` with `‖b‖∞` taken over the grid.
pub fn high_noise_bound_check<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, cfg: &SolverConfig<T>) -> Result<HighNoiseBound<T>> {
    let mut sup_b = T::zero();
    for r in &fields.r {
        sup_b = sup_b.max(pot.eval(*r)?);
    }
    let sup_phi = fields.phi.iter().copied().fold(T::zero(), T::max);
    let bound = fields.radius() * sup_b / (cfg.dimension * cfg.sigma.powi(4));
    Ok(HighNoiseBound {
        sup_phi,
        bound,
        holds: sup_phi <= bound * (T::one() + T::lit(1e-9)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WkbExpansion<T> {
    pub r: Vec<T>,
    /// `S(r) = ∫₀^r √b`.
    pub s: Vec<T>,
    /// `S₁′(r) = −½((N−1)/r + b′/(2b))`; undefined at `r = 0`.
    pub s1prime: Vec<Option<T>>,
}

pub fn wkb_expansion<T: Real>(pot: &Potential<T>, dimension: T, grid: &[T]) -> Result<WkbExpansion<T>> {
    if grid.windows(2).any(|w| !(w[1] >= w[0])) || grid.first().is_some_and(|r| *r < T::zero()) {
        return Err(Error::InvalidConfig("WKB grid must be nonnegative and sorted".into()));
    }
    let half = T::lit(0.5);
    let root = |x: T| pot.eval(x).map(|b| b.sqrt());
    let mut s = Vec::with_capacity(grid.len());
    let mut s1prime = Vec::with_capacity(grid.len());
    let mut acc = T::zero();
    let mut prev = T::zero();
    for &r in grid {
        if r > prev {
            acc += adaptive_simpson(&root, prev, r, T::lit(1e-13))?;
        }
        prev = r;
        s.push(acc);
        if r == T::zero() {
            s1prime.push(None);
            continue;
        }
        let b = pot.eval(r)?;
        if !(b > T::zero()) {
            return Err(Error::Domain(format!("b vanishes at interior radius {r}")));
        }
        let db = pot.derivative(r)?;
        s1prime.push(Some(-half * ((dimension - T::one()) / r + db / (T::lit(2.0) * b))));
    }
    Ok(WkbExpansion {
        r: grid.to_vec(),
        s,
        s1prime,
    })
}

fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> Result<T>, a: T, b: T, tol: T) -> Result<T> {
    let half = T::lit(0.5);
    let m = half * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol.max(T::epsilon() * whole.abs()), 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real>(f: &impl Fn(T) -> Result<T>, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> Result<T> {
    let half = T::lit(0.5);
    let six = T::lit(6.0);
    let four = T::lit(4.0);
    let m = half * (a + b);
    let (lm, rm) = (half * (a + m), half * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return Ok(left + right + delta / T::lit(15.0));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, half * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, half * tol, depth - 1)?)
}
