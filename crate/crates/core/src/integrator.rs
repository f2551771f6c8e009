//! Adaptive integration of the linear auxiliary equation
//!
//! ```text
//! u″ + ((N−1)/r) u′ − (b(r)/σ⁴) u = 0
//! ```
//!
//! from the series seed at `r = ε` outward. The regular solution grows like
//! `exp(∫ √b / σ²)`, so the state is kept as `(ũ, ũ′)` together with a
//! running `logscale`: whenever `ũ` passes `rescale_threshold` both
//! components are divided by `ũ` and `ln ũ` is added to the ledger. The
//! equation is linear, so rescaling commutes with the flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::Real;
use crate::series::SeriesSolution;

/// Parameters of a radial solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub dimension: T,
    pub sigma: T,
    /// Seed radius where the series hands over to the integrator.
    pub epsilon: T,
    /// Domain end `R`.
    pub radius: T,
    pub rel_tol: T,
    pub abs_tol: T,
    pub rescale_threshold: T,
    /// Number of uniformly spaced output points on `[0, R]`.
    pub grid_points: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            dimension: T::lit(2.0),
            sigma: T::one(),
            epsilon: T::lit(1e-6),
            radius: T::lit(10.0),
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-11),
            rescale_threshold: T::lit(1e8),
            grid_points: 2000,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dimension >= T::one()) || !self.dimension.is_finite() {
            return bad(format!("dimension must be >= 1, got {}", self.dimension));
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.epsilon > T::zero()) || !(self.epsilon < self.radius) || !self.radius.is_finite() {
            return bad(format!(
                "need 0 < epsilon < radius, got epsilon = {}, radius = {}",
                self.epsilon, self.radius
            ));
        }
        if !(self.rel_tol > T::zero()) || !(self.abs_tol > T::zero()) {
            return bad("rel_tol and abs_tol must be positive".into());
        }
        if !(self.rescale_threshold > T::one()) {
            return bad(format!("rescale_threshold must exceed 1, got {}", self.rescale_threshold));
        }
        if self.grid_points < 3 {
            return bad(format!("grid_points must be >= 3, got {}", self.grid_points));
        }
        Ok(())
    }

    /// Uniform output grid `r_i = i·R/(n−1)`.
    pub fn grid(&self) -> Vec<T> {
        let last = self.grid_points - 1;
        let h = self.radius / T::from_usize_lossy(last);
        (0..self.grid_points)
            .map(|i| if i == last { self.radius } else { h * T::from_usize_lossy(i) })
            .collect()
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_radius(mut self, radius: T) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rescales: usize,
}

/// Sampled regular solution; the true value is `u = ũ·exp(logscale)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution<T: Real> {
    pub r: Vec<T>,
    pub u: Vec<T>,
    pub uprime: Vec<T>,
    pub logscale: Vec<T>,
    pub config: SolverConfig<T>,
    /// `φ(0)` from the series (`2a₂`).
    pub phi_origin: T,
    pub stats: StepStats,
}

/// Pointwise structural checks on a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolutionChecks {
    pub positive: bool,
    pub nondecreasing: bool,
    pub logscale_monotone: bool,
}

impl<T: Real> RadialSolution<T> {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `ln u(r_i)`.
    pub fn log_u(&self, i: usize) -> T {
        self.u[i].ln() + self.logscale[i]
    }

    /// `u′/u` at `r_i`; independent of the rescaling.
    pub fn log_derivative(&self, i: usize) -> T {
        self.uprime[i] / self.u[i]
    }

    /// `u(r_j)/u(r_i) − 1`, computed without forming either value.
    pub fn relative_step(&self, i: usize, j: usize) -> T {
        let shift = self.logscale[j] - self.logscale[i];
        if shift == T::zero() {
            (self.u[j] - self.u[i]) / self.u[i]
        } else {
            ((self.u[j] / self.u[i]).ln() + shift).exp_m1()
        }
    }

    pub fn checks(&self) -> SolutionChecks {
        SolutionChecks {
            positive: self.u.iter().all(|u| *u > T::zero()),
            nondecreasing: self.uprime.iter().all(|d| *d >= T::zero())
                && (1..self.len()).all(|i| self.relative_step(i - 1, i) >= T::zero()),
            logscale_monotone: self.logscale.windows(2).all(|w| w[1] >= w[0]),
        }
    }
}

/// `(u(ε), u′(ε))` from the series.
pub fn seed<T: Real>(series: &SeriesSolution<T>, epsilon: T) -> Result<(T, T)> {
    series.eval(epsilon)
}

/// Integrates on the uniform grid of `cfg`.
pub fn integrate<T: Real>(pot: &Potential<T>, cfg: &SolverConfig<T>, series: &SeriesSolution<T>) -> Result<RadialSolution<T>> {
    integrate_on(pot, cfg, series, &cfg.grid())
}

/// Integrates and samples at the given nondecreasing radii (`cfg.grid_points`
/// is ignored). Radii at or below `ε` are filled from the series; every other
/// radius is hit exactly by the step sequence, so no interpolation is involved.
pub fn integrate_on<T: Real>(
    pot: &Potential<T>,
    cfg: &SolverConfig<T>,
    series: &SeriesSolution<T>,
    radii: &[T],
) -> Result<RadialSolution<T>> {
    cfg.validate()?;
    if series.dimension != cfg.dimension || series.sigma != cfg.sigma {
        return Err(Error::InvalidConfig(
            "series was built for a different dimension or sigma".into(),
        ));
    }
    if radii.windows(2).any(|w| !(w[1] >= w[0])) || radii.iter().any(|r| !(*r >= T::zero())) {
        return Err(Error::InvalidConfig("output radii must be nonnegative and sorted".into()));
    }
    if let Some(last) = radii.last() {
        if *last > pot.domain_end() {
            return Err(Error::OutOfDomain {
                r: last.as_f64(),
                max: pot.domain_end().as_f64(),
            });
        }
    }
    let estimate = series.truncation_error(cfg.epsilon);
    if cfg.epsilon > series.trunc_radius || estimate > cfg.abs_tol {
        return Err(Error::SeedTruncation {
            epsilon: cfg.epsilon.as_f64(),
            estimate: estimate.as_f64(),
            abs_tol: cfg.abs_tol.as_f64(),
        });
    }

    let n = radii.len();
    let mut out = RadialSolution {
        r: radii.to_vec(),
        u: Vec::with_capacity(n),
        uprime: Vec::with_capacity(n),
        logscale: Vec::with_capacity(n),
        config: *cfg,
        phi_origin: series.phi_origin(),
        stats: StepStats::default(),
    };

    let mut stepper = Stepper::new(pot, cfg, series)?;
    for &target in radii {
        if target <= cfg.epsilon {
            let (u, du) = series.eval(target)?;
            out.u.push(u);
            out.uprime.push(du);
            out.logscale.push(T::zero());
        } else {
            stepper.advance_to(target)?;
            out.u.push(stepper.y[0]);
            out.uprime.push(stepper.y[1]);
            out.logscale.push(stepper.logscale);
        }
    }
    out.stats = stepper.stats;
    Ok(out)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (fifth-order minus embedded fourth-order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller constants (Hairer & Wanner's DOPRI5 defaults).
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const MAX_STEPS: usize = 50_000_000;

type State<T> = [T; 2];

struct Stepper<'a, T: Real> {
    pot: &'a Potential<T>,
    cfg: &'a SolverConfig<T>,
    radial: T,
    inv_sigma4: T,
    r: T,
    y: State<T>,
    k1: State<T>,
    h: T,
    err_old: T,
    logscale: T,
    stats: StepStats,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(pot: &'a Potential<T>, cfg: &'a SolverConfig<T>, series: &SeriesSolution<T>) -> Result<Self> {
        let (u, du) = seed(series, cfg.epsilon)?;
        let mut s = Stepper {
            pot,
            cfg,
            radial: cfg.dimension - T::one(),
            inv_sigma4: T::one() / cfg.sigma.powi(4),
            r: cfg.epsilon,
            y: [u, du],
            k1: [T::zero(); 2],
            h: cfg.epsilon,
            err_old: T::lit(1e-4),
            logscale: T::zero(),
            stats: StepStats::default(),
        };
        s.k1 = s.rhs(s.r, &s.y)?;
        Ok(s)
    }

    fn rhs(&self, r: T, y: &State<T>) -> Result<State<T>> {
        let b = self.pot.eval(r)?;
        Ok([y[1], -self.radial / r * y[1] + b * self.inv_sigma4 * y[0]])
    }

    fn advance_to(&mut self, target: T) -> Result<()> {
        let tiny = T::lit(64.0) * T::epsilon();
        while self.r < target {
            let remaining = target - self.r;
            let lands = self.h >= remaining * (T::one() - tiny);
            let h = if lands { remaining } else { self.h };
            if h <= tiny * self.r.max(T::one()) && !lands {
                return Err(Error::StepSizeUnderflow {
                    r: self.r.as_f64(),
                    h: h.as_f64(),
                });
            }
            if self.stats.accepted + self.stats.rejected > MAX_STEPS {
                return Err(Error::StepSizeUnderflow {
                    r: self.r.as_f64(),
                    h: h.as_f64(),
                });
            }
            let (y_new, k7, err) = self.try_step(h)?;
            let expo = T::lit(0.2 - 0.75 * BETA);
            let fac11 = err.powf(expo);
            if err <= T::one() {
                let fac = (fac11 / self.err_old.powf(T::lit(BETA)) / T::lit(SAFETY))
                    .max(T::one() / T::lit(FAC_MAX))
                    .min(T::one() / T::lit(FAC_MIN));
                let h_next = h / fac;
                // A step shortened to land on an output point should not
                // shrink the step the controller was already using.
                self.h = if lands { h_next.max(self.h) } else { h_next };
                self.err_old = err.max(T::lit(1e-4));
                self.r = if lands { target } else { self.r + h };
                self.y = y_new;
                self.k1 = k7;
                self.stats.accepted += 1;
                self.rescale();
            } else {
                let shrink = (fac11 / T::lit(SAFETY)).min(T::one() / T::lit(FAC_MIN));
                self.h = h / shrink;
                self.stats.rejected += 1;
            }
        }
        Ok(())
    }

    fn rescale(&mut self) {
        let u = self.y[0];
        if u > self.cfg.rescale_threshold {
            self.y = [T::one(), self.y[1] / u];
            self.k1 = [self.k1[0] / u, self.k1[1] / u];
            self.logscale += u.ln();
            self.stats.rescales += 1;
        }
    }

    fn try_step(&self, h: T) -> Result<(State<T>, State<T>, T)> {
        let (r, y, k1) = (self.r, self.y, self.k1);
        let c = T::lit;
        let comb = |terms: &[(f64, &State<T>)]| -> State<T> {
            let mut out = y;
            for (w, k) in terms {
                out[0] += h * c(*w) * k[0];
                out[1] += h * c(*w) * k[1];
            }
            out
        };
        let k2 = self.rhs(r + c(C2) * h, &comb(&[(A21, &k1)]))?;
        let k3 = self.rhs(r + c(C3) * h, &comb(&[(A31, &k1), (A32, &k2)]))?;
        let k4 = self.rhs(r + c(C4) * h, &comb(&[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = self.rhs(
            r + c(C5) * h,
            &comb(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = self.rhs(
            r + h,
            &comb(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = comb(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = self.rhs(r + h, &y_new)?;

        let mut sum = T::zero();
        for i in 0..2 {
            let e = h
                * (c(E1) * k1[i] + c(E3) * k3[i] + c(E4) * k4[i] + c(E5) * k5[i] + c(E6) * k6[i] + c(E7) * k7[i]);
            let sc = self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            sum += (e / sc).powi(2);
        }
        let err = (sum / T::lit(2.0)).sqrt();
        if !err.is_finite() {
            return Err(Error::StepSizeUnderflow {
                r: r.as_f64(),
                h: h.as_f64(),
            });
        }
        Ok((y_new, k7, err))
    }
}

/// Checks `u′(r) = (σ⁴ r^{N−1})⁻¹ ∫₀^r s^{N−1} b(s) u(s) ds` on the grid.
///
/// The integral is accumulated segment by segment with the Hermite-corrected
/// trapezoid rule `h/2 (f₀+f₁) + h²/12 (f₀′−f₁′)`, carried in the rescaled
/// coordinates of the current point. Returns the largest mismatch relative
/// to `max(ũ, |ũ′|)` over `r > 0`.
pub fn u_prime_integral_check<T: Real>(sol: &RadialSolution<T>, pot: &Potential<T>) -> Result<T> {
    let cfg = &sol.config;
    let n_dim = cfg.dimension;
    let sigma4 = cfg.sigma.powi(4);
    let two = T::lit(2.0);
    let twelve = T::lit(12.0);

    // (f, f′) with f = s^{N−1} b ũ in the scale of the point itself.
    let integrand = |i: usize| -> Result<(T, T)> {
        let s = sol.r[i];
        let b = pot.eval(s)?;
        let db = pot.derivative(s)?;
        let (u, du) = (sol.u[i], sol.uprime[i]);
        let w = s.powf(n_dim - T::one());
        let dw = if s > T::zero() {
            (n_dim - T::one()) * s.powf(n_dim - two)
        } else if n_dim == T::one() || n_dim > two {
            T::zero()
        } else if n_dim == two {
            T::one()
        } else if b == T::zero() {
            T::zero()
        } else {
            T::infinity()
        };
        let f = w * b * u;
        let df = dw * b * u + w * db * u + w * b * du;
        Ok((f, if df.is_nan() { T::infinity() } else { df }))
    };

    let mut worst = T::zero();
    let mut acc = T::zero();
    let (mut f_prev, mut df_prev) = integrand(0)?;
    for i in 1..sol.len() {
        let h = sol.r[i] - sol.r[i - 1];
        let carry = (sol.logscale[i - 1] - sol.logscale[i]).exp();
        let (f, df) = integrand(i)?;
        let (f0, df0) = (f_prev * carry, df_prev * carry);
        let mut seg = h / two * (f0 + f);
        let corr = h * h / twelve * (df0 - df);
        if corr.is_finite() {
            seg += corr;
        }
        acc = acc * carry + seg;
        let r = sol.r[i];
        if r > T::zero() {
            let predicted = acc / (sigma4 * r.powf(n_dim - T::one()));
            let scale = sol.u[i].max(sol.uprime[i].abs());
            worst = worst.max((sol.uprime[i] - predicted).abs() / scale);
        }
        f_prev = f;
        df_prev = df;
    }
    Ok(worst)
}
