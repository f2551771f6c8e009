//! Power series of the regular auxiliary solution at the origin.
//!
//! Substituting `u = Σ a_k r^k` into `u″ + ((N−1)/r)u′ − (b/σ⁴)u = 0` and
//! collecting `r^n` gives
//!
//! ```text
//! (n+2)(n+N) a_{n+2} = σ⁻⁴ Σ_{m=0..n} b_m a_{n−m},   a₀ = 1, a₁ = 0.
//! ```
//!
//! For `b = λr²` this collapses to `a_{4k} = λ^k / (σ^{4k} κ_k(N))` with
//! `κ_k = κ_{k−1}·(4k)(4k+N−2)`, which [`quadratic_kappa`] computes along a
//! separate code path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{horner, Potential, SeedMode};
use crate::scalar::{Coefficient, Real};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 24;

/// Relative tail size that defines the truncation radius.
const TAIL_TOLERANCE: f64 = 1e-14;

/// Coefficients `a₀..=a_order` of the regular solution.
///
/// `b` holds Taylor coefficients of the cost, `sigma4` is `σ⁴`. Generic over
/// any field, so exact rational arithmetic works as well as floats.
pub fn series_coefficients<C: Coefficient>(b: &[C], dimension: &C, sigma4: &C, order: usize) -> Vec<C> {
    let mut a = vec![C::zero(); order + 1];
    a[0] = C::one();
    for n in 0..order.saturating_sub(1) {
        let mut rhs = C::zero();
        for (m, bm) in b.iter().enumerate().take(n + 1) {
            rhs = rhs + bm.clone() * a[n - m].clone();
        }
        let k = C::from_usize(n + 2).expect("index representable");
        let shifted = C::from_usize(n).expect("index representable") + dimension.clone();
        a[n + 2] = rhs / (sigma4.clone() * k * shifted);
    }
    a
}

/// `κ_k(N) = Π_{j=1..k} (4j)(4j+N−2)`.
pub fn quadratic_kappa<C: Coefficient>(dimension: &C, k: usize) -> C {
    (1..=k).fold(C::one(), |acc, j| {
        let four_j = C::from_usize(4 * j).expect("index representable");
        let shift = four_j.clone() + dimension.clone() - C::from_usize(2).expect("small constant");
        acc * four_j * shift
    })
}

/// Truncated series solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSolution<T: Real> {
    pub coeffs: Vec<T>,
    pub order: usize,
    pub dimension: T,
    pub sigma: T,
    /// Largest radius at which the tail estimate stays below `1e-14`
    /// relative to the partial sum.
    pub trunc_radius: T,
    pub seed_mode: SeedMode,
    /// `b₀ > 0`: the origin rate `L₀` is infinite and the existence theorem's
    /// hypotheses are not met, even though the recurrence is well defined.
    pub extended_mode: bool,
    /// Taylor coefficients of `b` the series was built from.
    pub potential_coeffs: Vec<T>,
}

/// Series for a potential with an exact Taylor expansion (or a tabulated
/// potential, through its local quadratic fit).
pub fn build_series<T: Real>(pot: &Potential<T>, dimension: T, sigma: T, order: usize) -> Result<SeriesSolution<T>> {
    let (coeffs, mode) = pot.taylor_coefficients()?;
    SeriesSolution::from_potential_coeffs(coeffs, mode, dimension, sigma, order, pot.domain_end())
}

impl<T: Real> SeriesSolution<T> {
    /// Builds the series from explicit Taylor coefficients of `b`;
    /// `validity_radius` caps the truncation radius (radius of convergence
    /// of the cost's own expansion).
    pub fn from_potential_coeffs(
        potential_coeffs: Vec<T>,
        seed_mode: SeedMode,
        dimension: T,
        sigma: T,
        order: usize,
        validity_radius: T,
    ) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
        }
        if !(dimension >= T::one()) || !dimension.is_finite() {
            return Err(Error::InvalidConfig(format!("dimension must be >= 1, got {dimension}")));
        }
        if order < 4 {
            return Err(Error::InvalidConfig(format!("series order must be >= 4, got {order}")));
        }
        let sigma4 = sigma.powi(4);
        let coeffs = series_coefficients(&potential_coeffs, &dimension, &sigma4, order);
        let extended_mode = potential_coeffs.first().is_some_and(|b0| *b0 > T::zero());
        let mut s = SeriesSolution {
            coeffs,
            order,
            dimension,
            sigma,
            trunc_radius: T::zero(),
            seed_mode,
            extended_mode,
            potential_coeffs,
        };
        s.trunc_radius = s.scan_trunc_radius().min(validity_radius);
        Ok(s)
    }

    /// Tail estimate `max |a_k| r^k` over the last four coefficients; four
    /// covers the sparsity pattern of quadratic potentials.
    pub fn truncation_error(&self, r: T) -> T {
        let lo = self.order.saturating_sub(3).max(2);
        (lo..=self.order)
            .map(|k| self.coeffs[k].abs() * r.powi(k as i32))
            .fold(T::zero(), T::max)
    }

    fn scan_trunc_radius(&self) -> T {
        let tol = T::lit(TAIL_TOLERANCE);
        let growth = T::lit(1.02);
        let limit = T::lit(1e8);
        let mut prev = T::zero();
        let mut r = T::lit(1e-8);
        while r < limit {
            let sum = horner(&self.coeffs, r).abs().max(T::one());
            if self.truncation_error(r) / sum > tol {
                return prev;
            }
            prev = r;
            r *= growth;
        }
        T::infinity()
    }

    /// `(u(r), u′(r))` by Horner's rule.
    pub fn eval(&self, r: T) -> Result<(T, T)> {
        if !(r >= T::zero()) || r > self.trunc_radius {
            return Err(Error::TruncationDomain {
                r: r.as_f64(),
                radius: self.trunc_radius.as_f64(),
            });
        }
        Ok(self.eval_unchecked(r))
    }

    fn eval_unchecked(&self, r: T) -> (T, T) {
        let u = horner(&self.coeffs, r);
        let mut du = T::zero();
        for (k, a) in self.coeffs.iter().enumerate().skip(1).rev() {
            du = du * r + *a * T::from_usize_lossy(k);
        }
        (u, du)
    }

    /// `u″(r)` of the truncated series.
    pub fn second_derivative(&self, r: T) -> T {
        let mut d2 = T::zero();
        for (k, a) in self.coeffs.iter().enumerate().skip(2).rev() {
            d2 = d2 * r + *a * T::from_usize_lossy(k * (k - 1));
        }
        d2
    }

    /// `φ(0) = lim u′/(ru) = 2a₂`.
    pub fn phi_origin(&self) -> T {
        T::lit(2.0) * self.coeffs[2]
    }

    /// Residual of the linear equation for the truncated series at `r > 0`,
    /// using the truncated Taylor expansion of `b`.
    pub fn ode_residual(&self, r: T) -> T {
        let (u, du) = self.eval_unchecked(r);
        let b = horner(&self.potential_coeffs, r);
        self.second_derivative(r) + (self.dimension - T::one()) / r * du - b / self.sigma.powi(4) * u
    }

    /// Largest defect of the recurrence, scaled by the magnitude of its terms.
    pub fn recurrence_residual(&self) -> T {
        let sigma4 = self.sigma.powi(4);
        let mut worst = T::zero();
        for n in 0..self.order - 1 {
            let k = T::from_usize_lossy(n + 2);
            let lhs = k * (T::from_usize_lossy(n) + self.dimension) * self.coeffs[n + 2];
            let mut rhs = T::zero();
            let mut scale = lhs.abs();
            for (m, bm) in self.potential_coeffs.iter().enumerate().take(n + 1) {
                let term = *bm * self.coeffs[n - m] / sigma4;
                rhs += term;
                scale = scale.max(term.abs());
            }
            if scale > T::zero() {
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(quadratic_kappa(&2.0_f64, 1), 16.0);
        assert_eq!(quadratic_kappa(&2.0_f64, 2), 1024.0);
        assert_eq!(quadratic_kappa(&1.0_f64, 1), 12.0);
        assert_eq!(quadratic_kappa(&rat(2, 1), 2), rat(1024, 1));
    }

    #[test]
    fn quadratic_benchmark_coefficients() {
        let lambda = 1.7;
        let pot = Potential::monomial(lambda, 2.0).unwrap();
        let s = build_series(&pot, 2.0, 1.0, 8).unwrap();
        assert_eq!(s.coeffs[0], 1.0);
        assert_eq!(s.coeffs[1], 0.0);
        assert_relative_eq!(s.coeffs[4], lambda / 16.0, max_relative = 1e-15);
        assert_relative_eq!(s.coeffs[8], lambda * lambda / 1024.0, max_relative = 1e-15);
        for k in [1, 2, 3, 5, 6, 7] {
            assert_eq!(s.coeffs[k], 0.0);
        }
    }

    #[test]
    fn zero_potential_gives_constant() {
        let s = build_series(&Potential::<f64>::zero(), 3.0, 1.0, 12).unwrap();
        assert!(s.coeffs[1..].iter().all(|a| *a == 0.0));
        assert_eq!(s.trunc_radius, f64::INFINITY);
        assert_eq!(s.eval(100.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn low_order_terms_with_constant_cost() {
        // n = 0: 2N a₂ = b₀/σ⁴;  n = 1: 3(N+1) a₃ = b₁/σ⁴.
        let pot = Potential::taylor(vec![1.0, 1.0], None).unwrap();
        let s = build_series(&pot, 3.0, 1.0, 4).unwrap();
        assert_relative_eq!(s.coeffs[2], 1.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(s.coeffs[3], 1.0 / 12.0, max_relative = 1e-15);
        assert!(s.extended_mode);
        assert_relative_eq!(s.phi_origin(), 1.0 / 3.0, max_relative = 1e-15);

        // In one dimension the radial term vanishes: a₂ = b₀/2, a₃ = b₁/6.
        let s1 = build_series(&pot, 1.0, 1.0, 4).unwrap();
        assert_relative_eq!(s1.coeffs[2], 0.5, max_relative = 1e-15);
        assert_relative_eq!(s1.coeffs[3], 1.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn origin_expansion_of_quadratic_cost() {
        for n in [1.0, 2.0, 3.0, 5.0] {
            let l0 = 2.5;
            let sigma = 0.8_f64;
            let pot = Potential::taylor(vec![0.0, 0.0, l0], None).unwrap();
            let s = build_series(&pot, n, sigma, 12).unwrap();
            assert_eq!(s.coeffs[2], 0.0);
            assert_eq!(s.coeffs[3], 0.0);
            assert_relative_eq!(s.coeffs[4], l0 / (4.0 * sigma.powi(4) * (n + 2.0)), max_relative = 1e-14);
            assert!(!s.extended_mode);
            assert_eq!(s.phi_origin(), 0.0);
        }
    }

    #[test]
    fn exact_rational_series_matches_kappa() {
        let lambda = rat(3, 7);
        let sigma4 = rat(16, 81);
        let dim = rat(5, 2);
        let b = vec![rat(0, 1), rat(0, 1), lambda.clone()];
        let a = series_coefficients(&b, &dim, &sigma4, 24);
        for k in 1..=6 {
            let mut expect = rat(1, 1);
            for _ in 0..k {
                expect = expect * lambda.clone() / sigma4.clone();
            }
            expect /= quadratic_kappa(&dim, k);
            assert_eq!(a[4 * k], expect);
        }
    }

    #[test]
    fn seed_values_near_origin() {
        // b = r², N = 2, σ = 1: u = 1 + r⁴/16 + r⁸/1024 + …
        let s = build_series(&Potential::monomial(1.0, 2.0).unwrap(), 2.0, 1.0, 24).unwrap();
        let (u, du) = s.eval(1e-3).unwrap();
        assert_relative_eq!(u - 1.0, 6.25e-14, max_relative = 1e-3);
        assert_relative_eq!(du, 2.5e-10, max_relative = 1e-10);
        let (u, _) = s.eval(0.1).unwrap();
        let oracle = 1.0 + 1e-4 / 16.0 + 1e-8 / 1024.0 + 1e-12 / (1024.0 * 12.0 * 12.0);
        assert_relative_eq!(u, oracle, max_relative = 1e-15);
        assert!(s.trunc_radius > 0.5 && s.trunc_radius < 2.0, "{}", s.trunc_radius);
        assert!(matches!(s.eval(10.0), Err(Error::TruncationDomain { .. })));
        assert_eq!(s.eval(0.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn constant_cost_seed_slope() {
        // b₀ = 1, σ = 1: u′ ≈ 2a₂ r = r/N near the origin.
        let pot = Potential::taylor(vec![1.0], None).unwrap();
        for n in [1.0, 2.0, 3.0] {
            let s = build_series(&pot, n, 1.0, 24).unwrap();
            // Oracle: direct partial sums of the series with a₂ⱼ = a₂ⱼ₋₂ / (2j(2j+N−2)).
            let r: f64 = 0.2;
            let mut a = 1.0;
            let mut du = 0.0;
            for j in 1..30 {
                let k = 2.0 * j as f64;
                a /= k * (k + n - 2.0);
                du += k * a * r.powi(2 * j - 1);
            }
            let (_, got) = s.eval(r).unwrap();
            assert_relative_eq!(got, du, max_relative = 1e-14);
            assert_relative_eq!(got, r / n, max_relative = 0.01);
        }
    }

    #[test]
    fn non_integer_exponent_is_unsupported() {
        let pot = Potential::monomial(1.0, 1.5).unwrap();
        assert!(matches!(build_series(&pot, 2.0, 1.0, 24), Err(Error::UnsupportedPotential(_))));
    }

    #[test]
    fn invalid_parameters() {
        let pot = Potential::monomial(1.0, 2.0).unwrap();
        assert!(build_series(&pot, 2.0, 0.0, 24).is_err());
        assert!(build_series(&pot, 0.5, 1.0, 24).is_err());
        assert!(build_series(&pot, 2.0, 1.0, 3).is_err());
    }

    #[test]
    fn taylor_radius_caps_truncation_radius() {
        let pot = Potential::taylor(vec![0.0, 0.0, 1.0], Some(0.25)).unwrap();
        let s = build_series(&pot, 2.0, 1.0, 24).unwrap();
        assert_eq!(s.trunc_radius, 0.25);
    }

    #[test]
    fn substitution_residual_is_small() {
        let pot = Potential::<f64>::taylor(vec![0.3, 0.0, 1.0, 0.5, 0.25], None).unwrap();
        let s = build_series(&pot, 3.0, 0.9, 24).unwrap();
        assert!(s.recurrence_residual() < 1e-14);
        let r = s.trunc_radius / 2.0;
        let (u, _) = s.eval(r).unwrap();
        assert!(s.ode_residual(r).abs() / u < 1e-12, "{}", s.ode_residual(r));
    }

    proptest! {
        #[test]
        fn even_cost_gives_even_series(
            b0 in 0.0f64..2.0, b2 in 0.0f64..2.0, b4 in 0.0f64..2.0,
            n in 1.0f64..6.0, sigma in 0.3f64..3.0,
        ) {
            let pot = Potential::taylor(vec![b0, 0.0, b2, 0.0, b4], None).unwrap();
            let s = build_series(&pot, n, sigma, 24).unwrap();
            for k in (1..=24).step_by(2) {
                prop_assert_eq!(s.coeffs[k], 0.0);
            }
        }

        #[test]
        fn float_series_matches_kappa(lambda in 0.1f64..10.0, n in 1.0f64..8.0, sigma in 0.5f64..2.0) {
            let pot = Potential::monomial(lambda, 2.0).unwrap();
            let s = build_series(&pot, n, sigma, 24).unwrap();
            for k in 1..=6 {
                let expect = (lambda / sigma.powi(4)).powi(k as i32) / quadratic_kappa(&n, k);
                prop_assert!((s.coeffs[4 * k] - expect).abs() <= 1e-12 * expect.abs());
            }
        }
    }
}
