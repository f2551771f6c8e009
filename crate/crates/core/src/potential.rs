//! Radial cost functions `b(r)`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::scalar::Real;

/// Largest integer exponent expanded into Taylor coefficients.
const MAX_TAYLOR_EXPONENT: usize = 64;

/// How the series seed at the origin was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Exact Taylor coefficients of `b`.
    Analytic,
    /// `b(r) ≈ c₀ + c₂ r²` fitted through three samples next to the origin.
    LocalQuadratic,
}

/// Origin and infinity growth descriptors `lim b(r)/r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRates<T: Real> {
    pub origin: ExtendedReal<T>,
    pub infinity: ExtendedReal<T>,
    /// Set for tabulated potentials, where the limits are sampled ratios.
    pub estimated: bool,
}

/// JSON form of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialDef<T> {
    Monomial {
        lambda: T,
        p: T,
    },
    Taylor {
        coeffs: Vec<T>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<T>,
    },
    Table {
        points: Vec<[T; 2]>,
    },
}

/// Radial cost function.
///
/// Growth rates are always derived from the representation and never
/// supplied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "PotentialDef<T>",
    into = "PotentialDef<T>",
    bound = "T: Real + Serialize + DeserializeOwned"
)]
pub enum Potential<T: Real> {
    /// `λ r^p`.
    Monomial { lambda: T, exponent: T },
    /// `Σ b_m r^m`, valid for `r ≤ radius`.
    TaylorSeries { coeffs: Vec<T>, radius: T },
    /// Monotone cubic (PCHIP) interpolation of samples starting at `r = 0`.
    Tabulated(Table<T>),
}

/// Tabulated samples with precomputed shape-preserving slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    r: Vec<T>,
    b: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> Potential<T> {
    pub fn monomial(lambda: T, exponent: T) -> Result<Self> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "monomial coefficient must be finite and nonnegative, got {lambda}"
            )));
        }
        if !(exponent >= T::zero()) || !exponent.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "monomial exponent must be finite and nonnegative, got {exponent}"
            )));
        }
        Ok(Potential::Monomial { lambda, exponent })
    }

    /// `radius = None` means the polynomial is valid on the whole half-line.
    pub fn taylor(coeffs: Vec<T>, radius: Option<T>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPotential("non-finite Taylor coefficient".into()));
        }
        let radius = radius.unwrap_or_else(T::infinity);
        if !(radius > T::zero()) {
            return Err(Error::InvalidPotential(format!(
                "Taylor radius must be positive, got {radius}"
            )));
        }
        Ok(Potential::TaylorSeries { coeffs, radius })
    }

    pub fn tabulated(points: &[[T; 2]]) -> Result<Self> {
        Table::new(points).map(Potential::Tabulated)
    }

    /// `b ≡ 0`.
    pub fn zero() -> Self {
        Potential::TaylorSeries {
            coeffs: Vec::new(),
            radius: T::infinity(),
        }
    }

    /// Largest radius at which `b` is defined.
    pub fn domain_end(&self) -> T {
        match self {
            Potential::Monomial { .. } => T::infinity(),
            Potential::TaylorSeries { radius, .. } => *radius,
            Potential::Tabulated(t) => *t.r.last().expect("table is nonempty"),
        }
    }

    fn check_domain(&self, r: T) -> Result<()> {
        let end = self.domain_end();
        if !(r >= T::zero()) || r > end || !r.is_finite() {
            return Err(Error::OutOfDomain {
                r: r.as_f64(),
                max: end.as_f64(),
            });
        }
        Ok(())
    }

    /// `b(r)`; rejects negative values produced by the representation.
    pub fn eval(&self, r: T) -> Result<T> {
        self.check_domain(r)?;
        let value = match self {
            Potential::Monomial { lambda, exponent } => {
                if *exponent == T::zero() {
                    *lambda
                } else {
                    *lambda * r.powf(*exponent)
                }
            }
            Potential::TaylorSeries { coeffs, .. } => horner(coeffs, r),
            Potential::Tabulated(t) => t.interpolate(r),
        };
        if value < T::zero() || value.is_nan() {
            return Err(Error::NegativeCost {
                r: r.as_f64(),
                value: value.as_f64(),
            });
        }
        Ok(value)
    }

    /// `b′(r)`: analytic for monomial and Taylor kinds, central finite
    /// difference of the interpolant for tables.
    pub fn derivative(&self, r: T) -> Result<T> {
        self.check_domain(r)?;
        Ok(match self {
            Potential::Monomial { lambda, exponent } => {
                if *exponent == T::zero() {
                    T::zero()
                } else if *exponent == T::one() {
                    *lambda
                } else {
                    *lambda * *exponent * r.powf(*exponent - T::one())
                }
            }
            Potential::TaylorSeries { coeffs, .. } => {
                let mut acc = T::zero();
                for (m, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * r + *c * T::from_usize_lossy(m);
                }
                acc
            }
            Potential::Tabulated(t) => {
                let end = *t.r.last().expect("table is nonempty");
                let spacing = t.r[1] - t.r[0];
                let delta = T::lit(1e-6) * spacing.max(r);
                let lo = (r - delta).max(T::zero());
                let hi = (r + delta).min(end);
                (t.interpolate(hi) - t.interpolate(lo)) / (hi - lo)
            }
        })
    }

    pub fn growth_rates(&self) -> GrowthRates<T> {
        match self {
            Potential::Monomial { lambda, exponent } => {
                let two = T::lit(2.0);
                let (origin, infinity) = if *lambda == T::zero() {
                    (ExtendedReal::Zero, ExtendedReal::Zero)
                } else if *exponent == two {
                    (ExtendedReal::Finite(*lambda), ExtendedReal::Finite(*lambda))
                } else if *exponent > two {
                    (ExtendedReal::Zero, ExtendedReal::Infinite)
                } else {
                    (ExtendedReal::Infinite, ExtendedReal::Zero)
                };
                GrowthRates {
                    origin,
                    infinity,
                    estimated: false,
                }
            }
            Potential::TaylorSeries { coeffs, .. } => {
                let lowest = coeffs.iter().position(|c| *c != T::zero());
                let highest = coeffs.iter().rposition(|c| *c != T::zero());
                let rate = |idx: Option<usize>, below: ExtendedReal<T>, above: ExtendedReal<T>| {
                    match idx {
                        None => ExtendedReal::Zero,
                        Some(2) => ExtendedReal::from_value(coeffs[2]),
                        Some(m) if m < 2 => below,
                        Some(_) => above,
                    }
                };
                GrowthRates {
                    origin: rate(lowest, ExtendedReal::Infinite, ExtendedReal::Zero),
                    infinity: rate(highest, ExtendedReal::Zero, ExtendedReal::Infinite),
                    estimated: false,
                }
            }
            Potential::Tabulated(t) => {
                let first = t
                    .r
                    .iter()
                    .position(|r| *r > T::zero())
                    .expect("table has positive radii");
                let last = t.r.len() - 1;
                let ratio = |i: usize| ExtendedReal::from_value(t.b[i] / (t.r[i] * t.r[i]));
                GrowthRates {
                    origin: ratio(first),
                    infinity: ratio(last),
                    estimated: true,
                }
            }
        }
    }

    /// Taylor coefficients `b₀, b₁, …` at the origin.
    ///
    /// Tabulated potentials return their local quadratic fit; monomials with
    /// non-integer exponents have no expansion and are rejected.
    pub fn taylor_coefficients(&self) -> Result<(Vec<T>, SeedMode)> {
        match self {
            Potential::Monomial { lambda, exponent } => {
                if exponent.fract() != T::zero() {
                    return Err(Error::UnsupportedPotential(format!(
                        "monomial exponent {exponent} is not an integer"
                    )));
                }
                let p = exponent.to_usize().unwrap_or(usize::MAX);
                if p > MAX_TAYLOR_EXPONENT {
                    return Err(Error::UnsupportedPotential(format!(
                        "monomial exponent {exponent} exceeds {MAX_TAYLOR_EXPONENT}"
                    )));
                }
                let mut coeffs = vec![T::zero(); p + 1];
                coeffs[p] = *lambda;
                Ok((coeffs, SeedMode::Analytic))
            }
            Potential::TaylorSeries { coeffs, .. } => Ok((coeffs.clone(), SeedMode::Analytic)),
            Potential::Tabulated(t) => Ok((
                local_quadratic([t.r[0], t.r[1], t.r[2]], [t.b[0], t.b[1], t.b[2]]),
                SeedMode::LocalQuadratic,
            )),
        }
    }

    /// Like [`Potential::taylor_coefficients`], but potentials without an
    /// expansion are seeded with a local quadratic fit through `b(0)`,
    /// `b(probe)` and `b(2·probe)`.
    pub fn seed_coefficients(&self, probe: T) -> Result<(Vec<T>, SeedMode)> {
        match self.taylor_coefficients() {
            Err(Error::UnsupportedPotential(_)) => {
                let two = T::lit(2.0);
                let radii = [T::zero(), probe, two * probe];
                let values = [self.eval(radii[0])?, self.eval(radii[1])?, self.eval(radii[2])?];
                Ok((local_quadratic(radii, values), SeedMode::LocalQuadratic))
            }
            other => other,
        }
    }
}

/// `[c₀, 0, c₂]` with `c₀ = b(0)` and `c₂` the least-squares curvature of
/// the two remaining samples.
fn local_quadratic<T: Real>(r: [T; 3], b: [T; 3]) -> Vec<T> {
    let c0 = b[0];
    let (r1, r2) = (r[1] * r[1], r[2] * r[2]);
    let c2 = (r1 * (b[1] - c0) + r2 * (b[2] - c0)) / (r1 * r1 + r2 * r2);
    vec![c0, T::zero(), c2]
}

pub(crate) fn horner<T: Real>(coeffs: &[T], r: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, c| acc * r + *c)
}

impl<T: Real> Table<T> {
    fn new(points: &[[T; 2]]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidPotential(
                "a table needs at least three points".into(),
            ));
        }
        if points[0][0] != T::zero() {
            return Err(Error::InvalidPotential(
                "a table must start at r = 0".into(),
            ));
        }
        let r: Vec<T> = points.iter().map(|p| p[0]).collect();
        let b: Vec<T> = points.iter().map(|p| p[1]).collect();
        if r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPotential(
                "table radii must be finite and strictly increasing".into(),
            ));
        }
        if let Some(i) = b.iter().position(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::NegativeCost {
                r: r[i].as_f64(),
                value: b[i].as_f64(),
            });
        }
        let slopes = pchip_slopes(&r, &b);
        Ok(Table { r, b, slopes })
    }

    pub fn points(&self) -> impl Iterator<Item = [T; 2]> + '_ {
        self.r.iter().zip(&self.b).map(|(r, b)| [*r, *b])
    }

    fn interpolate(&self, x: T) -> T {
        let n = self.r.len();
        let k = self.r.partition_point(|r| *r <= x).clamp(1, n - 1) - 1;
        let h = self.r[k + 1] - self.r[k];
        let t = (x - self.r[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.b[k] + h10 * h * self.slopes[k] + h01 * self.b[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Fritsch–Butland slopes: zero at local extrema, weighted harmonic mean of
/// the secant slopes elsewhere, shape-preserving one-sided end conditions.
fn pchip_slopes<T: Real>(r: &[T], b: &[T]) -> Vec<T> {
    let n = r.len();
    let h: Vec<T> = r.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<T> = (0..n - 1).map(|k| (b[k + 1] - b[k]) / h[k]).collect();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let mut m = vec![T::zero(); n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > T::zero() {
            let w1 = two * h[k] + h[k - 1];
            let w2 = h[k] + two * h[k - 1];
            m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: T, h1: T, d0: T, d1: T| -> T {
        let d = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if d.signum() != d0.signum() {
            T::zero()
        } else if d0.signum() != d1.signum() && d.abs() > three * d0.abs() {
            three * d0
        } else {
            d
        }
    };
    m[0] = end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

impl<T: Real> TryFrom<PotentialDef<T>> for Potential<T> {
    type Error = Error;

    fn try_from(def: PotentialDef<T>) -> Result<Self> {
        match def {
            PotentialDef::Monomial { lambda, p } => Potential::monomial(lambda, p),
            PotentialDef::Taylor { coeffs, radius } => Potential::taylor(coeffs, radius),
            PotentialDef::Table { points } => Potential::tabulated(&points),
        }
    }
}

impl<T: Real> From<Potential<T>> for PotentialDef<T> {
    fn from(p: Potential<T>) -> Self {
        match p {
            Potential::Monomial { lambda, exponent } => PotentialDef::Monomial { lambda, p: exponent },
            Potential::TaylorSeries { coeffs, radius } => PotentialDef::Taylor {
                coeffs,
                radius: radius.is_finite().then_some(radius),
            },
            Potential::Tabulated(t) => PotentialDef::Table {
                points: t.points().collect(),
            },
        }
    }
}
