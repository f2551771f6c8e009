//! Monte Carlo check of the verification argument: under the feedback law
//! the cost-augmented value `z(|X_t|) + ∫ cost` should be a martingale.
//!
//! The infinite-horizon problem is replaced by a finite horizon `T`; the
//! local martingale identity is what the HJB equation implies on any
//! horizon.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::Real;
use crate::triality::TrialityFields;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub start_radius: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 0.5,
            dt: 1e-3,
            paths: 10_000,
            start_radius: 1.0,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, radius: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.dt > 0.0) || !(self.dt <= self.horizon) {
            return bad(format!("need 0 < dt <= horizon, got dt = {}", self.dt));
        }
        if self.paths < 100 {
            return bad(format!("at least 100 paths are required, got {}", self.paths));
        }
        if !(self.start_radius >= 0.0) || !(self.start_radius < radius) {
            return bad(format!(
                "start radius must lie in [0, {radius}), got {}",
                self.start_radius
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleReport {
    /// `|mean − z(r₀)|`.
    pub gap: f64,
    pub signed_gap: f64,
    /// Mean of `z(|X_T|) + ∫₀^T cost`.
    pub mean: f64,
    pub z_start: f64,
    pub stderr: f64,
    pub exit_fraction: f64,
    pub kept: usize,
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Multiplier on the feedback law (1 is optimal).
    pub scale: f64,
}

/// Path values for the policy `scale·α*`; `None` marks a path that left
/// the solved domain.
fn path_values<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, sim: &SimConfig, scale: f64) -> Result<Vec<Option<f64>>> {
    let radius = fields.radius().as_f64();
    sim.validate(radius)?;
    let dim = fields.dimension.as_f64();
    if dim.fract() != 0.0 || dim < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "simulation needs an integer dimension, got {dim}"
        )));
    }
    let dim = dim as usize;
    let sigma = fields.sigma.as_f64();
    let s2 = sigma * sigma;
    let gain = -2.0 * sigma.powi(4) * scale;
    let steps = sim.steps();
    let dt = sim.horizon / steps as f64;
    let noise = sigma * dt.sqrt();

    (0..sim.paths as u64)
        .into_par_iter()
        .map(|path| -> Result<Option<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
            rng.set_stream(path);
            let mut x = vec![0.0; dim];
            x[0] = sim.start_radius;
            let mut cost = 0.0;
            for _ in 0..steps {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r > radius {
                    return Ok(None);
                }
                let phi = fields.phi_at(T::lit(r))?.as_f64();
                let b = pot.eval(T::lit(r))?.as_f64();
                let k = gain * phi;
                cost += (k * k * r * r / (2.0 * s2) + b) * dt;
                for v in x.iter_mut() {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    *v += k * *v * dt + noise * xi;
                }
            }
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > radius {
                return Ok(None);
            }
            Ok(Some(fields.z_at(T::lit(r))?.as_f64() + cost))
        })
        .collect()
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN, n);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt(), n)
}

fn check_exits(exit_fraction: f64) -> Result<()> {
    if exit_fraction > 0.5 {
        return Err(Error::DomainExit {
            fraction: exit_fraction,
        });
    }
    Ok(())
}

/// Euler–Maruyama simulation of `dX = scale·α*(X) dt + σ dW` from
/// `X₀ = (r₀, 0, …)`. Deterministic in `sim.seed`: path `k` draws from
/// stream `k` of a ChaCha generator, so runs with different scales share
/// their noise.
pub fn simulate_feedback<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, sim: &SimConfig, scale: f64) -> Result<MartingaleReport> {
    let values = path_values(fields, pot, sim, scale)?;
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    let exit_fraction = exit_fraction(&values);
    check_exits(exit_fraction)?;
    let (mean, stderr, n) = mean_and_stderr(kept.iter().copied());
    let z_start = fields.z_at(T::lit(sim.start_radius))?.as_f64();
    let signed_gap = mean - z_start;
    Ok(MartingaleReport {
        gap: signed_gap.abs(),
        signed_gap,
        mean,
        z_start,
        stderr,
        exit_fraction,
        kept: n,
        paths: sim.paths,
        dt: sim.horizon / sim.steps() as f64,
        seed: sim.seed,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyComparison {
    pub scale: f64,
    pub optimal_mean: f64,
    pub scaled_mean: f64,
    /// Standard error of the per-path difference over paths kept by both.
    pub paired_stderr: f64,
}

impl PolicyComparison {
    /// The optimal policy is no worse within three paired standard errors.
    pub fn optimal_wins(&self) -> bool {
        self.optimal_mean <= self.scaled_mean + 3.0 * self.paired_stderr.max(0.0)
    }
}

/// Runs the optimal and the scaled policy on shared noise.
pub fn policy_compare<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, sim: &SimConfig, scale: f64) -> Result<PolicyComparison> {
    Ok(policy_ladder(fields, pot, sim, &[scale])?.remove(0))
}

/// [`policy_compare`] for several scales, sharing the optimal run.
pub fn policy_ladder<T: Real>(fields: &TrialityFields<T>, pot: &Potential<T>, sim: &SimConfig, scales: &[f64]) -> Result<Vec<PolicyComparison>> {
    if let Some(bad) = scales.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidConfig(format!("policy scale must be >= 0, got {bad}")));
    }
    let opt = path_values(fields, pot, sim, 1.0)?;
    check_exits(exit_fraction(&opt))?;
    scales
        .iter()
        .map(|&scale| {
            let alt = path_values(fields, pot, sim, scale)?;
            check_exits(exit_fraction(&alt))?;
            Ok(paired(&opt, &alt, scale))
        })
        .collect()
}

fn exit_fraction(values: &[Option<f64>]) -> f64 {
    1.0 - values.iter().flatten().count() as f64 / values.len() as f64
}

fn paired(opt: &[Option<f64>], alt: &[Option<f64>], scale: f64) -> PolicyComparison {
    let optimal_mean = mean_and_stderr(opt.iter().flatten().copied()).0;
    let scaled_mean = mean_and_stderr(alt.iter().flatten().copied()).0;
    let diffs: Vec<f64> = opt
        .iter()
        .zip(alt)
        .filter_map(|(a, b)| Some((*a)? - (*b)?))
        .collect();
    let paired_stderr = if diffs.iter().all(|d| *d == 0.0) {
        0.0
    } else {
        mean_and_stderr(diffs.iter().copied()).1
    };
    PolicyComparison {
        scale,
        optimal_mean,
        scaled_mean,
        paired_stderr,
    }
}
