//! Run configuration: JSON on disk, checked against the bundled schema,
//! then deserialized with every missing field filled from the defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use triality_core::series::DEFAULT_ORDER;
use triality_core::{Potential, SimConfig, SolverConfig};

use crate::failure::Failure;

pub const SCHEMA: &str = include_str!("../schema/config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dimension: f64,
    pub sigma: f64,
    pub potential: Potential,
    pub solver: SolverSection,
    pub checks: Checks,
    pub tolerances: Tolerances,
    pub sweep: SweepSection,
    pub kummer: KummerSection,
    pub montecarlo: MonteCarloSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dimension: 2.0,
            sigma: 1.0,
            potential: Potential::monomial(1.0, 2.0).expect("valid default"),
            solver: SolverSection::default(),
            checks: Checks::default(),
            tolerances: Tolerances::default(),
            sweep: SweepSection::default(),
            kummer: KummerSection::default(),
            montecarlo: MonteCarloSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: f64,
    pub radius: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub rescale_threshold: f64,
    pub grid_points: usize,
    pub series_order: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            epsilon: d.epsilon,
            radius: d.radius,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            rescale_threshold: d.rescale_threshold,
            grid_points: d.grid_points,
            series_order: DEFAULT_ORDER,
        }
    }
}

/// Invariant checks; a disabled check is still computed and reported but
/// cannot fail the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub solution: bool,
    pub residuals: bool,
    pub u_prime_integral: bool,
    pub dirichlet: bool,
    pub round_trip: bool,
    pub geometry: bool,
    pub barrier: bool,
    pub high_noise_bound: bool,
    pub noise_monotone: bool,
    pub kummer: bool,
    pub martingale: bool,
    pub policy_ladder: bool,
    pub submartingale: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            solution: true,
            residuals: true,
            u_prime_integral: true,
            dirichlet: true,
            round_trip: true,
            geometry: true,
            barrier: true,
            high_noise_bound: true,
            noise_monotone: true,
            kummer: true,
            martingale: true,
            policy_ladder: true,
            submartingale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute bound on the Riccati residual.
    pub riccati: f64,
    /// HJB residual bound, scaled by `max(1, max |z″|)`.
    pub hjb: f64,
    pub u_prime_integral: f64,
    /// Dirichlet and round-trip bound, scaled by `max(1, |ln u(R)|)`.
    pub dirichlet: f64,
    /// Relative deviation allowed against the Kummer series.
    pub kummer: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            riccati: 1e-4,
            hjb: 1e-4,
            u_prime_integral: 1e-6,
            dirichlet: 1e-5,
            kummer: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub sigmas: Vec<f64>,
    /// Radius at which `σ²φ_σ` is tabulated; also the domain of each solve.
    pub radius: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            sigmas: vec![0.5, 1.0, 2.0, 10.0],
            radius: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KummerSection {
    pub lambda: f64,
    pub radii: Vec<f64>,
}

impl Default for KummerSection {
    fn default() -> Self {
        KummerSection {
            lambda: 1.0,
            radii: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub start_radius: f64,
    pub seed: u64,
    /// Policy multipliers compared against the feedback law.
    pub scales: Vec<f64>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        let d = SimConfig::default();
        MonteCarloSection {
            horizon: d.horizon,
            dt: d.dt,
            paths: d.paths,
            start_radius: d.start_radius,
            seed: d.seed,
            scales: vec![0.0, 0.5, 1.0, 1.5, 2.0],
        }
    }
}

impl MonteCarloSection {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            horizon: self.horizon,
            dt: self.dt,
            paths: self.paths,
            start_radius: self.start_radius,
            seed: self.seed,
        }
    }
}

impl Config {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dimension: self.dimension,
            sigma: self.sigma,
            epsilon: self.solver.epsilon,
            radius: self.solver.radius,
            rel_tol: self.solver.rel_tol,
            abs_tol: self.solver.abs_tol,
            rescale_threshold: self.solver.rescale_threshold,
            grid_points: self.solver.grid_points,
        }
    }

    /// Semantic checks beyond the schema.
    pub fn validate(&self) -> Result<(), Failure> {
        self.solver_config().validate().map_err(Failure::from_core)?;
        if self.solver.series_order < 4 {
            return Err(Failure::validation("solver.series_order must be >= 4"));
        }
        if self.sweep.sigmas.is_empty() {
            return Err(Failure::validation("sweep.sigmas is empty"));
        }
        if self.sweep.sigmas.iter().any(|s| !(*s > 0.0)) || !(self.sweep.radius > 0.0) {
            return Err(Failure::validation("sweep sigmas and radius must be positive"));
        }
        if self.kummer.radii.is_empty() || self.kummer.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Failure::validation("kummer.radii must be a nonempty list of positive radii"));
        }
        Ok(())
    }
}

/// Checks a JSON value against the bundled schema and collects every error.
pub fn check_schema(value: &Value) -> Result<(), Failure> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| {
            let path = e.instance_path().to_string();
            if path.is_empty() {
                e.to_string()
            } else {
                format!("{path}: {e}")
            }
        })
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::validation(format!("config does not match schema: {}", errors.join("; "))))
    }
}

/// Parses a config document. A report written by an earlier run is
/// accepted too: its embedded manifest carries the resolved config.
pub fn parse(text: &str) -> Result<Config, Failure> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| Failure::validation(format!("config is not valid JSON: {e}")))?;
    if let Some(inner) = value.pointer("/manifest/config") {
        value = inner.clone();
    }
    check_schema(&value)?;
    let cfg: Config =
        serde_json::from_value(value).map_err(|e| Failure::validation(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<(Config, Vec<u8>), Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Failure::validation(format!("config {} is not UTF-8", path.display())))?;
    Ok((parse(text)?, bytes))
}

/// Reads a standalone simulation config (the `montecarlo` block on its own).
pub fn load_sim(path: &Path, base: &MonteCarloSection) -> Result<(MonteCarloSection, Vec<u8>), Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::validation(format!("cannot read sim config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::validation(format!("sim config is not valid JSON: {e}")))?;
    check_schema(&serde_json::json!({ "montecarlo": value }))?;
    // Fields missing from the file keep the values of the main config.
    let mut merged = serde_json::to_value(base).expect("serializable");
    if let (Some(dst), Some(src)) = (merged.as_object_mut(), value.as_object()) {
        for (k, v) in src {
            dst.insert(k.clone(), v.clone());
        }
    }
    let sim = serde_json::from_value(merged).map_err(|e| Failure::validation(format!("invalid sim config: {e}")))?;
    Ok((sim, bytes))
}
