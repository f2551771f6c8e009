//! The four pipelines behind the CLI subcommands.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};
use triality_core::asymptotics::{asymptotic_report, high_noise_bound_check, vanishing_noise_check, wkb_expansion};
use triality_core::control::{policy_ladder, simulate_feedback};
use triality_core::integrator::u_prime_integral_check;
use triality_core::pipeline::{solve, solve_on};
use triality_core::triality::{
    dirichlet_constraint, geometry_check, hjb_residual, riccati_residual, round_trip, zprime_identity,
};
use triality_core::{Potential, Solve, SolverConfig};

use crate::config::{self, Config};
use crate::failure::{Failure, EXIT_OK};
use crate::output::{gnuplot_script, Artifacts, RunManifest, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    SweepSigma,
    BenchmarkKummer,
    MonteCarlo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SweepSigma => "sweep-sigma",
            Command::BenchmarkKummer => "benchmark-kummer",
            Command::MonteCarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub sigmas: Option<Vec<f64>>,
    pub sim: Option<PathBuf>,
}

/// One invariant check as it appears in the report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub enabled: bool,
    /// False when the hypotheses behind the check do not hold for this
    /// input; such checks are reported but never fail the run.
    pub applicable: bool,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn fails(&self) -> bool {
        self.enabled && self.applicable && !self.passed
    }
}

#[derive(Default)]
struct Body {
    sections: Map<String, Value>,
    checks: Vec<Check>,
    warnings: Vec<String>,
}

impl Body {
    fn section(&mut self, key: &str, value: impl Serialize) {
        self.sections
            .insert(key.to_string(), serde_json::to_value(value).expect("section serializes"));
    }

    /// `value ≤ threshold`.
    fn bound(&mut self, name: &str, enabled: bool, applicable: bool, value: f64, threshold: f64) {
        self.push(name, enabled, applicable, value <= threshold, value, threshold);
    }

    fn push(&mut self, name: &str, enabled: bool, applicable: bool, passed: bool, value: f64, threshold: f64) {
        if !applicable && !passed {
            self.warnings
                .push(format!("{name} does not hold but its hypotheses are unmet for this input"));
        }
        self.checks.push(Check {
            name: name.to_string(),
            enabled,
            applicable,
            passed,
            value,
            threshold,
        });
    }
}

/// Runs a command end to end and returns the process exit code. Artifacts
/// and `report.json` are written even when a check fails.
pub fn run(cmd: Command, opts: &Options) -> i32 {
    let (report, code) = execute(cmd, opts);
    let write = Artifacts::new(&opts.out).and_then(|a| a.write_report(&report));
    if let Err(e) = write {
        eprintln!("triality: {e}");
        return e.code;
    }
    if let Some(err) = report.get("error").filter(|e| !e.is_null()) {
        eprintln!("triality: {}: {}", err["kind"].as_str().unwrap_or("error"), err["message"].as_str().unwrap_or(""));
    }
    code
}

/// Runs a command and returns the report together with the exit code.
pub fn execute(cmd: Command, opts: &Options) -> (Value, i32) {
    let mut manifest = None;
    let result = prepare(cmd, opts).and_then(|m| {
        let m = manifest.insert(m);
        dispatch(cmd, m, opts)
    });
    let (body, artifacts, failure) = match result {
        Ok((body, artifacts)) => {
            let failed: Vec<String> = body.checks.iter().filter(|c| c.fails()).map(|c| c.name.clone()).collect();
            let failure = (!failed.is_empty()).then(|| Failure::invariant(&failed));
            (body, artifacts, failure)
        }
        Err(f) => (Body::default(), Default::default(), Some(f)),
    };
    let code = failure.as_ref().map_or(EXIT_OK, |f| f.code);
    let mut report = Map::new();
    report.insert("command".into(), json!(cmd.name()));
    report.insert("status".into(), json!(if code == EXIT_OK { "ok" } else { "failed" }));
    report.insert("exit_code".into(), json!(code));
    report.insert("error".into(), serde_json::to_value(&failure).expect("serializes"));
    report.insert("manifest".into(), serde_json::to_value(&manifest).expect("serializes"));
    report.insert("checks".into(), serde_json::to_value(&body.checks).expect("serializes"));
    report.insert("warnings".into(), json!(body.warnings));
    report.insert("artifacts".into(), json!(artifacts));
    report.extend(body.sections);
    (Value::Object(report), code)
}

fn prepare(cmd: Command, opts: &Options) -> Result<RunManifest, Failure> {
    let (mut cfg, bytes) = match &opts.config {
        Some(path) => {
            let (cfg, bytes) = config::load(path)?;
            (cfg, Some(bytes))
        }
        None => (Config::default(), None),
    };
    if let Some(sigmas) = &opts.sigmas {
        cfg.sweep.sigmas = sigmas.clone();
    }
    let sim_bytes = match &opts.sim {
        Some(path) => {
            let (sim, bytes) = config::load_sim(path, &cfg.montecarlo)?;
            cfg.montecarlo = sim;
            Some(bytes)
        }
        None => None,
    };
    cfg.validate()?;
    let mut manifest = RunManifest::new(cmd.name(), cfg);
    if let Some(b) = bytes {
        manifest.add_input("config", &b);
    }
    if let Some(b) = sim_bytes {
        manifest.add_input("sim", &b);
    }
    Ok(manifest)
}

type Written = std::collections::BTreeMap<String, String>;

fn dispatch(cmd: Command, manifest: &mut RunManifest, opts: &Options) -> Result<(Body, Written), Failure> {
    let mut artifacts = Artifacts::new(&opts.out)?;
    let body = match cmd {
        Command::Solve => cmd_solve(manifest, &mut artifacts)?,
        Command::SweepSigma => cmd_sweep(manifest, &mut artifacts)?,
        Command::BenchmarkKummer => cmd_kummer(manifest)?,
        Command::MonteCarlo => cmd_montecarlo(manifest)?,
    };
    Ok((body, artifacts.written))
}

fn run_solve(manifest: &mut RunManifest) -> Result<(Solve, SolverConfig), Failure> {
    let cfg = manifest.config.clone();
    let solver = cfg.solver_config();
    let s = manifest.time("solve", || solve(&cfg.potential, &solver, cfg.solver.series_order))?;
    Ok((s, solver))
}

fn cmd_solve(manifest: &mut RunManifest, artifacts: &mut Artifacts) -> Result<Body, Failure> {
    let (s, solver) = run_solve(manifest)?;
    let cfg = manifest.config.clone();
    let body = manifest.time("checks", || solve_checks(&cfg, &solver, &s))?;

    let mut table = Table::new(&["r", "u", "u_prime", "logscale", "phi", "z", "p_mag"]);
    let (sol, f) = (&s.solution, &s.fields);
    for i in 0..sol.len() {
        table.row(&[sol.r[i], sol.u[i], sol.uprime[i], sol.logscale[i], f.phi[i], f.z[i], f.pmag[i]]);
    }
    let script = gnuplot_script(
        manifest,
        "solution.csv",
        &[
            ("r", "phi", "Riccati drift"),
            ("r", "z", "value function"),
            ("r", "p_mag", "control magnitude"),
        ],
    );
    manifest.time("write", || -> Result<(), Failure> {
        artifacts.write("solution.csv", &table.render())?;
        artifacts.write("solution.gp", &script)
    })?;
    Ok(body)
}

fn solve_checks(cfg: &Config, solver: &SolverConfig, s: &Solve) -> Result<Body, Failure> {
    let pot = &cfg.potential;
    let (sol, f) = (&s.solution, &s.fields);
    let on = &cfg.checks;
    let tol = &cfg.tolerances;
    let mut body = Body::default();

    let sc = sol.checks();
    body.push("solution_positive", on.solution, true, sc.positive, 0.0, 0.0);
    body.push("solution_nondecreasing", on.solution, true, sc.nondecreasing, 0.0, 0.0);
    body.push("logscale_monotone", on.solution, true, sc.logscale_monotone, 0.0, 0.0);

    let ric = riccati_residual(f, pot, solver)?;
    let (hjb, z2) = hjb_residual(f, pot, solver)?;
    let zid = zprime_identity(f);
    let zscale = f.zprime.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let upi = u_prime_integral_check(sol, pot)?;
    let constraint = dirichlet_constraint(sol, f);
    let rt = round_trip(sol, f);
    let log_scale = constraint.rhs.abs().max(1.0);
    body.bound("riccati_residual", on.residuals, true, ric, tol.riccati);
    body.bound("hjb_residual", on.residuals, true, hjb, tol.hjb * z2.max(1.0));
    body.bound("zprime_identity", on.residuals, true, zid, 1e-12 * zscale);
    body.bound("u_prime_integral", on.u_prime_integral, true, upi, tol.u_prime_integral);
    body.bound("dirichlet_gap", on.dirichlet, true, constraint.gap, tol.dirichlet * log_scale);
    body.bound("round_trip", on.round_trip, true, rt, tol.dirichlet * log_scale);

    let asym = asymptotic_report(f, pot, solver)?;
    let b: Vec<f64> = f.r.iter().map(|r| pot.eval(*r)).collect::<Result<_, _>>()?;
    let positive = b[1..].iter().all(|v| *v > 0.0);
    let nondecreasing = b.windows(2).all(|w| w[1] >= w[0]);
    let barrier_hyp = b[0] == 0.0 && asym.g_monotone && !asym.degenerate && !s.hypothesis_unmet;
    let geom_hyp = positive && nondecreasing && !s.hypothesis_unmet;
    let geo = geometry_check(sol, f, pot)?;
    body.push(
        "barrier_dominance",
        on.barrier,
        barrier_hyp,
        asym.barrier_violations == 0,
        asym.barrier_violations as f64,
        0.0,
    );
    body.push("g_monotone", on.barrier, barrier_hyp, asym.g_monotone, 0.0, 0.0);
    body.push("u_convex", on.geometry, geom_hyp, geo.convexity_failures == 0, geo.convexity_failures as f64, 0.0);
    body.push(
        "u_lower_bound",
        on.geometry,
        geom_hyp,
        geo.lower_bound_failures == 0,
        geo.lower_bound_failures as f64,
        0.0,
    );
    body.push("z_concave", on.geometry, geom_hyp, geo.concavity_failures == 0, geo.concavity_failures as f64, 0.0);
    body.push(
        "phi_increasing",
        on.geometry,
        barrier_hyp,
        geo.monotonicity_failures == 0,
        geo.monotonicity_failures as f64,
        0.0,
    );
    if s.hypothesis_unmet {
        body.warnings.push(
            "cost grows slower than r^2 at the origin: existence and uniqueness are not certified; \
             barrier and geometry checks demoted to warnings"
                .into(),
        );
    }

    let last = sol.len() - 1;
    let wkb = if positive {
        let w = wkb_expansion(pot, solver.dimension, &[0.0, solver.radius])?;
        let s2 = solver.sigma * solver.sigma;
        let log_u = sol.log_u(last);
        Some(json!({
            "s": w.s[1],
            "s1prime": w.s1prime[1],
            "log_u": log_u,
            "remainder": log_u - w.s[1] / s2,
        }))
    } else {
        body.warnings.push("cost vanishes inside the domain: WKB block omitted".into());
        None
    };

    body.section(
        "series",
        json!({
            "order": s.series.order,
            "trunc_radius": s.series.trunc_radius,
            "seed_mode": s.series.seed_mode,
            "extended_mode": s.series.extended_mode,
            "phi_origin": s.series.phi_origin(),
            "seed_truncation_error": s.series.truncation_error(solver.epsilon),
        }),
    );
    body.section("seed_mode", s.series.seed_mode);
    body.section("hypothesis_unmet", s.hypothesis_unmet);
    body.section("solver", json!({"stats": sol.stats, "log_u_end": sol.log_u(last), "phi_end": f.phi[last]}));
    body.section(
        "residuals",
        json!({
            "riccati": ric,
            "hjb": hjb,
            "hjb_scale": z2,
            "zprime_identity": zid,
            "u_prime_integral": upi,
            "round_trip": rt,
        }),
    );
    body.section("constraint_gap", constraint);
    body.section("geometry", geo);
    body.section(
        "asymptotics",
        json!({
            "asymptote": asym.asymptote,
            "tail_error": asym.tail_error,
            "barrier_violations": asym.barrier_violations,
            "g_monotone": asym.g_monotone,
            "degenerate": asym.degenerate,
            "g_end": asym.g[last],
            "wkb": wkb,
        }),
    );
    body.section(
        "discount",
        json!({"rho": triality_core::triality::DISCOUNT, "note": "only the undiscounted problem is solved"}),
    );
    Ok(body)
}

fn cmd_sweep(manifest: &mut RunManifest, artifacts: &mut Artifacts) -> Result<Body, Failure> {
    let cfg = manifest.config.clone();
    let base = cfg.solver_config();
    let pot = &cfg.potential;
    let r = cfg.sweep.radius;
    let order = cfg.solver.series_order;
    let rows = manifest.time("vanishing_noise", || vanishing_noise_check(pot, &base, &cfg.sweep.sigmas, r, order))?;

    let mut body = Body::default();
    let mut bounds = Vec::new();
    let mut wkb = Vec::new();
    manifest.time("high_noise", || -> Result<(), Failure> {
        let w = wkb_expansion(pot, base.dimension, &[0.0, r]).ok();
        for &sigma in &cfg.sweep.sigmas {
            let solver = base.with_sigma(sigma).with_radius(r);
            let s = solve(pot, &solver, order)?;
            let hb = high_noise_bound_check(&s.fields, pot, &solver)?;
            bounds.push(json!({"sigma": sigma, "sup_phi": hb.sup_phi, "bound": hb.bound, "holds": hb.holds}));
            body.bound(&format!("high_noise_bound[sigma={sigma}]"), cfg.checks.high_noise_bound, true, hb.sup_phi, hb.bound * (1.0 + 1e-9));
            if let Some(w) = &w {
                let s2 = sigma * sigma;
                let log_u = s.solution.log_u(s.solution.len() - 1);
                wkb.push(json!({"sigma": sigma, "relative_remainder": s2 * (log_u - w.s[1] / s2) / w.s[1]}));
            }
        }
        Ok(())
    })?;

    // Approach to the vanishing-noise limit along decreasing σ.
    let mut ordered = rows.clone();
    ordered.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
    let errs: Vec<f64> = ordered.iter().map(|row| (row.sigma2_phi - row.target).abs()).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    body.push("noise_monotone", cfg.checks.noise_monotone, true, monotone, errs.last().copied().unwrap_or(0.0), 0.0);

    let mut table = Table::new(&["sigma", "r", "phi", "sigma2_phi", "target"]);
    for row in &rows {
        table.row(&[row.sigma, row.r, row.phi, row.sigma2_phi, row.target]);
    }
    let script = gnuplot_script(manifest, "sweep.csv", &[("sigma", "sigma2_phi", "scaled drift against noise level")]);
    manifest.time("write", || -> Result<(), Failure> {
        artifacts.write("sweep.csv", &table.render())?;
        artifacts.write("sweep.gp", &script)
    })?;
    body.section("sweep", json!({"rows": rows, "high_noise": bounds, "wkb": wkb, "monotone_approach": monotone}));
    Ok(body)
}

/// `Σ_k λ^k r^{4k} / (σ^{4k} κ_k(N))`, summed until terms fall below 1e-16
/// of the running sum.
pub fn kummer_series(dimension: f64, sigma: f64, lambda: f64, r: f64) -> f64 {
    let x = lambda * r.powi(4) / sigma.powi(4);
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..100_000 {
        // κ_k / κ_{k−1} = (4k)(4k + N − 2)
        let four_k = 4.0 * k as f64;
        term *= x / (four_k * (four_k + dimension - 2.0));
        sum += term;
        if term < 1e-16 * sum {
            break;
        }
    }
    sum
}

fn cmd_kummer(manifest: &mut RunManifest) -> Result<Body, Failure> {
    let cfg = manifest.config.clone();
    let mut radii = cfg.kummer.radii.clone();
    radii.sort_by(f64::total_cmp);
    let pot = Potential::monomial(cfg.kummer.lambda, 2.0)?;
    let solver = cfg.solver_config().with_radius(*radii.last().expect("validated nonempty"));
    let s = manifest.time("solve", || solve_on(&pot, &solver, cfg.solver.series_order, &radii))?;
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for (i, &r) in radii.iter().enumerate() {
        let series = kummer_series(solver.dimension, solver.sigma, cfg.kummer.lambda, r);
        let dev = (s.solution.log_u(i) - series.ln()).exp_m1().abs();
        worst = worst.max(dev);
        rows.push(json!({"r": r, "log_u_integrated": s.solution.log_u(i), "u_series": series, "relative_deviation": dev}));
    }
    let mut body = Body::default();
    body.bound("kummer_deviation", cfg.checks.kummer, true, worst, cfg.tolerances.kummer);
    body.section(
        "kummer",
        json!({
            "dimension": solver.dimension,
            "sigma": solver.sigma,
            "lambda": cfg.kummer.lambda,
            "max_relative_deviation": worst,
            "rows": rows,
        }),
    );
    Ok(body)
}

fn cmd_montecarlo(manifest: &mut RunManifest) -> Result<Body, Failure> {
    let (s, _) = run_solve(manifest)?;
    let cfg = manifest.config.clone();
    let pot = &cfg.potential;
    let sim = cfg.montecarlo.sim();
    let f = &s.fields;
    let main = manifest.time("simulate", || simulate_feedback(f, pot, &sim, 1.0))?;
    let coarse = manifest.time("simulate_coarse", || simulate_feedback(f, pot, &sim.with_dt(2.0 * sim.dt), 1.0))?;
    let idle = manifest.time("simulate_uncontrolled", || simulate_feedback(f, pot, &sim, 0.0))?;
    let ladder = manifest.time("policy_ladder", || policy_ladder(f, pot, &sim, &cfg.montecarlo.scales))?;

    let bias = (main.gap - coarse.gap).abs();
    let mut body = Body::default();
    let on = &cfg.checks;
    body.bound("martingale_gap", on.martingale, true, main.gap, 3.0 * main.stderr + bias);
    body.push(
        "submartingale_uncontrolled",
        on.submartingale,
        true,
        idle.mean >= idle.z_start - 3.0 * idle.stderr,
        idle.signed_gap,
        -3.0 * idle.stderr,
    );
    for c in &ladder {
        let envelope = 3.0 * c.paired_stderr;
        body.push(
            &format!("policy_ladder[scale={}]", c.scale),
            on.policy_ladder,
            true,
            c.optimal_wins(),
            c.optimal_mean - c.scaled_mean,
            envelope,
        );
    }
    body.section(
        "montecarlo",
        json!({
            "gap": main.gap,
            "signed_gap": main.signed_gap,
            "stderr": main.stderr,
            "exit_fraction": main.exit_fraction,
            "dt": main.dt,
            "paths": main.paths,
            "seed": main.seed,
            "horizon": sim.horizon,
            "start_radius": sim.start_radius,
            "z_start": main.z_start,
            "mean": main.mean,
            "bias_allowance": bias,
            "coarse": coarse,
            "uncontrolled": idle,
            "ladder": ladder,
            "note": "finite-horizon martingale identity; the infinite-horizon undiscounted cost is not simulated",
        }),
    );
    Ok(body)
}
