//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode, Stdio};
use std::time::Instant;

use serde_json::Value;
use triality_cli::commands::kummer_series;
use triality_core::asymptotics::{asymptotic_report, high_noise_bound_check, vanishing_noise_check};
use triality_core::control::{policy_ladder, simulate_feedback};
use triality_core::pipeline::{solve, solve_on};
use triality_core::series::{build_series, quadratic_kappa, DEFAULT_ORDER};
use triality_core::triality::{dirichlet_constraint, geometry_check, hjb_residual, riccati_residual};
use triality_core::{Potential, SimConfig, SolverConfig};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn benchmark() -> (Potential, SolverConfig) {
    (Potential::monomial(1.0, 2.0).unwrap(), SolverConfig::default())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn asymptote() -> Outcome {
    let (pot, cfg) = benchmark();
    let s = solve(&pot, &cfg, DEFAULT_ORDER).map_err(err)?;
    let phi = *s.fields.phi.last().unwrap();
    let dev = (phi - 1.0).abs();
    Ok((dev < 1e-2, format!("phi(10) = {phi:.17}, |phi - 1| = {dev:.3e} (tol 1e-2)")))
}

fn origin() -> Outcome {
    let (pot, cfg) = benchmark();
    let s = solve(&pot, &cfg.with_radius(0.02), DEFAULT_ORDER).map_err(err)?;
    let f = &s.fields;
    let mut worst = 0.0_f64;
    let mut points = 0;
    for (r, phi) in f.r.iter().zip(&f.phi) {
        if (1e-3..=1e-2).contains(r) {
            worst = worst.max((phi / (r * r) / 0.25 - 1.0).abs());
            points += 1;
        }
    }
    Ok((points > 0 && worst < 1e-3, format!("{points} points, max rel error {worst:.3e} (tol 1e-3)")))
}

fn series_oracle() -> Outcome {
    let mut worst = 0.0_f64;
    for dim in [1.0, 2.0, 3.0, 5.0] {
        for (lambda, sigma) in [(1.0, 1.0), (2.5, 0.8), (0.3, 1.7)] {
            let pot = Potential::monomial(lambda, 2.0).map_err(err)?;
            let s = build_series(&pot, dim, sigma, DEFAULT_ORDER).map_err(err)?;
            // u = Σ a_{4k} r^{4k}; every other coefficient vanishes.
            for (n, a) in s.coeffs.iter().enumerate().take(25) {
                let k = n / 4;
                if n % 4 == 0 {
                    let exact = lambda.powi(k as i32) / (sigma.powi(4 * k as i32) * quadratic_kappa(&dim, k));
                    worst = worst.max((a / exact - 1.0).abs());
                } else {
                    worst = worst.max(a.abs());
                }
            }
        }
    }
    Ok((worst < 1e-12, format!("max rel deviation {worst:.3e} over N in {{1,2,3,5}}, k <= 6 (tol 1e-12)")))
}

fn kummer() -> Outcome {
    let (pot, cfg) = benchmark();
    let radii = [0.5, 1.0, 2.0];
    let s = solve_on(&pot, &cfg.with_radius(2.0), DEFAULT_ORDER, &radii).map_err(err)?;
    let mut worst = 0.0_f64;
    for (i, r) in radii.iter().enumerate() {
        let series = kummer_series(2.0, 1.0, 1.0, *r);
        worst = worst.max((s.solution.log_u(i) - series.ln()).exp_m1().abs());
    }
    Ok((worst < 1e-8, format!("max rel deviation {worst:.3e} at r in {{0.5,1,2}} (tol 1e-8)")))
}

fn barrier() -> Outcome {
    let (pot, cfg) = benchmark();
    let s = solve(&pot, &cfg, DEFAULT_ORDER).map_err(err)?;
    let a = asymptotic_report(&s.fields, &pot, &cfg).map_err(err)?;
    Ok((
        a.barrier_violations == 0 && a.g_monotone,
        format!("{} violations, g monotone = {}", a.barrier_violations, a.g_monotone),
    ))
}

fn residuals() -> Outcome {
    let (pot, cfg) = benchmark();
    let at = |n: usize| -> Result<(f64, f64, f64), String> {
        let c = cfg.with_grid_points(n);
        let s = solve(&pot, &c, DEFAULT_ORDER).map_err(err)?;
        let ric = riccati_residual(&s.fields, &pot, &c).map_err(err)?;
        let (hjb, scale) = hjb_residual(&s.fields, &pot, &c).map_err(err)?;
        Ok((ric, hjb, scale))
    };
    let (r1, h1, _) = at(1000)?;
    let (r2, h2, scale) = at(2000)?;
    let (r4, h4, _) = at(4000)?;
    let ratios = [r1 / r2, r2 / r4, h1 / h2, h2 / h4];
    let floor = r2 < 1e-4 && h2 < 1e-4 * scale.max(1.0);
    let second_order = ratios.iter().all(|q| (3.0..=5.0).contains(q));
    Ok((
        floor && second_order,
        format!(
            "riccati {r2:.3e} (tol 1e-4), hjb {h2:.3e} (tol {:.3e}), doubling ratios {:.2}/{:.2} riccati, {:.2}/{:.2} hjb (want 3..5)",
            1e-4 * scale.max(1.0),
            ratios[0],
            ratios[1],
            ratios[2],
            ratios[3]
        ),
    ))
}

fn geometry() -> Outcome {
    let (pot, cfg) = benchmark();
    let s = solve(&pot, &cfg, DEFAULT_ORDER).map_err(err)?;
    let g = geometry_check(&s.solution, &s.fields, &pot).map_err(err)?;
    Ok((
        g.convexity_failures == 0 && g.lower_bound_failures == 0 && g.concavity_failures == 0,
        format!(
            "{} points: convexity {}, lower bound {}, concavity {} failures; min u''/(bu/N) {:.4}",
            g.points,
            g.convexity_failures,
            g.lower_bound_failures,
            g.concavity_failures,
            g.min_convexity_ratio.unwrap_or(f64::NAN)
        ),
    ))
}

fn dirichlet() -> Outcome {
    let (pot, cfg) = benchmark();
    let s = solve(&pot, &cfg.with_radius(5.0), DEFAULT_ORDER).map_err(err)?;
    let c = dirichlet_constraint(&s.solution, &s.fields);
    Ok((c.gap < 1e-5, format!("gap {:.3e} (tol 1e-5)", c.gap)))
}

fn sigma_limits() -> Outcome {
    let (pot, cfg) = benchmark();
    let mut notes = Vec::new();
    let mut ok = true;
    for sigma in [5.0, 10.0] {
        let c = cfg.with_sigma(sigma);
        let s = solve(&pot, &c, DEFAULT_ORDER).map_err(err)?;
        let hb = high_noise_bound_check(&s.fields, &pot, &c).map_err(err)?;
        ok &= hb.holds;
        notes.push(format!("sigma {sigma}: sup phi {:.3e} <= {:.3e}", hb.sup_phi, hb.bound));
    }
    let rows = vanishing_noise_check(&pot, &cfg, &[1.0, 0.7, 0.5], 5.0, DEFAULT_ORDER).map_err(err)?;
    let scaled: Vec<f64> = rows.iter().map(|r| r.sigma2_phi).collect();
    let toward = rows.windows(2).all(|w| {
        w[1].sigma2_phi > w[0].sigma2_phi && (w[1].sigma2_phi - w[1].target).abs() < (w[0].sigma2_phi - w[0].target).abs()
    });
    ok &= toward && rows.iter().all(|r| r.target == 1.0);
    notes.push(format!("sigma^2 phi(5) at sigma 1, 0.7, 0.5: {scaled:.6?}"));
    Ok((ok, notes.join("; ")))
}

fn montecarlo() -> Outcome {
    let (pot, cfg) = benchmark();
    let sim = SimConfig {
        horizon: 0.5,
        dt: 1e-3,
        paths: 10_000,
        start_radius: 1.0,
        seed: 42,
    };
    let s = solve(&pot, &cfg, DEFAULT_ORDER).map_err(err)?;
    let main = simulate_feedback(&s.fields, &pot, &sim, 1.0).map_err(err)?;
    let coarse = simulate_feedback(&s.fields, &pot, &sim.with_dt(2e-3), 1.0).map_err(err)?;
    let allowance = 3.0 * main.stderr + (main.gap - coarse.gap).abs();
    let ladder = policy_ladder(&s.fields, &pot, &sim, &[0.0, 0.5, 1.0, 1.5, 2.0]).map_err(err)?;
    let losers: Vec<f64> = ladder.iter().filter(|c| !c.optimal_wins()).map(|c| c.scale).collect();
    Ok((
        main.gap <= allowance && losers.is_empty(),
        format!(
            "gap {:.4} vs allowance {allowance:.4}; scales beating scale 1: {losers:?}",
            main.gap
        ),
    ))
}

fn triality(args: &[&str]) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_triality")).args(args).stderr(Stdio::null()).status().map_err(err)?;
    status.code().ok_or_else(|| "killed by signal".to_string())
}

fn normalized_report(dir: &Path) -> Result<Value, String> {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).map_err(err)?).map_err(err)?;
    let m = v["manifest"].as_object_mut().ok_or("report has no manifest")?;
    m.remove("timings");
    m.remove("input_digests");
    Ok(v)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let cfg = tmp.path().join("config.json");
    fs::write(&cfg, r#"{"montecarlo": {"paths": 2000}}"#).map_err(err)?;
    let cfg = cfg.to_str().unwrap();
    let mut mismatches = Vec::new();
    for cmd in ["solve", "sweep-sigma", "benchmark-kummer", "montecarlo"] {
        let dirs: Vec<_> = ["a", "b", "replay"].iter().map(|d| tmp.path().join(format!("{cmd}-{d}"))).collect();
        let mut codes = Vec::new();
        for d in &dirs[..2] {
            codes.push(triality(&[cmd, "--config", cfg, "--out", d.to_str().unwrap()])?);
        }
        let manifest = dirs[0].join("report.json");
        codes.push(triality(&[cmd, "--config", manifest.to_str().unwrap(), "--out", dirs[2].to_str().unwrap()])?);
        if codes.iter().any(|c| *c != codes[0]) {
            mismatches.push(format!("{cmd}: exit codes {codes:?}"));
        }
        let first = normalized_report(&dirs[0])?;
        for d in &dirs[1..] {
            if normalized_report(d)? != first {
                mismatches.push(format!("{cmd}: report.json in {}", d.display()));
            }
            for name in ["solution.csv", "sweep.csv"] {
                let a = dirs[0].join(name);
                if a.exists() && fs::read(&a).map_err(err)? != fs::read(d.join(name)).unwrap_or_default() {
                    mismatches.push(format!("{cmd}: {name}"));
                }
            }
        }
    }
    Ok((
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "4 commands, repeat and manifest replay bit-identical".into()
        } else {
            mismatches.join("; ")
        },
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("benchmark asymptote", asymptote),
        ("origin expansion", origin),
        ("series oracle", series_oracle),
        ("Kummer cross-check", kummer),
        ("barrier dominance", barrier),
        ("residual suite", residuals),
        ("geometric invariants", geometry),
        ("Dirichlet constraint", dirichlet),
        ("sigma limits", sigma_limits),
        ("Monte Carlo martingale", montecarlo),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(out) => out,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
