//! Quadratic benchmark against frozen reference values.
//!
//! For `b = r²`, `N = 2`, `σ = 1` the regular solution is
//! `u = exp(r²/2) · ₁F₁(1/2; 1; −r²)`; the constants below were evaluated
//! with 30-digit arithmetic.

#![allow(clippy::excessive_precision)] // reference digits kept as printed

use approx::assert_relative_eq;
use triality_core::series::{build_series, quadratic_kappa};
use triality_core::{integrator, solve, Potential, SolverConfig};

const REFERENCE: [(f64, f64, f64); 5] = [
    (0.5, 1.003910066353354485, 0.06237824672752428),
    (1.0, 1.0634833707413235, 0.24249961258080195),
    (2.0, 2.2795853023360673, 0.69777465796400798),
    (5.0, 30596.335155785154, 0.95912629707621818),
    (10.0, 2.9325537838493363e20, 0.98994896737849775),
];

fn quad() -> Potential {
    Potential::monomial(1.0, 2.0).unwrap()
}

#[test]
fn integrated_u_and_phi_match_reference() {
    let cfg = SolverConfig::default();
    let radii: Vec<f64> = REFERENCE.iter().map(|r| r.0).collect();
    let s = triality_core::pipeline::solve_on(&quad(), &cfg, 24, &radii).unwrap();
    for (i, (r, u, phi)) in REFERENCE.iter().enumerate() {
        // Relative error in u is the absolute error in ln u.
        assert!((s.solution.log_u(i) - u.ln()).abs() < 1e-9 * (1.0 + u.ln()));
        assert_relative_eq!(s.fields.phi[i], *phi, max_relative = 1e-8);
        assert_eq!(s.fields.r[i], *r);
    }
}

#[test]
fn kappa_series_matches_integrator() {
    // Sum Σ r^{4k}/κ_k(N) until the terms drop below 1e-16.
    for n in [2.0, 3.0] {
        let kummer = |r: f64| {
            let mut sum = 1.0;
            for k in 1.. {
                let term = r.powi(4 * k) / quadratic_kappa(&n, k as usize);
                sum += term;
                if term < 1e-16 * sum {
                    break;
                }
            }
            sum
        };
        let cfg = SolverConfig {
            dimension: n,
            ..SolverConfig::default()
        };
        let radii = [0.5, 1.0, 2.0];
        let s = triality_core::pipeline::solve_on(&quad(), &cfg, 24, &radii).unwrap();
        for (i, r) in radii.iter().enumerate() {
            let u = s.solution.u[i] * s.solution.logscale[i].exp();
            assert_relative_eq!(u, kummer(*r), max_relative = 1e-8);
        }
    }
}

#[test]
fn leading_wkb_order_of_log_u() {
    // ln u(R) = R²/2 + S₁(R) + O(1); with S₁ = −ln r the remainder is
    // bounded and small compared with R²/2.
    let s = solve(&quad(), &SolverConfig::default(), 24).unwrap();
    let last = s.solution.len() - 1;
    let lu = s.solution.log_u(last);
    let rem = lu - 50.0 + 10f64.ln();
    assert!(rem.abs() < 1.0, "{rem}");
    assert_relative_eq!(s.solution.log_derivative(last), 10.0 * 0.98994896737849775, max_relative = 1e-9);
}

#[test]
fn tolerance_self_convergence() {
    let base = SolverConfig::default();
    let phi_end = |rel: f64| {
        let cfg = SolverConfig { rel_tol: rel, ..base };
        *solve(&quad(), &cfg, 24).unwrap().fields.phi.last().unwrap()
    };
    let (coarse, fine) = (phi_end(1e-7), phi_end(5e-8));
    assert!((coarse - fine).abs() < 1e-7);
}

#[test]
fn fixed_step_rk4_oracle() {
    // Independent classical RK4 on a uniform fine grid, started from the
    // exact regular branch u(ε) = 1 + ε⁴/16.
    let eps: f64 = 1e-3;
    let rhs = |r: f64, y: [f64; 2]| [y[1], -y[1] / r + r * r * y[0]];
    let mut y = [1.0 + eps.powi(4) / 16.0 + eps.powi(8) / 1024.0, eps.powi(3) / 4.0 + eps.powi(7) / 128.0];
    let (mut r, end, steps) = (eps, 4.0, 200_000);
    let h = (end - eps) / steps as f64;
    for _ in 0..steps {
        let k1 = rhs(r, y);
        let k2 = rhs(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
    }
    let cfg = SolverConfig::default().with_radius(4.0);
    let series = build_series(&quad(), 2.0, 1.0, 24).unwrap();
    let sol = integrator::integrate_on(&quad(), &cfg, &series, &[4.0]).unwrap();
    assert_relative_eq!(sol.log_u(0), y[0].ln(), max_relative = 1e-9);
    assert_relative_eq!(sol.log_derivative(0), y[1] / y[0], max_relative = 1e-9);
}

#[test]
fn u_prime_integral_identity() {
    let cfg = SolverConfig::default().with_radius(4.0);
    let s = solve(&quad(), &cfg, 24).unwrap();
    assert!(integrator::u_prime_integral_check(&s.solution, &quad()).unwrap() < 1e-6);
    // Refinement from a coarse grid.
    let res = |n| {
        let s = solve(&quad(), &cfg.with_grid_points(n), 24).unwrap();
        integrator::u_prime_integral_check(&s.solution, &quad()).unwrap()
    };
    let (a, b) = (res(50), res(100));
    assert!(a > b && a / b > 8.0, "{a} {b}");
}

#[test]
fn tabulated_matches_monomial() {
    let pts: Vec<[f64; 2]> = (0..=400).map(|i| {
        let r = 0.0125 * i as f64;
        [r, r * r]
    }).collect();
    let table = Potential::tabulated(&pts).unwrap();
    let cfg = SolverConfig::default().with_radius(5.0).with_grid_points(500);
    let t = solve(&table, &cfg, 24).unwrap();
    let m = solve(&quad(), &cfg, 24).unwrap();
    assert_eq!(t.series.seed_mode, triality_core::SeedMode::LocalQuadratic);
    let worst = (1..t.fields.phi.len())
        .map(|i| (t.fields.phi[i] - m.fields.phi[i]).abs())
        .fold(0.0, f64::max);
    // Monotone cubic slopes are first-order accurate at the flat end of
    // the table, which dominates the absolute gap near the origin.
    assert!(worst < 1e-5, "{worst}");
    let far = (100..t.fields.phi.len())
        .map(|i| ((t.fields.phi[i] - m.fields.phi[i])/m.fields.phi[i]).abs())
        .fold(0.0, f64::max);
    assert!(far < 1e-7, "{far}");
}
