//! Ground-state solver against values frozen from `tests/oracle/groundstate_oracle.py`
//! (scipy DOP853, rtol 1e-12, Bessel-K tail).

#![allow(clippy::excessive_precision)]

use gnlab::discretization::{Domain, Grid};
use gnlab::groundstate::{
    linearized_probe, probe_with, solve_ground_state, verify_identities, GNParams, GroundStateData, ProbeConfig,
    ShootingConfig,
};
use proptest::prelude::*;

struct Oracle {
    dim: usize,
    b: f64,
    amplitude: f64,
    l2_sq: f64,
    grad_sq: f64,
    nonlinear: f64,
    moment2: f64,
    a_star: f64,
}

const ORACLES: [Oracle; 3] = [
    Oracle {
        dim: 1,
        b: 0.5,
        amplitude: 1.009979254996072,
        l2_sq: 1.294543140274543,
        grad_sq: 0.8630287601797464,
        nonlinear: 2.157571900460037,
        moment2: 0.7131272309578315,
        a_star: 1.472905187118891,
    },
    Oracle {
        dim: 2,
        b: 0.5,
        amplitude: 2.244297852484416,
        l2_sq: 7.340271662861219,
        grad_sq: 9.787028883814774,
        nonlinear: 17.12730054667571,
        moment2: 7.534647131511806,
        a_star: 4.459478763014152,
    },
    Oracle {
        dim: 3,
        b: 1.0,
        amplitude: 9.138668532906539,
        l2_sq: 40.89038123957998,
        grad_sq: 122.6711437187407,
        nonlinear: 163.5615249583192,
        moment2: 50.00070630407941,
        a_star: 3.445141413810054,
    },
];

fn solve(dim: usize, b: f64) -> GroundStateData {
    solve_ground_state(&GNParams::new(dim, b, 0.0).unwrap(), &ShootingConfig::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn constants_match_oracle() {
    for o in &ORACLES {
        let gs = solve(o.dim, o.b);
        let tag = format!("N={} b={}", o.dim, o.b);
        assert!(rel(gs.profile.amplitude, o.amplitude) < 1e-9, "{tag} amplitude {}", gs.profile.amplitude);
        assert!(rel(gs.l2_sq, o.l2_sq) < 1e-9, "{tag} l2 {}", gs.l2_sq);
        assert!(rel(gs.grad_sq, o.grad_sq) < 1e-9, "{tag} grad {}", gs.grad_sq);
        assert!(rel(gs.nonlinear_int, o.nonlinear) < 1e-9, "{tag} nl {}", gs.nonlinear_int);
        assert!(rel(gs.moment(2.0).unwrap(), o.moment2) < 1e-9, "{tag} moment");
        assert!(rel(gs.a_star, o.a_star) < 1e-9, "{tag} a* {}", gs.a_star);
    }
}

#[test]
fn identities_hold_for_every_case() {
    for o in &ORACLES {
        let gs = solve(o.dim, o.b);
        let report = verify_identities(&gs, 1e-6);
        assert!(report.pass, "{report:?}");
        assert!((gs.a_star - gs.l2_sq.powf(gs.params.beta_sq())).abs() < 1e-15 * gs.a_star);
    }
    // N=3, b=1: grad/l2 = N/(2-b) = 3
    let gs = solve(3, 1.0);
    assert!((gs.grad_sq / gs.l2_sq - 3.0).abs() < 1e-8);
}

#[test]
fn scaled_profile_breaks_identities() {
    let gs = solve(1, 0.5);
    let mut profile = gs.profile.clone();
    profile.values.iter_mut().for_each(|v| *v *= 1.01);
    profile.derivs.iter_mut().for_each(|v| *v *= 1.01);
    profile.amplitude *= 1.01;
    profile.tail.amplitude *= 1.01;
    let scaled = GroundStateData::from_profile(gs.params, profile, gs.shooting_residual, &[]).unwrap();
    let report = verify_identities(&scaled, 1e-6);
    assert!(!report.pass);
    assert!(report.kinetic_nonlinear > 1e-2, "{report:?}");
}

#[test]
fn identity_residuals_shrink_under_refinement() {
    let params = GNParams::new(2, 0.5, 0.0).unwrap();
    let err = |steps: usize| {
        let gs = solve_ground_state(&params, &ShootingConfig { steps, ..Default::default() }).unwrap();
        let r = verify_identities(&gs, 1.0);
        (r.kinetic_mass.max(r.kinetic_nonlinear), rel(gs.a_star, ORACLES[1].a_star))
    };
    let (e1, a1) = err(512);
    let (e2, a2) = err(1024);
    let (e3, a3) = err(2048);
    // fourth-order scheme: ratios near 16, require at least 8
    assert!(e1 / e2 > 8.0 && e2 / e3 > 8.0, "{e1} {e2} {e3}");
    assert!(a1 / a2 > 8.0 && a2 / a3 > 8.0, "{a1} {a2} {a3}");
}

#[test]
fn moments_are_insensitive_to_truncation_radius() {
    let params = GNParams::new(1, 0.5, 0.0).unwrap();
    let short =
        solve_ground_state(&params, &ShootingConfig { r_max: 20.0, steps: 10923, ..Default::default() }).unwrap();
    let long =
        solve_ground_state(&params, &ShootingConfig { r_max: 40.0, steps: 21846, ..Default::default() }).unwrap();
    let (m20, m40) = (short.moment(2.0).unwrap(), long.moment(2.0).unwrap());
    assert!((m20 - m40).abs() < 1e-9 * m40, "{m20} {m40}");
    assert_eq!(long.moment(0.0).unwrap(), long.l2_sq);
}

#[test]
fn moment_reports_unresolved_tail() {
    let params = GNParams::new(1, 0.5, 0.0).unwrap();
    let gs = solve_ground_state(
        &params,
        &ShootingConfig { r_max: 8.0, steps: 4096, moment_exponents: vec![], ..Default::default() },
    )
    .unwrap();
    assert!(matches!(gs.moment(4.0), Err(gnlab::Error::TailUnresolved { .. })));
    assert!(gs.moment_with_tol(4.0, 1e-2).is_ok());
}

#[test]
fn profile_is_positive_and_decreasing() {
    for o in &ORACLES {
        let gs = solve(o.dim, o.b);
        let p = &gs.profile;
        assert!(p.values.iter().all(|&v| v > 0.0));
        assert!(p.derivs.iter().all(|&d| d < 0.0));
        // |Q(r)| <= C e^{-r} in the tail
        let c = gs.value(10.0) * 10f64.exp();
        for r in [12.0, 16.0, 20.0, 25.0] {
            assert!(gs.value(r) <= 1.01 * c * (-r).exp());
        }
    }
}

#[test]
fn grid_quadrature_of_q_squared_matches_l2() {
    for o in &ORACLES {
        let gs = solve(o.dim, o.b);
        let grid = Grid::new(Domain::ball(o.dim, 25.0).unwrap(), 8192).unwrap();
        let q2: Vec<f64> = grid.nodes().iter().map(|&r| gs.value(r).powi(2)).collect();
        let got = grid.integrate(&q2, 0.0).unwrap();
        assert!(rel(got, o.l2_sq) < 1e-5, "N={} {got}", o.dim);
        let nl: Vec<f64> = grid.nodes().iter().map(|&r| gs.value(r).powf(gs.params.nonlinear_power())).collect();
        let got = grid.integrate(&nl, -o.b).unwrap();
        assert!(rel(got, o.nonlinear) < 1e-3, "N={} {got}", o.dim);
    }
}

#[test]
fn linearized_identity_and_negative_eigenvalue() {
    let gs = solve(3, 1.0);
    let probe = linearized_probe(&gs, &ProbeConfig::default()).unwrap();
    assert!(probe.identity_residual < 1e-4, "{probe:?}");
    assert!(probe.smallest_eigenvalue < 0.0);
    for (n, b) in [(1, 0.5), (2, 0.5)] {
        let probe = linearized_probe(&solve(n, b), &ProbeConfig { resolution: 4096, ..Default::default() }).unwrap();
        assert!(probe.smallest_eigenvalue < 0.0, "N={n} {probe:?}");
    }
}

#[test]
fn linearized_identity_fails_for_doubled_profile() {
    let gs = solve(3, 1.0);
    let probe = probe_with(
        &gs,
        |r| {
            let (q, dq) = gs.eval(r);
            (2.0 * q, 2.0 * dq)
        },
        &ProbeConfig::default(),
    )
    .unwrap();
    assert!(probe.identity_residual > 0.1, "{probe:?}");
}

#[test]
fn json_round_trip_preserves_constants() {
    let gs = solve(2, 0.5);
    let back = GroundStateData::from_json(&gs.to_json().unwrap()).unwrap();
    assert_eq!(back, gs);
    let mut doc: serde_json::Value = serde_json::from_str(&gs.to_json().unwrap()).unwrap();
    doc["format_version"] = 99.into();
    assert!(GroundStateData::from_json(&doc.to_string()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identities_hold_across_parameters(dim in 1usize..=3, frac in 0.1f64..0.8) {
        let b = frac * (dim as f64).min(2.0);
        let params = GNParams::new(dim, b, 0.0).unwrap();
        let gs = solve_ground_state(&params, &ShootingConfig { steps: 4096, ..Default::default() }).unwrap();
        let report = verify_identities(&gs, 1e-6);
        prop_assert!(report.pass, "N={} b={} {:?}", dim, b, report);
        prop_assert!(gs.profile.values.iter().all(|&v| v > 0.0));
    }
}
