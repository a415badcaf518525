//! Short sweeps, rescaling and limit checks.

use std::sync::OnceLock;

use gnlab::asymptotics::*;
use gnlab::discretization::{build_grid, Domain, GridFunction};
use gnlab::groundstate::{solve_ground_state, GNParams, GroundStateData, ShootingConfig};
use gnlab::potential::{compute_lambda, PotentialSpec};
use gnlab::variational::{EnergyBreakdown, FlowConfig, Functional, MinimizerResult};

fn gs1() -> &'static GroundStateData {
    static GS: OnceLock<GroundStateData> = OnceLock::new();
    GS.get_or_init(|| solve_ground_state(&GNParams::new(1, 0.5, 0.0).unwrap(), &ShootingConfig::default()).unwrap())
}

fn short_sweep() -> &'static SweepOutcome {
    static OUT: OnceLock<SweepOutcome> = OnceLock::new();
    OUT.get_or_init(|| {
        let gs = gs1();
        let grid = build_grid(Domain::interval(-5.0, 5.0).unwrap(), 3000).unwrap();
        let f = Functional::new(grid.clone(), gs.params, &PotentialSpec::power(1.0, 2.0)).unwrap();
        let init = GridFunction::from_fn(grid, |x| (-x * x).exp() * (25.0 - x * x));
        let schedule: Vec<f64> = [0.5, 0.9, 0.99, 0.999, 0.9995].iter().map(|m| m * gs.a_star).collect();
        run_sweep(&schedule, &f, gs, &init, &FlowConfig::default()).unwrap()
    })
}

#[test]
fn sweep_trends() {
    let out = short_sweep();
    assert!(out.complete && out.records.len() == 5);
    let r = &out.records;
    assert!(r.windows(2).all(|w| w[1].energy < w[0].energy && w[1].eps < w[0].eps));
    assert!(r.windows(2).all(|w| w[1].a > w[0].a && w[1].gap > 0.0));
    assert!(r.iter().all(|x| x.multiplier_defect < 1e-9));
    // profile error improves along the tail
    assert!(r[3].profile_err_sup < r[1].profile_err_sup);
    let lambda = compute_lambda(&PotentialSpec::power(1.0, 2.0), gs1()).unwrap();
    for x in r {
        assert!(x.energy <= 1.05 * energy_upper_bound(x.gap, gs1(), &lambda));
    }
}

#[test]
fn monotone_quantities_on_short_sweep() {
    // gaps this wide are far from the limits, so only the ordering is checked
    let gs = gs1();
    let lambda = compute_lambda(&PotentialSpec::power(1.0, 2.0), gs).unwrap();
    let report = check_limits(&short_sweep().records, gs, &lambda, 0.0, &LimitTolerances::default()).unwrap();
    assert!(report.energy_monotone && report.eps_monotone && report.bound_pass, "{report:?}");
    assert!(report.mu_eps_sq < 0.0);
}

#[test]
fn csv_has_one_row_per_record() {
    let csv = sweep_csv(&short_sweep().records);
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], "a,gap,energy,eps,mu,errL2,errSup,iters");
    assert_eq!(lines.len(), 2 + 5);
}

#[test]
fn rescaled_limit_profile_has_quadrature_level_error() {
    let gs = gs1();
    let eps = 0.2;
    let grid = build_grid(Domain::interval(-5.0, 5.0).unwrap(), 8000).unwrap();
    // u(x) = ε^{-1/2} w(x/ε) with w the limit profile
    let u = GridFunction::from_fn(grid.clone(), |x| gs.limit_profile(x / eps) / eps.sqrt());
    let result = MinimizerResult {
        breakdown: EnergyBreakdown { kinetic: eps.powi(-2), potential_term: 0.0, nonlinear_term: 0.0, total: 0.0 },
        u,
        energy: 0.0,
        mu: 0.0,
        eps,
        iterations: 0,
        converged: true,
        residual: 0.0,
        max_energy_rise: 0.0,
        final_dt: 0.0,
    };
    let (w, l2, sup) = rescale_minimizer(&result, gs);
    assert!(l2 < 1e-12 && sup < 1e-12);
    assert!((w.mass() - 1.0).abs() < 1e-5, "{}", w.mass());
    assert!((w.value_at(0.3) - gs.limit_profile(0.3)).abs() < 1e-6);
}

#[test]
fn mass_is_preserved_by_rescaling() {
    let out = short_sweep();
    let (w, _, _) = rescale_minimizer(out.last.as_ref().unwrap(), gs1());
    assert!((w.mass() - 1.0).abs() < 1e-12);
}
