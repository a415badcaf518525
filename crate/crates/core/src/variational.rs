//! Energy `E_a`, GN quotient, Euler–Lagrange defect, trial functions `Φ_τ`
//! and the normalized gradient flow.
//!
//! Every discrete quantity uses the same finite-volume weights, so at a
//! discrete stationary point the multiplier identity
//! `μ = e - aβ²/(1+β²) ∫|x|^{-b}|u|^{2+2β²}` holds exactly.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{normalize_mass, Domain, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::groundstate::{sphere_area, GNParams, GroundStateData};
use crate::potential::PotentialSpec;

/// Tolerance on `|‖u‖² - 1|` accepted by [`evaluate_energy`].
pub const MASS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential_term: f64,
    /// `a/(1+β²) ∫|x|^{-b}|u|^{2+2β²}`
    pub nonlinear_term: f64,
    pub total: f64,
}

/// Potential samples and singular weights of one grid, reused across
/// evaluations.
#[derive(Debug, Clone)]
pub struct Functional {
    grid: Arc<Grid>,
    params: GNParams,
    potential: Vec<f64>,
    singular: Vec<f64>,
}

impl Functional {
    pub fn new(grid: Arc<Grid>, params: GNParams, spec: &PotentialSpec) -> Result<Self> {
        if grid.dim() != params.dim() {
            return Err(Error::InvalidParams(format!(
                "grid dimension {} does not match N = {}",
                grid.dim(),
                params.dim()
            )));
        }
        let singular = grid.node_weights(-params.b())?;
        let potential = spec.sample(&grid);
        Ok(Self { grid, params, potential, singular })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> GNParams {
        self.params
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Ok(Self { params: self.params.with_a(a)?, ..self.clone() })
    }

    /// `∫|x|^{-b}|u|^{2+2β²}`
    pub fn weighted_nonlinear(&self, u: &[f64]) -> f64 {
        let q = self.params.nonlinear_power();
        self.singular.iter().zip(u).map(|(s, v)| s * v.abs().powf(q)).sum()
    }

    /// Energy without the mass check.
    pub fn energy(&self, u: &[f64]) -> EnergyBreakdown {
        let kinetic = self.grid.dirichlet_form(u);
        let potential_term: f64 =
            self.grid.mass_weights().iter().zip(&self.potential).zip(u).map(|((m, v), x)| m * v * x * x).sum();
        let nonlinear_term = self.params.a() / (1.0 + self.params.beta_sq()) * self.weighted_nonlinear(u);
        EnergyBreakdown { kinetic, potential_term, nonlinear_term, total: kinetic + potential_term - nonlinear_term }
    }

    /// `-Δu + Vu - a|x|^{-b}|u|^{2β²}u` at every node (zero on Dirichlet rows).
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let ku = self.grid.stiffness_apply(u);
        let a = self.params.a();
        let q = self.params.nonlinear_power();
        (0..u.len())
            .map(|i| {
                if self.grid.is_dirichlet(i) {
                    return 0.0;
                }
                let m = self.grid.mass_weights()[i];
                let nl = a * self.singular[i] / m * u[i].abs().powf(q - 2.0) * u[i];
                ku[i] / m + self.potential[i] * u[i] - nl
            })
            .collect()
    }

    /// `(kinetic + potential - a∫|x|^{-b}|u|^{2+2β²}) / ‖u‖²`
    pub fn multiplier(&self, u: &[f64]) -> f64 {
        let e = self.energy(u);
        let mass: f64 = self.grid.mass_weights().iter().zip(u).map(|(m, v)| m * v * v).sum();
        (e.kinetic + e.potential_term - self.params.a() * self.weighted_nonlinear(u)) / mass
    }

    /// Sup norm of the Euler–Lagrange defect over interior nodes.
    pub fn el_residual(&self, u: &[f64], mu: f64) -> f64 {
        self.gradient(u).iter().zip(u).map(|(g, v)| (g - mu * v).abs()).fold(0.0, f64::max)
    }

    /// The `μ` minimizing the weighted L² norm of the defect.
    pub fn residual_minimizing_multiplier(&self, u: &[f64]) -> f64 {
        let g = self.gradient(u);
        let m = self.grid.mass_weights();
        let num: f64 = (0..u.len()).map(|i| m[i] * g[i] * u[i]).sum();
        let den: f64 = (0..u.len()).map(|i| m[i] * u[i] * u[i]).sum();
        num / den
    }

    /// `∫|∇u|²(∫u²)^{β²} / ∫|x|^{-b}|u|^{2+2β²}`.
    pub fn gn_quotient(&self, u: &[f64]) -> Result<f64> {
        let nl = self.weighted_nonlinear(u);
        if !(nl > 0.0) {
            return Err(Error::ZeroFunction);
        }
        let mass: f64 = self.grid.mass_weights().iter().zip(u).map(|(m, v)| m * v * v).sum();
        Ok(self.grid.dirichlet_form(u) * mass.powf(self.params.beta_sq()) / nl)
    }
}

fn check_mass(u: &GridFunction) -> Result<()> {
    let mass = u.mass();
    if !((mass - 1.0).abs() <= MASS_TOL) {
        return Err(Error::MassViolation { mass, tol: MASS_TOL });
    }
    Ok(())
}

pub fn evaluate_energy(u: &GridFunction, params: GNParams, spec: &PotentialSpec) -> Result<EnergyBreakdown> {
    check_mass(u)?;
    Ok(Functional::new(u.grid().clone(), params, spec)?.energy(u.values()))
}

/// Υ(u); the interaction strength in `params` is ignored.
pub fn gn_quotient(u: &GridFunction, params: GNParams) -> Result<f64> {
    Functional::new(u.grid().clone(), params, &PotentialSpec::power(0.0, 1.0))?.gn_quotient(u.values())
}

pub fn euler_lagrange_residual(u: &GridFunction, mu: f64, params: GNParams, spec: &PotentialSpec) -> Result<f64> {
    Ok(Functional::new(u.grid().clone(), params, spec)?.el_residual(u.values(), mu))
}

/// `μ = e - aβ²/(1+β²) ∫|x|^{-b}|u|^{2+2β²}`.
pub fn lagrange_multiplier(u: &GridFunction, energy: f64, params: GNParams) -> Result<f64> {
    check_mass(u)?;
    let bs = params.beta_sq();
    let nl = u
        .grid()
        .integrate(&u.values().iter().map(|v| v.abs().powf(2.0 + 2.0 * bs)).collect::<Vec<_>>(), -params.b())?;
    Ok(energy - params.a() * bs / (1.0 + bs) * nl)
}

/// Smooth cutoff: 1 on `[0, R]`, `exp(1 - 1/(1 - t²))` with `t = (r - R)/R`
/// on `(R, 2R)`, 0 beyond.
pub fn cutoff(r: f64, radius: f64) -> f64 {
    let r = r.abs();
    if r <= radius {
        1.0
    } else if r >= 2.0 * radius {
        0.0
    } else {
        let t = (r - radius) / radius;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Debug, Clone)]
pub struct TrialFunction {
    pub tau: f64,
    pub cutoff_radius: f64,
    /// Continuum normalization: `A_τ^{-2} = τ^N/‖Q‖² ∫ φ² Q(τx)² dx`.
    pub a_tau: f64,
    /// `Φ_τ` on the grid, scaled to unit discrete mass.
    pub values: GridFunction,
}

/// `Φ_τ = A_τ τ^{N/2}/‖Q‖₂ · φ(x) Q(τx)`; `cutoff_radius` defaults to a
/// quarter of the distance from the origin to the boundary.
pub fn make_trial_function(
    gs: &GroundStateData,
    grid: &Arc<Grid>,
    tau: f64,
    cutoff_radius: Option<f64>,
) -> Result<TrialFunction> {
    let domain = grid.domain();
    if grid.dim() != gs.params.dim() {
        return Err(Error::InvalidParams("grid and ground state dimensions differ".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParams(format!("tau = {tau} must be positive")));
    }
    let available = domain.dist_to_boundary();
    let radius = cutoff_radius.unwrap_or(0.25 * available);
    if !(radius > 0.0) || 2.0 * radius > available {
        return Err(Error::DomainTooSmall { needed: 2.0 * radius, available });
    }
    let a_tau = continuum_normalization(gs, tau, radius);
    let n = gs.params.dim() as f64;
    let scale = a_tau * tau.powf(0.5 * n) / gs.l2_norm();
    let raw = GridFunction::from_fn(grid.clone(), |x| scale * cutoff(x, radius) * gs.value(tau * x.abs()));
    Ok(TrialFunction { tau, cutoff_radius: radius, a_tau, values: normalize_mass(&raw)? })
}

/// In the variable `ρ = τ|x|` the lost mass is `∫ (1 - φ(ρ/τ)²) Q(ρ)² dρ`,
/// supported where `Q` is exponentially small.
fn continuum_normalization(gs: &GroundStateData, tau: f64, radius: f64) -> f64 {
    let area = sphere_area(gs.params.dim());
    let w = gs.params.dim() as f64 - 1.0;
    let r_max = gs.profile.r_max;
    let (inner, outer) = ((tau * radius).min(r_max), (2.0 * tau * radius).min(r_max));
    let lost = gauss_legendre(inner, outer, 400, |rho| {
        let phi = cutoff(rho / tau, radius);
        (1.0 - phi * phi) * gs.value(rho).powi(2) * rho.powf(w)
    }) + gauss_legendre(outer, r_max, 400, |rho| gs.value(rho).powi(2) * rho.powf(w));
    (1.0 - area * lost / gs.l2_sq).powf(-0.5)
}

fn gauss_legendre(a: f64, b: f64, cells: usize, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 4] =
        [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 4] =
        [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    if !(b > a) {
        return 0.0;
    }
    let h = (b - a) / cells as f64;
    (0..cells)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub dt: f64,
    /// Stop when `sup|u_{n+1} - u_n| / Δt` falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Allow `a ≥ a*` and stop once the energy drops below `energy_floor`.
    pub probe: bool,
    pub energy_floor: f64,
    /// Accepted energy increase per step before the step is halved.
    pub energy_slack: f64,
    pub min_dt: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            tol: 1e-9,
            max_iters: 200_000,
            probe: false,
            energy_floor: -1e3,
            energy_slack: 1e-12,
            min_dt: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizerResult {
    pub u: GridFunction,
    pub breakdown: EnergyBreakdown,
    pub energy: f64,
    pub mu: f64,
    /// `(∫|∇u|²)^{-1/2}`
    pub eps: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Sup norm of the Euler–Lagrange defect.
    pub residual: f64,
    /// Largest accepted energy increase over one step.
    pub max_energy_rise: f64,
    pub final_dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MinimizerSummary {
    pub params: GNParams,
    pub energy: f64,
    pub kinetic: f64,
    pub potential_term: f64,
    pub nonlinear_term: f64,
    pub mu: f64,
    pub eps: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    /// Relative path of the profile CSV.
    pub profile_csv: String,
}

impl MinimizerResult {
    pub fn summary(&self, params: GNParams, profile_csv: &str) -> MinimizerSummary {
        MinimizerSummary {
            params,
            energy: self.energy,
            kinetic: self.breakdown.kinetic,
            potential_term: self.breakdown.potential_term,
            nonlinear_term: self.breakdown.nonlinear_term,
            mu: self.mu,
            eps: self.eps,
            iterations: self.iterations,
            converged: self.converged,
            residual: self.residual,
            profile_csv: profile_csv.to_string(),
        }
    }
}

pub fn gradient_flow_minimize(
    init: &GridFunction,
    params: GNParams,
    spec: &PotentialSpec,
    cfg: &FlowConfig,
) -> Result<MinimizerResult> {
    let f = Functional::new(init.grid().clone(), params, spec)?;
    minimize_with(&f, init, cfg)
}

/// Normalized gradient flow, implicit in `-Δ + V`, explicit in the
/// nonlinear term and the multiplier `μₙ` of the current iterate:
/// `(M + Δt(K + MV)) u* = (1 + Δt μₙ) M uⁿ + Δt a S |uⁿ|^{2β²} uⁿ`,
/// `uⁿ⁺¹ = u*/‖u*‖`.
/// The matrix is an M-matrix, so positive iterates stay positive while
/// `1 + Δt μₙ > 0`. Carrying `μₙ` makes fixed points exact discrete
/// Euler–Lagrange solutions; without it the normalization constant rescales
/// the coupling at the fixed point.
pub fn minimize_with(f: &Functional, init: &GridFunction, cfg: &FlowConfig) -> Result<MinimizerResult> {
    if !(cfg.dt > 0.0 && cfg.tol > 0.0 && cfg.min_dt > 0.0) {
        return Err(Error::InvalidParams("flow dt, tol and min_dt must be positive".into()));
    }
    let grid = f.grid.clone();
    if !Arc::ptr_eq(init.grid(), &grid) && **init.grid() != *grid {
        return Err(Error::InvalidParams("initial function lives on a different grid".into()));
    }
    let interior = |i: usize| !grid.is_dirichlet(i);
    if init.values().iter().enumerate().any(|(i, &v)| interior(i) && !(v > 0.0)) {
        return Err(Error::NonPositive { iteration: 0, dt: cfg.dt });
    }
    let a = f.params.a();
    let q = f.params.nonlinear_power();
    let mass = grid.mass_weights();

    let mut u = normalize_mass(init)?.into_values();
    let mut energy = f.energy(&u).total;
    let mut dt = cfg.dt;
    let mut matrix = system_matrix(f, dt);
    let mut max_rise = f64::NEG_INFINITY;
    let mut last_change = f64::INFINITY;

    for it in 1..=cfg.max_iters {
        let mu = f.multiplier(&u);
        if 1.0 + dt * mu <= 0.0 {
            dt = 0.5 / -mu;
            matrix = system_matrix(f, dt);
        }
        let rhs: Vec<f64> = (0..u.len())
            .map(|i| {
                if !interior(i) {
                    return 0.0;
                }
                (mass[i] * u[i] * (1.0 + dt * mu) + dt * a * f.singular[i] * u[i].powf(q - 1.0)) / dt
            })
            .collect();
        let mut next = matrix.solve(&rhs);
        let positive = next.iter().enumerate().all(|(i, &v)| !interior(i) || (v > 0.0 && v.is_finite()));
        let norm: f64 = mass.iter().zip(&next).map(|(m, v)| m * v * v).sum::<f64>().sqrt();
        let accepted = positive && norm.is_finite() && norm > 0.0 && {
            next.iter_mut().for_each(|v| *v /= norm);
            let e = f.energy(&next).total;
            e <= energy + cfg.energy_slack * (1.0 + energy.abs())
        };
        if !accepted {
            dt *= 0.5;
            if dt < cfg.min_dt {
                return Err(if positive {
                    Error::NotConverged { iterations: it, last_change }
                } else {
                    Error::NonPositive { iteration: it, dt }
                });
            }
            matrix = system_matrix(f, dt);
            continue;
        }
        let new_energy = f.energy(&next).total;
        max_rise = max_rise.max(new_energy - energy);
        last_change = next.iter().zip(&u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / dt;
        u = next;
        energy = new_energy;
        if cfg.probe && energy < cfg.energy_floor {
            return Err(Error::EnergyDiverged { energy, floor: cfg.energy_floor, iterations: it });
        }
        if last_change < cfg.tol {
            return Ok(finish(f, u, it, true, max_rise, dt));
        }
    }
    Err(Error::NotConverged { iterations: cfg.max_iters, last_change })
}

fn system_matrix(f: &Functional, dt: f64) -> crate::discretization::Tridiagonal {
    // operator_matrix builds K + M·diag; divide the system by Δt
    let diag: Vec<f64> = f.potential.iter().map(|v| (1.0 + dt * v) / dt).collect();
    f.grid.operator_matrix(&diag)
}

fn finish(f: &Functional, u: Vec<f64>, iterations: usize, converged: bool, max_rise: f64, dt: f64) -> MinimizerResult {
    let breakdown = f.energy(&u);
    let bs = f.params.beta_sq();
    let mu = breakdown.total - f.params.a() * bs / (1.0 + bs) * f.weighted_nonlinear(&u);
    let residual = f.el_residual(&u, mu);
    MinimizerResult {
        u: GridFunction::new(f.grid.clone(), u),
        breakdown,
        energy: breakdown.total,
        mu,
        eps: breakdown.kinetic.powf(-0.5),
        iterations,
        converged,
        residual,
        max_energy_rise: max_rise,
        final_dt: dt,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub a_over_a_star: f64,
    pub rows: Vec<(f64, f64)>,
    /// Least-squares coefficient of τ² in `E ≈ c₂τ² + c₀ + c₋τ^{-p}`.
    pub tau_sq_coefficient: f64,
    /// `(1 - a/a*)/β²`
    pub predicted_coefficient: f64,
}

/// Energies `E_a(Φ_τ)` along `taus`.
pub fn nonexistence_probe(
    gs: &GroundStateData,
    a: f64,
    grid: &Arc<Grid>,
    spec: &PotentialSpec,
    taus: &[f64],
    cutoff_radius: Option<f64>,
) -> Result<NonexistenceReport> {
    if taus.windows(2).any(|w| !(w[0] < w[1])) || taus.len() < 3 {
        return Err(Error::InvalidParams("tau list must be increasing with at least 3 entries".into()));
    }
    let params = gs.params.with_a(a)?;
    let f = Functional::new(grid.clone(), params, spec)?;
    let rows = taus
        .iter()
        .map(|&tau| {
            let trial = make_trial_function(gs, grid, tau, cutoff_radius)?;
            Ok((tau, f.energy(trial.values.values()).total))
        })
        .collect::<Result<Vec<_>>>()?;
    let p = spec.p0;
    let basis = |t: f64| [t * t, 1.0, t.powf(-p)];
    let coeffs = least_squares(&rows.iter().map(|&(t, e)| (basis(t), e)).collect::<Vec<_>>());
    Ok(NonexistenceReport {
        a_over_a_star: a / gs.a_star,
        rows,
        tau_sq_coefficient: coeffs[0],
        predicted_coefficient: (1.0 - a / gs.a_star) / params.beta_sq(),
    })
}

/// Normal equations for three basis functions.
fn least_squares(rows: &[([f64; 3], f64)]) -> [f64; 3] {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (x, y) in rows {
        for i in 0..3 {
            atb[i] += x[i] * y;
            for j in 0..3 {
                ata[i][j] += x[i] * x[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&ata[i]);
        m[i][3] = atb[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (m[i][3] - (i + 1..3).map(|k| m[i][k] * x[k]).sum::<f64>()) / m[i][i];
    }
    x
}

/// Strictly positive smooth random function: a sum of Gaussian bumps times
/// an envelope vanishing on the Dirichlet boundary.
pub fn random_positive(grid: &Arc<Grid>, rng: &mut impl Rng) -> GridFunction {
    random_smooth(grid, rng, false)
}

/// Smooth random function vanishing on the Dirichlet boundary; with
/// `signed` the bumps carry random signs and the positive floor is dropped.
/// On a ball the bumps are mirrored so the radial profile is even in `r`.
pub fn random_smooth(grid: &Arc<Grid>, rng: &mut impl Rng, signed: bool) -> GridFunction {
    let (lo, hi, mirror) = match *grid.domain() {
        Domain::Interval { lo, hi } => (lo, hi, false),
        Domain::Ball { radius, .. } => (-radius, radius, true),
    };
    let span = hi - lo;
    let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let sign = if signed && rng.gen_bool(0.5) { -1.0 } else { 1.0 };
            (rng.gen_range(lo..hi), rng.gen_range(0.05..0.5) * span, sign * rng.gen_range(0.2..1.0))
        })
        .collect();
    let floor = if signed { 0.0 } else { rng.gen_range(0.01..0.2) };
    let gauss = |x: f64, c: f64, w: f64| (-((x - c) / w).powi(2)).exp();
    GridFunction::from_fn(grid.clone(), |x| {
        let envelope = ((x - lo) * (hi - x)).max(0.0) / (0.25 * span * span);
        let body: f64 = bumps
            .iter()
            .map(|&(c, w, h)| h * if mirror { 0.5 * (gauss(x, c, w) + gauss(x, -c, w)) } else { gauss(x, c, w) })
            .sum();
        envelope * (floor + body)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub starts: usize,
    pub converged: usize,
    pub failures: Vec<String>,
    pub max_l2_distance: f64,
    pub max_sup_distance: f64,
    /// `(max e - min e) / |mean e|` over converged starts.
    pub energy_spread: f64,
    pub energies: Vec<f64>,
}

/// Gradient flow from `n_starts` seeded random positive initial data, run
/// in parallel; start `i` draws from `ChaCha8(seed)` stream `i`.
pub fn multistart_uniqueness(f: &Functional, cfg: &FlowConfig, n_starts: usize, seed: u64) -> Result<UniquenessReport> {
    if n_starts < 3 {
        return Err(Error::InvalidParams("need at least 3 starts".into()));
    }
    let outcomes: Vec<Result<MinimizerResult>> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let init = random_positive(f.grid(), &mut rng);
            minimize_with(f, &init, cfg)
        })
        .collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => ok.push(r),
            Err(e) => failures.push(format!("start {i}: {e}")),
        }
    }
    let mut max_l2: f64 = 0.0;
    let mut max_sup: f64 = 0.0;
    for i in 0..ok.len() {
        for j in i + 1..ok.len() {
            max_l2 = max_l2.max(ok[i].u.l2_distance(&ok[j].u));
            max_sup = max_sup.max(ok[i].u.sup_distance(&ok[j].u));
        }
    }
    let energies: Vec<f64> = ok.iter().map(|r| r.energy).collect();
    let (lo, hi) = energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
    let mean = energies.iter().sum::<f64>() / energies.len().max(1) as f64;
    Ok(UniquenessReport {
        starts: n_starts,
        converged: ok.len(),
        failures,
        max_l2_distance: max_l2,
        max_sup_distance: max_sup,
        energy_spread: if ok.is_empty() { f64::NAN } else { (hi - lo) / mean.abs() },
        energies,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GnSampleReport {
    pub samples: usize,
    /// `min Υ(u)(1+β²)/a*` over the sample.
    pub min_ratio: f64,
    pub mean_ratio: f64,
}

/// Υ over `samples` seeded random smooth sign-changing functions, in
/// parallel; sample `i` uses `ChaCha8(seed)` stream `i`.
pub fn gn_random_check(gs: &GroundStateData, grid: &Arc<Grid>, samples: usize, seed: u64) -> Result<GnSampleReport> {
    let f = Functional::new(grid.clone(), gs.params, &PotentialSpec::power(0.0, 1.0))?;
    let scale = (1.0 + gs.params.beta_sq()) / gs.a_star;
    let ratios = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let u = random_smooth(grid, &mut rng, true);
            Ok(f.gn_quotient(u.values())? * scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GnSampleReport {
        samples,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        mean_ratio: ratios.iter().sum::<f64>() / samples.max(1) as f64,
    })
}

/// `(τ, Υ(Φ_τ)(1+β²)/a* - 1)` along `taus`.
pub fn gn_trial_excess(
    gs: &GroundStateData,
    grid: &Arc<Grid>,
    taus: &[f64],
    cutoff_radius: Option<f64>,
) -> Result<Vec<(f64, f64)>> {
    let scale = (1.0 + gs.params.beta_sq()) / gs.a_star;
    taus.iter()
        .map(|&tau| {
            let trial = make_trial_function(gs, grid, tau, cutoff_radius)?;
            Ok((tau, gn_quotient(&trial.values, gs.params)? * scale - 1.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;
    use std::f64::consts::PI;

    fn interval(res: usize) -> Arc<Grid> {
        build_grid(Domain::interval(-1.0, 1.0).unwrap(), res).unwrap()
    }

    fn free(a: f64) -> GNParams {
        GNParams::new(1, 0.5, a).unwrap()
    }

    fn eigenfunction(grid: &Arc<Grid>) -> GridFunction {
        normalize_mass(&GridFunction::from_fn(grid.clone(), |x| (0.5 * PI * x).cos())).unwrap()
    }

    #[test]
    fn dirichlet_eigenvalue_energy() {
        let u = eigenfunction(&interval(1024));
        let e = evaluate_energy(&u, free(0.0), &PotentialSpec::power(0.0, 2.0)).unwrap();
        assert!((e.total - PI * PI / 4.0).abs() < 1e-5, "{}", e.total);
        assert_eq!(e.nonlinear_term, 0.0);
    }

    #[test]
    fn harmonic_potential_term() {
        // ∫ x² cos²(πx/2) dx over (-1,1) = 1/3 - 2/π²
        let u = eigenfunction(&interval(2048));
        let e = evaluate_energy(&u, free(0.0), &PotentialSpec::power(1.0, 2.0)).unwrap();
        assert!((e.potential_term - (1.0 / 3.0 - 2.0 / (PI * PI))).abs() < 1e-6, "{}", e.potential_term);
        assert!((e.total - e.kinetic - e.potential_term).abs() < 1e-15);
    }

    #[test]
    fn mass_is_enforced() {
        let u = eigenfunction(&interval(64)).scale(1.1);
        assert!(matches!(
            evaluate_energy(&u, free(0.0), &PotentialSpec::power(0.0, 2.0)),
            Err(Error::MassViolation { .. })
        ));
    }

    #[test]
    fn eigenfunction_residual_is_second_order() {
        let v = PotentialSpec::power(0.0, 2.0);
        let r =
            |res: usize| euler_lagrange_residual(&eigenfunction(&interval(res)), PI * PI / 4.0, free(0.0), &v).unwrap();
        let (r1, r2) = (r(128), r(256));
        assert!(r1 < 1e-3 && (r1 / r2 - 4.0).abs() < 0.2, "{r1} {r2}");
        let bumpy = GridFunction::from_fn(interval(128), |x| (1.0 - x * x) * (1.0 + 0.5 * (9.0 * x).sin()));
        assert!(euler_lagrange_residual(&normalize_mass(&bumpy).unwrap(), 1.0, free(0.0), &v).unwrap() > 0.5);
    }

    #[test]
    fn quotient_is_amplitude_invariant() {
        let u = eigenfunction(&interval(256));
        let q1 = gn_quotient(&u, free(1.0)).unwrap();
        let q2 = gn_quotient(&u.scale(7.5), free(1.0)).unwrap();
        assert!((q1 - q2).abs() < 1e-12 * q1);
        assert!(matches!(gn_quotient(&u.scale(0.0), free(1.0)), Err(Error::ZeroFunction)));
    }

    #[test]
    fn multiplier_at_zero_coupling_is_the_energy() {
        let u = eigenfunction(&interval(256));
        let v = PotentialSpec::power(1.0, 2.0);
        let e = evaluate_energy(&u, free(0.0), &v).unwrap();
        assert_eq!(lagrange_multiplier(&u, e.total, free(0.0)).unwrap(), e.total);
    }

    #[test]
    fn flow_finds_first_eigenfunction() {
        let grid = interval(256);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init = random_positive(&grid, &mut rng);
        let r =
            gradient_flow_minimize(&init, free(0.0), &PotentialSpec::power(0.0, 2.0), &FlowConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.energy - PI * PI / 4.0).abs() < 1e-4, "{}", r.energy);
        assert!(r.max_energy_rise <= 1e-12 * (1.0 + r.energy));
        assert!((r.mu - r.energy).abs() < 1e-14);
        assert!(r.residual < 1e-6, "{}", r.residual);
    }

    #[test]
    fn flow_rejects_sign_changing_start() {
        let grid = interval(64);
        let init = GridFunction::from_fn(grid, |x| x.sin());
        assert!(matches!(
            gradient_flow_minimize(&init, free(0.0), &PotentialSpec::power(0.0, 2.0), &FlowConfig::default()),
            Err(Error::NonPositive { .. })
        ));
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.3, 0.5), 1.0);
        assert_eq!(cutoff(1.0, 0.5), 0.0);
        assert!((cutoff(0.75, 0.5) - (1.0f64 - 1.0 / 0.75).exp()).abs() < 1e-15);
        assert!(cutoff(0.99, 0.5) < 1e-10);
    }

    #[test]
    fn least_squares_recovers_exact_model() {
        let rows: Vec<([f64; 3], f64)> = [2.0, 3.0, 5.0, 7.0]
            .iter()
            .map(|&t: &f64| ([t * t, 1.0, 1.0 / (t * t)], 0.3 * t * t - 2.0 + 4.0 / (t * t)))
            .collect();
        let c = least_squares(&rows);
        assert!((c[0] - 0.3).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-10 && (c[2] - 4.0).abs() < 1e-9);
    }
}
