//! Radial probe of `L = -Δ + 1 - (1+2β²)|x|^{-b} Q^{2β²}`.

use serde::{Deserialize, Serialize};

use super::GroundStateData;
use crate::discretization::{Domain, Grid, Tridiagonal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub resolution: usize,
    /// Radius of the truncated ball; defaults to the profile's `r_max`.
    pub radius: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { resolution: 16384, radius: None, max_iters: 500, tol: 1e-11 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearizedProbe {
    pub smallest_eigenvalue: f64,
    pub iterations: usize,
    /// Relative weighted-L² norm of `L(N/2·Q + x·∇Q) + 2Q`.
    pub identity_residual: f64,
}

/// `A = K + M - (1+2β²) W diag(Q^{2β²})` with `W` the interpolating
/// singular weights, so `L ≈ M⁻¹A`. Dirichlet rows are identity rows.
struct RadialOperator {
    grid: Grid,
    matrix: Tridiagonal,
}

impl RadialOperator {
    fn new(gs: &GroundStateData, q_of: impl Fn(f64) -> f64, cfg: &ProbeConfig) -> Result<Self> {
        let params = gs.params;
        let radius = cfg.radius.unwrap_or(gs.profile.r_max);
        let grid = Grid::new(Domain::ball(params.dim(), radius)?, cfg.resolution)?;
        let bs = params.beta_sq();
        let coupling: Vec<f64> =
            grid.nodes().iter().map(|&r| (1.0 + 2.0 * bs) * q_of(r).max(0.0).powf(2.0 * bs)).collect();
        let w = grid.interpolating_weights(-params.b())?;
        let mut matrix = grid.operator_matrix(&vec![1.0; grid.len()]);
        for i in 0..grid.len() {
            if grid.is_dirichlet(i) {
                continue;
            }
            matrix.diag[i] -= w.diag[i] * coupling[i];
            if i > 0 && !grid.is_dirichlet(i - 1) {
                matrix.lower[i] -= w.lower[i] * coupling[i - 1];
            }
            if i + 1 < grid.len() && !grid.is_dirichlet(i + 1) {
                matrix.upper[i] -= w.upper[i] * coupling[i + 1];
            }
        }
        Ok(Self { grid, matrix })
    }

    /// `M⁻¹A v`, zero on Dirichlet rows.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let av = self.matrix.apply(v);
        av.iter()
            .zip(self.grid.mass_weights())
            .enumerate()
            .map(|(i, (a, m))| if self.grid.is_dirichlet(i) { 0.0 } else { a / m })
            .collect()
    }

    fn weighted_norm(&self, v: &[f64]) -> f64 {
        self.grid.mass_weights().iter().zip(v).map(|(m, x)| m * x * x).sum::<f64>().sqrt()
    }

    fn rayleigh(&self, x: &[f64]) -> f64 {
        let lx = self.apply(x);
        let num: f64 = self.grid.mass_weights().iter().zip(x.iter().zip(&lx)).map(|(m, (a, b))| m * a * b).sum();
        num / self.weighted_norm(x).powi(2)
    }

    fn shifted(&self, shift: f64) -> Tridiagonal {
        let mut t = self.matrix.clone();
        for (i, m) in self.grid.mass_weights().iter().enumerate() {
            if !self.grid.is_dirichlet(i) {
                t.diag[i] -= shift * m;
            }
        }
        t
    }

    /// Number of eigenvalues of `M⁻¹A` below `shift`. The off-diagonal
    /// products are positive, so `A` is similar to a symmetric matrix and the
    /// negative pivots of `A - shift·M` count them.
    fn count_below(&self, shift: f64) -> usize {
        let t = self.shifted(shift);
        let mut count = 0;
        let mut prev = 1.0;
        for i in 0..t.diag.len() {
            if self.grid.is_dirichlet(i) {
                prev = 1.0;
                continue;
            }
            let coupled = i > 0 && !self.grid.is_dirichlet(i - 1);
            let mut d = t.diag[i] - if coupled { t.lower[i] * t.upper[i - 1] / prev } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * t.diag[i].abs().max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
            prev = d;
        }
        count
    }

    /// Gershgorin interval for the spectrum of `M⁻¹A`.
    fn spectral_bounds(&self) -> (f64, f64) {
        let t = &self.matrix;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, m) in self.grid.mass_weights().iter().enumerate() {
            if self.grid.is_dirichlet(i) {
                continue;
            }
            let off = t.lower[i].abs() + t.upper[i].abs();
            lo = lo.min((t.diag[i] - off) / m);
            hi = hi.max((t.diag[i] + off) / m);
        }
        (lo, hi)
    }
}

/// Smallest radial eigenvalue of `L` by shifted inverse iteration and the
/// residual of `L(N/2·Q + x·∇Q) = -2Q` on the same discretization.
pub fn linearized_probe(gs: &GroundStateData, cfg: &ProbeConfig) -> Result<LinearizedProbe> {
    probe_with(gs, |r| gs.eval(r), cfg)
}

/// Same as [`linearized_probe`] with `Q` replaced by an arbitrary radial
/// profile (value, derivative).
pub fn probe_with(gs: &GroundStateData, q: impl Fn(f64) -> (f64, f64), cfg: &ProbeConfig) -> Result<LinearizedProbe> {
    let op = RadialOperator::new(gs, |r| q(r).0, cfg)?;
    let grid = &op.grid;
    let n = gs.params.dim() as f64;

    let qv: Vec<f64> = grid.nodes().iter().map(|&r| q(r).0).collect();
    let v: Vec<f64> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if grid.is_dirichlet(i) {
                0.0
            } else {
                let (val, der) = q(r);
                0.5 * n * val + r * der
            }
        })
        .collect();
    let lv = op.apply(&v);
    let res: Vec<f64> = lv
        .iter()
        .zip(&qv)
        .enumerate()
        .map(|(i, (l, q))| if grid.is_dirichlet(i) { 0.0 } else { l + 2.0 * q })
        .collect();
    let two_q: Vec<f64> = qv.iter().map(|q| 2.0 * q).collect();
    let identity_residual = op.weighted_norm(&res) / op.weighted_norm(&two_q);

    let (smallest_eigenvalue, iterations) = smallest_eigenvalue(&op, cfg)?;
    Ok(LinearizedProbe { smallest_eigenvalue, iterations, identity_residual })
}

fn smallest_eigenvalue(op: &RadialOperator, cfg: &ProbeConfig) -> Result<(f64, usize)> {
    let grid = &op.grid;
    let mass = grid.mass_weights();

    // coarse bracket from Sturm counts, then inverse iteration just below it
    let (mut lo, mut hi) = op.spectral_bounds();
    while hi - lo > 1e-3 * (1.0 + lo.abs().min(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if op.count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let matrix = op.shifted(lo - 1e-3 * (1.0 + lo.abs()));

    let mut x: Vec<f64> = (0..grid.len()).map(|i| if grid.is_dirichlet(i) { 0.0 } else { 1.0 }).collect();
    let mut last = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        let rhs: Vec<f64> =
            x.iter().zip(mass).enumerate().map(|(i, (v, m))| if grid.is_dirichlet(i) { 0.0 } else { m * v }).collect();
        x = matrix.solve(&rhs);
        let norm = op.weighted_norm(&x);
        x.iter_mut().for_each(|v| *v /= norm);
        let rq = op.rayleigh(&x);
        if (rq - last).abs() < cfg.tol * (1.0 + rq.abs()) {
            return Ok((rq, it));
        }
        last = rq;
    }
    Err(Error::IterationStall(cfg.max_iters))
}
