//! Bounded domains, uniform grids, the Dirichlet Laplacian and quadrature
//! with the singular weight `|x|^e`.
//!
//! Both geometries reduce to a 1-D node set with a measure density
//! `c |x|^k`: an interval has `c = 1, k = 0`; an `N`-ball under radial
//! symmetry has `c = |S^{N-1}|, k = N - 1` on `r ∈ [0, R]`. Every node owns
//! the dual cell between neighbouring midpoints. Node weights integrate the
//! density times `|x|^e` over the dual cell in closed form, and the
//! Laplacian is the vertex-centred finite-volume stencil on the same cells,
//! so it is symmetric with respect to the mass weights.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Ball of radius `radius` in `R^dim`, radial functions only.
    Ball {
        dim: usize,
        radius: f64,
    },
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let d = Domain::Interval { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        let d = Domain::Ball { dim, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidParams(format!("empty interval ({lo}, {hi})")));
                }
                if !(lo < 0.0 && hi > 0.0) {
                    return Err(Error::OriginOutside);
                }
            }
            Domain::Ball { dim, radius } => {
                if dim == 0 {
                    return Err(Error::InvalidParams("ball dimension must be at least 1".into()));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::OriginOutside);
                }
            }
        }
        Ok(())
    }

    pub fn contains_origin(&self) -> bool {
        self.validate().is_ok()
    }

    /// Spatial dimension of the functions living on this domain.
    pub fn dim(&self) -> usize {
        match *self {
            Domain::Interval { .. } => 1,
            Domain::Ball { dim, .. } => dim,
        }
    }

    /// Distance from the origin to the boundary.
    pub fn dist_to_boundary(&self) -> f64 {
        match *self {
            Domain::Interval { lo, hi } => (-lo).min(hi),
            Domain::Ball { radius, .. } => radius,
        }
    }

    /// Whether the coordinate lies in the closed domain. For balls the
    /// coordinate is the radius.
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Interval { lo, hi } => x >= lo && x <= hi,
            Domain::Ball { radius, .. } => x.abs() <= radius,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Interval { lo, hi } => hi - lo,
            Domain::Ball { dim, radius } => sphere_area(dim) * radius.powi(dim as i32) / dim as f64,
        }
    }

    fn density(&self) -> (f64, f64) {
        match *self {
            Domain::Interval { .. } => (1.0, 0.0),
            Domain::Ball { dim, .. } => (sphere_area(dim), dim as f64 - 1.0),
        }
    }
}

/// `∫_a^b |x|^s dx` for `s > -1`.
pub fn abs_power_integral(a: f64, b: f64, s: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        positive_power_integral(a, b, s)
    } else if b <= 0.0 {
        positive_power_integral(-b, -a, s)
    } else {
        positive_power_integral(0.0, -a, s) + positive_power_integral(0.0, b, s)
    }
}

fn positive_power_integral(a: f64, b: f64, s: f64) -> f64 {
    let t = s + 1.0;
    if a == b {
        0.0
    } else if a == 0.0 {
        b.powf(t) / t
    } else {
        // (b^t - a^t)/t without cancellation for narrow cells
        a.powf(t) * (t * ((b - a) / a).ln_1p()).exp_m1() / t
    }
}

/// `∫_a^b |x|^s (x - c) dx`.
fn abs_power_moment(a: f64, b: f64, s: f64, c: f64) -> f64 {
    if a < 0.0 && b > 0.0 {
        return abs_power_moment(a, 0.0, s, c) + abs_power_moment(0.0, b, s, c);
    }
    if b <= 0.0 {
        return -abs_power_moment(-b, -a, s, -c);
    }
    if a == 0.0 {
        return b.powf(s + 2.0) / (s + 2.0) - c * b.powf(s + 1.0) / (s + 1.0);
    }
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GL8_X
        .iter()
        .zip(GL8_W)
        .map(|(&t, w)| {
            let (xl, xr) = (mid - half * t, mid + half * t);
            w * (xl.powf(s) * (xl - c) + xr.powf(s) * (xr - c))
        })
        .sum::<f64>()
        * half
}

// positive half of the 8-point Gauss-Legendre rule on [-1, 1]
const GL8_X: [f64; 4] = [0.18343464249564978, 0.525532409916329, 0.7966664774136267, 0.9602898564975362];
const GL8_W: [f64; 4] = [0.36268378337836177, 0.31370664587788705, 0.22238103445337434, 0.10122853629037669];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    resolution: usize,
    nodes: Vec<f64>,
    h: f64,
    dirichlet: Vec<bool>,
    mass: Vec<f64>,
    /// `c |x_f|^k / h` on the face between nodes `i` and `i + 1`.
    faces: Vec<f64>,
}

impl Grid {
    /// Uniform grid with `resolution` cells.
    pub fn new(domain: Domain, resolution: usize) -> Result<Self> {
        domain.validate()?;
        if resolution < 16 {
            return Err(Error::InvalidParams(format!("resolution {resolution} below 16")));
        }
        let (x0, x1) = match domain {
            Domain::Interval { lo, hi } => (lo, hi),
            Domain::Ball { radius, .. } => (0.0, radius),
        };
        let h = (x1 - x0) / resolution as f64;
        let mut nodes: Vec<f64> = (0..=resolution).map(|i| x0 + i as f64 * h).collect();
        nodes[resolution] = x1;
        let mut dirichlet = vec![false; resolution + 1];
        dirichlet[resolution] = true;
        if matches!(domain, Domain::Interval { .. }) {
            dirichlet[0] = true;
        }
        let (c, k) = domain.density();
        let faces = nodes.windows(2).map(|w| c * (0.5 * (w[0] + w[1])).abs().powf(k) / h).collect();
        let mut grid = Grid { domain, resolution, nodes, h, dirichlet, mass: Vec::new(), faces };
        grid.mass = grid.node_weights(0.0)?;
        Ok(grid)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn is_dirichlet(&self, i: usize) -> bool {
        self.dirichlet[i]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Dual-cell volumes.
    pub fn mass_weights(&self) -> &[f64] {
        &self.mass
    }

    pub fn face_coefficients(&self) -> &[f64] {
        &self.faces
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn dual_cell(&self, i: usize) -> (f64, f64) {
        let x = self.nodes[i];
        let lo = if i == 0 { x } else { x - 0.5 * self.h };
        let hi = if i + 1 == self.nodes.len() { x } else { x + 0.5 * self.h };
        (lo, hi)
    }

    fn min_exponent(&self) -> f64 {
        -(self.domain.dim() as f64).min(2.0)
    }

    /// `c ∫_{cell_i} |x|^{k + exponent} dx` for every node.
    pub fn node_weights(&self, exponent: f64) -> Result<Vec<f64>> {
        if !(exponent > self.min_exponent()) {
            return Err(Error::NonIntegrableWeight(exponent));
        }
        let (c, k) = self.domain.density();
        Ok((0..self.nodes.len())
            .map(|i| {
                let (lo, hi) = self.dual_cell(i);
                c * abs_power_integral(lo, hi, k + exponent)
            })
            .collect())
    }

    /// Tridiagonal `W` with `(W g)_i = c ∫_{cell_i} |x|^{k + exponent} ℓ(g)`,
    /// `ℓ(g)` the piecewise linear interpolant of the node samples. Unlike the
    /// lumped [`Grid::node_weights`] this is exact for data linear near a
    /// singular origin.
    pub fn interpolating_weights(&self, exponent: f64) -> Result<Tridiagonal> {
        if !(exponent > self.min_exponent()) {
            return Err(Error::NonIntegrableWeight(exponent));
        }
        let (c, k) = self.domain.density();
        let s = k + exponent;
        let n = self.nodes.len();
        let mut t = Tridiagonal::zeros(n);
        for i in 0..n {
            let x = self.nodes[i];
            let (lo, hi) = self.dual_cell(i);
            let mut d = abs_power_integral(lo, hi, s);
            if i > 0 {
                let m = -abs_power_moment(lo, x, s, x) / self.h;
                t.lower[i] = c * m;
                d -= m;
            }
            if i + 1 < n {
                let m = abs_power_moment(x, hi, s, x) / self.h;
                t.upper[i] = c * m;
                d -= m;
            }
            t.diag[i] = c * d;
        }
        Ok(t)
    }

    /// `∫_Ω |x|^exponent g dx` for node samples `g` (boundary nodes included).
    pub fn integrate(&self, values: &[f64], exponent: f64) -> Result<f64> {
        assert_eq!(values.len(), self.nodes.len(), "sample length mismatch");
        let w = if exponent == 0.0 { self.mass.clone() } else { self.node_weights(exponent)? };
        Ok(w.iter().zip(values).map(|(w, g)| w * g).sum())
    }

    /// `Σ_f A_f (u_{i+1} - u_i)²`, the discrete `∫|∇u|²`.
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        self.faces.iter().zip(u.windows(2)).map(|(a, w)| a * (w[1] - w[0]) * (w[1] - w[0])).sum()
    }

    /// Stiffness times `u` (`K u`, no mass inverse); zero on Dirichlet rows.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            if self.dirichlet[i] {
                continue;
            }
            let mut acc = 0.0;
            if i > 0 {
                acc += self.faces[i - 1] * (u[i] - u[i - 1]);
            }
            if i + 1 < n {
                acc += self.faces[i] * (u[i] - u[i + 1]);
            }
            out[i] = acc;
        }
        out
    }

    /// Tridiagonal matrix `K + diag(m_i d_i)` with identity rows on
    /// Dirichlet nodes.
    pub fn operator_matrix(&self, diag: &[f64]) -> Tridiagonal {
        let n = self.nodes.len();
        let mut t = Tridiagonal::zeros(n);
        for i in 0..n {
            if self.dirichlet[i] {
                t.diag[i] = 1.0;
                continue;
            }
            let mut d = self.mass[i] * diag[i];
            if i > 0 {
                d += self.faces[i - 1];
                if !self.dirichlet[i - 1] {
                    t.lower[i] = -self.faces[i - 1];
                }
            }
            if i + 1 < n {
                d += self.faces[i];
                if !self.dirichlet[i + 1] {
                    t.upper[i] = -self.faces[i];
                }
            }
            t.diag[i] = d;
        }
        t
    }
}

/// Tridiagonal system; `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    /// Thomas algorithm. The matrices built here are diagonally dominant or
    /// symmetric positive definite, so no pivoting is done.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = self.upper[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            c[i] = self.upper[i] / denom;
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Node values on a grid with zero trace on Dirichlet nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Dirichlet entries of `values` are overwritten with zero.
    pub fn new(grid: Arc<Grid>, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match node count");
        for (v, &d) in values.iter_mut().zip(grid.dirichlet_mask()) {
            if d {
                *v = 0.0;
            }
        }
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `∫ |x|^exponent g dx`.
    pub fn integrate(&self, exponent: f64) -> Result<f64> {
        self.grid.integrate(&self.values, exponent)
    }

    /// `∫ g² dx`.
    pub fn mass(&self) -> f64 {
        self.grid.mass_weights().iter().zip(&self.values).map(|(m, v)| m * v * v).sum()
    }

    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.grid.mass_weights().iter().zip(self.values.iter().zip(&other.values)).map(|(m, (a, b))| m * a * b).sum()
    }

    pub fn l2_distance(&self, other: &GridFunction) -> f64 {
        self.grid
            .mass_weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(m, (a, b))| m * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `∫|∇g|²`.
    pub fn kinetic(&self) -> f64 {
        self.grid.dirichlet_form(&self.values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# node,value\n");
        for (x, v) in self.grid.nodes().iter().zip(&self.values) {
            out.push_str(&format!("{x:.12e},{v:.12e}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = GridFunctionDoc {
            domain: *self.grid.domain(),
            resolution: self.grid.resolution(),
            values: self.values.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GridFunctionDoc = serde_json::from_str(text)?;
        let grid = Arc::new(Grid::new(doc.domain, doc.resolution)?);
        if doc.values.len() != grid.len() {
            return Err(Error::Config("grid function length does not match its grid".into()));
        }
        Ok(Self::new(grid, doc.values))
    }
}

#[derive(Serialize, Deserialize)]
struct GridFunctionDoc {
    domain: Domain,
    resolution: usize,
    values: Vec<f64>,
}

pub fn build_grid(domain: Domain, resolution: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::new(domain, resolution)?))
}

/// `-Δg` with Dirichlet rows eliminated (set to zero).
pub fn apply_dirichlet_laplacian(g: &GridFunction) -> GridFunction {
    let grid = g.grid();
    let mut out = grid.stiffness_apply(g.values());
    for (o, m) in out.iter_mut().zip(grid.mass_weights()) {
        *o /= m;
    }
    GridFunction::new(grid.clone(), out)
}

pub fn integrate(g: &GridFunction, weight_exponent: f64) -> Result<f64> {
    g.integrate(weight_exponent)
}

pub fn normalize_mass(g: &GridFunction) -> Result<GridFunction> {
    let mass = g.mass();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroFunction);
    }
    Ok(g.scale(1.0 / mass.sqrt()))
}
