//! Radial shooting for the positive ground state.

/// Right-hand side of the radial equation
/// `Q'' + (N-1)/r Q' = Q - r^{-b} |Q|^{2 beta^2} Q`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RadialOde {
    pub dim: f64,
    pub b: f64,
    /// `1 + 2 beta^2`
    pub power: f64,
}

impl RadialOde {
    pub fn accel(&self, r: f64, q: f64, dq: f64) -> f64 {
        let nl = r.powf(-self.b) * q.abs().powf(self.power - 1.0) * q;
        q - nl - (self.dim - 1.0) / r * dq
    }

    pub(crate) fn rk4(&self, r: f64, h: f64, q: f64, dq: f64) -> (f64, f64) {
        let k1q = dq;
        let k1p = self.accel(r, q, dq);
        let k2q = dq + 0.5 * h * k1p;
        let k2p = self.accel(r + 0.5 * h, q + 0.5 * h * k1q, k2q);
        let k3q = dq + 0.5 * h * k2p;
        let k3p = self.accel(r + 0.5 * h, q + 0.5 * h * k2q, k3q);
        let k4q = dq + h * k3p;
        let k4p = self.accel(r + h, q + h * k3q, k4q);
        (q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), dq + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p))
    }
}

/// Startup expansion `Q(r) = Σ c_jk r^{j(2-b) + 2k}` about the origin,
/// truncated rectangularly (exact, since every coefficient depends only on
/// lower indices). Also carries the matching expansion of `Q^power`.
#[derive(Debug, Clone)]
pub(crate) struct Startup {
    pub s: f64,
    gamma: f64,
    coef: Vec<UPoly>,
    pow_coef: Vec<UPoly>,
}

/// Highest exponent the truncation aims to resolve; `r0^6` is far below
/// round-off for the default `r0`.
const STARTUP_ORDER: f64 = 6.0;
const U_TERMS: usize = 4;
const MAX_ROWS: usize = 64;

/// Polynomial in `u = r^2`, truncated after `U_TERMS` terms.
type UPoly = [f64; U_TERMS];

fn umul(a: &UPoly, b: &UPoly) -> UPoly {
    let mut out = [0.0; U_TERMS];
    for i in 0..U_TERMS {
        for j in 0..U_TERMS - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn udiv(a: &UPoly, b: &UPoly) -> UPoly {
    let mut out = [0.0; U_TERMS];
    for k in 0..U_TERMS {
        let acc: f64 = (1..=k).map(|i| b[i] * out[k - i]).sum();
        out[k] = (a[k] - acc) / b[0];
    }
    out
}

/// `a^p` for `a[0] > 0` by the power-series recurrence.
fn upow(a: &UPoly, p: f64) -> UPoly {
    let mut out = [0.0; U_TERMS];
    out[0] = a[0].powf(p);
    for n in 1..U_TERMS {
        let acc: f64 = (1..=n).map(|i| (p * i as f64 - (n - i) as f64) * a[i] * out[n - i]).sum();
        out[n] = acc / (n as f64 * a[0]);
    }
    out
}

impl Startup {
    pub fn new(ode: &RadialOde, s: f64) -> Self {
        let n = ode.dim;
        let gamma = 2.0 - ode.b;
        let pw = ode.power;
        let rows = ((STARTUP_ORDER / gamma).ceil() as usize + 1).clamp(2, MAX_ROWS);

        // c_jk e(e + N - 2) = c_{j,k-1} - [Q^pw]_{j-1,k},  e = jγ + 2k
        let mut coef: Vec<UPoly> = Vec::with_capacity(rows);
        let mut pow_coef: Vec<UPoly> = Vec::with_capacity(rows);
        for j in 0..rows {
            let mut row = [0.0; U_TERMS];
            for k in 0..U_TERMS {
                if j == 0 && k == 0 {
                    row[0] = s;
                    continue;
                }
                let e = j as f64 * gamma + 2.0 * k as f64;
                let prev = if k > 0 { row[k - 1] } else { 0.0 };
                let source = if j > 0 { pow_coef[j - 1][k] } else { 0.0 };
                row[k] = (prev - source) / (e * (e + n - 2.0));
            }
            coef.push(row);
            let p = if j == 0 {
                upow(&coef[0], pw)
            } else {
                let mut acc = [0.0; U_TERMS];
                for i in 1..=j {
                    let w = pw * i as f64 - (j - i) as f64;
                    let term = umul(&coef[i], &pow_coef[j - i]);
                    for (a, t) in acc.iter_mut().zip(term) {
                        *a += w * t;
                    }
                }
                let mut p = udiv(&acc, &coef[0]);
                p.iter_mut().for_each(|v| *v /= j as f64);
                p
            };
            pow_coef.push(p);
        }
        Self { s, gamma, coef, pow_coef }
    }

    fn terms<'a>(&'a self, table: &'a [UPoly]) -> impl Iterator<Item = (f64, f64)> + 'a {
        table.iter().enumerate().flat_map(move |(j, row)| {
            row.iter().enumerate().map(move |(k, &c)| (j as f64 * self.gamma + 2.0 * k as f64, c))
        })
    }

    /// `(exponent, coefficient)` pairs of `Q`.
    pub fn q_terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.terms(&self.coef)
    }

    /// `(exponent, coefficient)` pairs of `Q^power`.
    pub fn pow_terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.terms(&self.pow_coef)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.q_terms().map(|(e, c)| c * r.powf(e)).sum()
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.q_terms().filter(|&(e, _)| e > 0.0).map(|(e, c)| c * e * r.powf(e - 1.0)).sum()
    }

    /// Size of the first corrections relative to the amplitude at `r`.
    pub fn correction_ratio(&self, r: f64) -> f64 {
        (self.coef[1][0] * r.powf(self.gamma)).abs().max((self.coef[0][1] * r * r).abs()) / self.s
    }
}

/// Step grid: `dr = h * min(1, r / transition)`, geometric near the origin
/// and uniform beyond `transition`. Refining `h` refines both parts.
pub(crate) fn step_grid(r0: f64, r_max: f64, h: f64, transition: f64) -> Vec<f64> {
    let mut nodes = vec![r0];
    let mut r = r0;
    while r < r_max {
        let step = h * (r / transition).min(1.0);
        r = if r + step > r_max - 1e-12 * r_max { r_max } else { r + step };
        nodes.push(r);
    }
    nodes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    /// Q changed sign: amplitude above the critical one.
    Crossed,
    /// Q' became positive while Q > 0: amplitude below the critical one.
    TurnedUp,
    /// Reached r_max without either event.
    Reached,
}

#[derive(Debug, Clone)]
pub(crate) struct Trajectory {
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub outcome: Outcome,
}

pub(crate) fn shoot(ode: &RadialOde, s: f64, grid: &[f64]) -> Trajectory {
    let start = Startup::new(ode, s);
    let mut q = Vec::with_capacity(grid.len());
    let mut dq = Vec::with_capacity(grid.len());
    let (mut qc, mut pc) = (start.value(grid[0]), start.deriv(grid[0]));
    q.push(qc);
    dq.push(pc);
    for w in grid.windows(2) {
        let (qn, pn) = ode.rk4(w[0], w[1] - w[0], qc, pc);
        if qn < 0.0 || !qn.is_finite() {
            return Trajectory { q, dq, outcome: Outcome::Crossed };
        }
        if pn > 0.0 {
            return Trajectory { q, dq, outcome: Outcome::TurnedUp };
        }
        qc = qn;
        pc = pn;
        q.push(qc);
        dq.push(pc);
    }
    Trajectory { q, dq, outcome: Outcome::Reached }
}

/// `e^r K_nu(r)` from the large-argument expansion, truncated at its
/// smallest term. Exact for half-integer `nu`.
pub(crate) fn bessel_k_scaled(nu: f64, r: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * r);
        if next == 0.0 {
            break;
        }
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * r)).sqrt() * sum
}

/// Decaying solution `C r^{-nu} K_nu(r)`, `nu = N/2 - 1`, of the linear
/// equation `-Q'' - (N-1)/r Q' + Q = 0`, together with its derivative
/// `-C r^{-nu} K_{nu+1}(r)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct ExponentialTail {
    pub start: f64,
    pub amplitude: f64,
    pub nu: f64,
}

impl ExponentialTail {
    pub fn matched(dim: usize, r: f64, q: f64) -> Self {
        let nu = dim as f64 / 2.0 - 1.0;
        let shape = r.powf(-nu) * bessel_k_scaled(nu, r);
        // amplitude absorbs e^{-r}; evaluate relative to the matching radius
        Self { start: r, amplitude: q / shape, nu }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.amplitude * r.powf(-self.nu) * bessel_k_scaled(self.nu, r) * (self.start - r).exp()
    }

    pub fn deriv(&self, r: f64) -> f64 {
        -self.amplitude * r.powf(-self.nu) * bessel_k_scaled(self.nu + 1.0, r) * (self.start - r).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_bessel_is_exact() {
        // K_{1/2}(r) = sqrt(pi / 2r) e^{-r}
        for r in [0.5, 3.0, 20.0] {
            let got = bessel_k_scaled(0.5, r);
            let want = (std::f64::consts::PI / (2.0 * r)).sqrt();
            assert!((got - want).abs() < 1e-15 * want);
        }
        // K_{3/2}(r) = sqrt(pi / 2r) e^{-r} (1 + 1/r)
        let r = 4.0;
        let want = (std::f64::consts::PI / (2.0 * r)).sqrt() * (1.0 + 1.0 / r);
        assert!((bessel_k_scaled(1.5, r) - want).abs() < 1e-14);
    }

    #[test]
    fn bessel_k0_large_argument() {
        // K_0(10) = 1.778006231616918e-05
        let got = bessel_k_scaled(0.0, 10.0) * (-10.0f64).exp();
        assert!((got / 1.778006231616918e-05 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn startup_series_satisfies_ode_near_origin() {
        let ode = RadialOde { dim: 1.0, b: 0.5, power: 4.0 };
        let st = Startup::new(&ode, 1.0);
        // finite-difference second derivative of the series vs the ODE
        let r = 1e-3;
        let h = 1e-6;
        let d2 = (st.deriv(r + h) - st.deriv(r - h)) / (2.0 * h);
        let rhs = ode.accel(r, st.value(r), st.deriv(r));
        assert!((d2 - rhs).abs() < 1e-4, "{d2} vs {rhs}");
    }

    #[test]
    fn grid_is_graded_then_uniform() {
        let g = step_grid(1e-4, 10.0, 0.01, 0.5);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let small = g[1] - g[0];
        assert!((small - 2e-6).abs() < 1e-12);
        let last = g[g.len() - 1] - g[g.len() - 2];
        assert!(last <= 0.01 + 1e-12);
    }
}
