//! The positive radial ground state `Q` of
//! `-ΔQ + Q = |x|^{-b} Q^{1+2β²}` in `R^N` and the constants derived from it.

mod probe;
mod shooting;

pub use probe::{linearized_probe, probe_with, LinearizedProbe, ProbeConfig};
pub use shooting::ExponentialTail;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use shooting::{shoot, step_grid, Outcome, RadialOde, Startup};

/// Problem parameters. `beta_sq = (2 - b) / N` is derived, never set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GNParams {
    dim: usize,
    b: f64,
    beta_sq: f64,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    dim: usize,
    b: f64,
    a: f64,
}

impl TryFrom<RawParams> for GNParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        GNParams::new(raw.dim, raw.b, raw.a)
    }
}

impl From<GNParams> for RawParams {
    fn from(p: GNParams) -> Self {
        RawParams { dim: p.dim, b: p.b, a: p.a }
    }
}

impl GNParams {
    pub fn new(dim: usize, b: f64, a: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        let upper = (dim as f64).min(2.0);
        if !(b > 0.0 && b < upper) {
            return Err(Error::InvalidParams(format!("b = {b} must lie in (0, {upper})")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParams(format!("a = {a} must be a finite nonnegative number")));
        }
        Ok(Self { dim, b, beta_sq: (2.0 - b) / dim as f64, a })
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(self.dim, self.b, a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta_sq
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Exponent of the nonlinear energy density, `2 + 2β²`.
    pub fn nonlinear_power(&self) -> f64 {
        2.0 + 2.0 * self.beta_sq
    }
}

/// Surface area of the unit sphere in `R^N` (`2` for `N = 1`).
pub fn sphere_area(dim: usize) -> f64 {
    // 2 pi^{N/2} / Gamma(N/2), via the recursion |S^{N+1}| = 2 pi / N |S^{N-1}|
    let mut area = if dim % 2 == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    let mut k = if dim % 2 == 1 { 1 } else { 2 };
    while k < dim {
        area *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    area
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    /// Startup radius for the series expansion.
    pub r0: f64,
    /// Truncation radius.
    pub r_max: f64,
    /// Number of uniform steps on `[0, r_max]`.
    pub steps: usize,
    /// Radius below which steps shrink in proportion to `r`.
    pub transition: f64,
    /// Relative bracket width at which bisection stops.
    pub shoot_tol: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// Relative separation of the two bracketing trajectories beyond which
    /// the profile is continued by inward integration from `r_max`.
    pub separation_tol: f64,
    /// Exponents `p` whose moments are stored with the data.
    pub moment_exponents: Vec<f64>,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            r0: 1e-4,
            r_max: 30.0,
            steps: 16384,
            transition: 0.5,
            shoot_tol: 1e-15,
            s_min: 1e-2,
            s_max: 1e3,
            separation_tol: 1e-8,
            moment_exponents: vec![1.0, 2.0, 4.0],
        }
    }
}

/// `Q` and `Q'` on the radial line, starting at the startup radius `r0`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RadialProfile {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub r_max: f64,
    /// Amplitude `Q(0)` found by shooting.
    pub amplitude: f64,
    pub tail: ExponentialTail,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MomentEntry {
    pub p: f64,
    pub value: f64,
}

pub const GROUND_STATE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GroundStateData {
    pub format_version: u32,
    pub params: GNParams,
    pub profile: RadialProfile,
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub nonlinear_int: f64,
    pub a_star: f64,
    pub moments: Vec<MomentEntry>,
    /// Relative width of the final shooting bracket.
    pub shooting_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Integrand {
    Mass,
    Gradient,
    Nonlinear,
    Moment(f64),
}

// 4-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_W: [f64; 4] =
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Quintic Hermite interpolant through value, first and second derivative
/// at both ends of a cell of width `h`; returns the value and the derivative
/// at `t ∈ [0, 1]`.
fn quintic(t: f64, h: f64, k0: [f64; 3], k1: [f64; 3]) -> (f64, f64) {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let v = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * (t3 - 2.0 * t4 + t5),
    ];
    let d = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
    ];
    let c = [k0[0], h * k0[1], h * h * k0[2], k1[0], h * k1[1], h * h * k1[2]];
    let value = v.iter().zip(&c).map(|(a, b)| a * b).sum();
    let deriv = d.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / h;
    (value, deriv)
}

/// Solve for `Q` by bisection on the amplitude `s = Q(0)`.
pub fn solve_ground_state(params: &GNParams, cfg: &ShootingConfig) -> Result<GroundStateData> {
    if !(cfg.shoot_tol > 0.0) {
        return Err(Error::InvalidParams("shoot_tol must be positive".into()));
    }
    if !(cfg.r_max > 0.0 && cfg.r0 > 0.0 && cfg.r0 < cfg.r_max && cfg.steps >= 16) {
        return Err(Error::InvalidParams("need 0 < r0 < r_max and at least 16 steps".into()));
    }
    let ode = ode_for(params);
    let h = cfg.r_max / cfg.steps as f64;
    let grid = step_grid(cfg.r0, cfg.r_max, h, cfg.transition);

    let classify = |s: f64| -> Result<shooting::Trajectory> {
        let st = Startup::new(&ode, s);
        let ratio = st.correction_ratio(cfg.r0);
        if !(ratio < 0.1) {
            return Err(Error::SingularStartup { r0: cfg.r0, ratio });
        }
        Ok(shoot(&ode, s, &grid))
    };
    let is_over = |t: &shooting::Trajectory| -> bool {
        match t.outcome {
            Outcome::Crossed => true,
            Outcome::TurnedUp => false,
            // still positive and decreasing at r_max: decide by the size left
            Outcome::Reached => *t.q.last().unwrap() < (-0.5 * cfg.r_max).exp(),
        }
    };

    // bracket scan
    let ratio = 1.2f64;
    let mut lo = None;
    let mut s = cfg.s_min;
    let mut prev: Option<(f64, bool)> = None;
    while s <= cfg.s_max * (1.0 + 1e-12) {
        let over = is_over(&classify(s)?);
        if let Some((sp, false)) = prev {
            if over {
                lo = Some((sp, s));
                break;
            }
        }
        prev = Some((s, over));
        s *= ratio;
    }
    let (mut s_lo, mut s_hi) = lo.ok_or(Error::BracketFailure { s_min: cfg.s_min, s_max: cfg.s_max })?;

    while s_hi - s_lo > cfg.shoot_tol * s_hi {
        let mid = 0.5 * (s_lo + s_hi);
        if mid <= s_lo || mid >= s_hi {
            break;
        }
        if is_over(&classify(mid)?) {
            s_hi = mid;
        } else {
            s_lo = mid;
        }
    }

    let t_lo = classify(s_lo)?;
    let t_hi = classify(s_hi)?;
    let len = t_lo.q.len().min(t_hi.q.len());
    let mut cut = len - 1;
    for k in 0..len {
        if (t_hi.q[k] - t_lo.q[k]).abs() > cfg.separation_tol * t_lo.q[k] {
            cut = k.saturating_sub(1);
            break;
        }
    }
    // keep strictly decreasing values only
    while cut > 1 && t_lo.dq[cut] >= 0.0 {
        cut -= 1;
    }

    let mut nodes = grid[..=cut].to_vec();
    let mut values = t_lo.q[..=cut].to_vec();
    let mut derivs = t_lo.dq[..=cut].to_vec();
    let r_cut = nodes[cut];
    let outer: Vec<f64> = (1..).map(|k| r_cut + k as f64 * h).take_while(|&r| r <= cfg.r_max + 1e-9 * h).collect();
    let tail = match outer.last() {
        None => ExponentialTail::matched(params.dim(), r_cut, values[cut]),
        Some(&r_end) => {
            let (tail, q, dq) = inward_tail(&ode, r_cut, values[cut], r_end, outer.len());
            nodes.extend(&outer);
            values.extend(q.iter().rev().skip(1));
            derivs.extend(dq.iter().rev().skip(1));
            tail
        }
    };

    let profile =
        RadialProfile { r_max: *nodes.last().unwrap(), nodes, values, derivs, amplitude: 0.5 * (s_lo + s_hi), tail };
    let residual = (s_hi - s_lo) / s_hi;
    GroundStateData::from_profile(*params, profile, residual, &cfg.moment_exponents)
}

/// Beyond the separation radius the forward trajectory is useless, so the
/// decaying branch is integrated inward from `r_end`, starting on the linear
/// Bessel tail, with its amplitude fitted to hit `q_cut` at `r_cut`.
/// Returns the tail and the samples ordered from `r_end` down to `r_cut`.
fn inward_tail(
    ode: &RadialOde,
    r_cut: f64,
    q_cut: f64,
    r_end: f64,
    steps: usize,
) -> (ExponentialTail, Vec<f64>, Vec<f64>) {
    let h = (r_end - r_cut) / steps as f64;
    let unit = ExponentialTail::matched(ode.dim as usize, r_end, 1.0);
    let run = |amp: f64| {
        let (mut q, mut dq) = (amp, amp * unit.deriv(r_end));
        let (mut qs, mut dqs) = (vec![q], vec![dq]);
        for k in 0..steps {
            let r = r_end - k as f64 * h;
            (q, dq) = ode.rk4(r, -h, q, dq);
            qs.push(q);
            dqs.push(dq);
        }
        (qs, dqs)
    };
    let miss = |amp: f64| *run(amp).0.last().unwrap() - q_cut;
    let linear = ExponentialTail::matched(ode.dim as usize, r_cut, q_cut);
    let mut a0 = linear.value(r_end);
    let mut f0 = miss(a0);
    let mut amp = a0 * (1.0 - f0 / q_cut);
    for _ in 0..30 {
        let f1 = miss(amp);
        if f1.abs() <= 1e-15 * q_cut || f1 == f0 {
            break;
        }
        let next = amp - f1 * (amp - a0) / (f1 - f0);
        (a0, f0, amp) = (amp, f1, next);
    }
    let (qs, dqs) = run(amp);
    (ExponentialTail::matched(ode.dim as usize, r_end, amp), qs, dqs)
}

fn ode_for(params: &GNParams) -> RadialOde {
    RadialOde { dim: params.dim() as f64, b: params.b(), power: 1.0 + 2.0 * params.beta_sq() }
}

fn knot(ode: &RadialOde, p: &RadialProfile, k: usize) -> [f64; 3] {
    [p.values[k], p.derivs[k], ode.accel(p.nodes[k], p.values[k], p.derivs[k])]
}

impl GroundStateData {
    /// Recompute every derived constant from a profile.
    pub fn from_profile(
        params: GNParams,
        profile: RadialProfile,
        shooting_residual: f64,
        moment_exponents: &[f64],
    ) -> Result<Self> {
        let mut gs = GroundStateData {
            format_version: GROUND_STATE_FORMAT_VERSION,
            params,
            profile,
            l2_sq: 0.0,
            grad_sq: 0.0,
            nonlinear_int: 0.0,
            a_star: 0.0,
            moments: Vec::new(),
            shooting_residual,
        };
        gs.l2_sq = gs.integrate(Integrand::Mass);
        gs.grad_sq = gs.integrate(Integrand::Gradient);
        gs.nonlinear_int = gs.integrate(Integrand::Nonlinear);
        gs.a_star = gs.l2_sq.powf(params.beta_sq());
        for &p in moment_exponents {
            let value = gs.moment(p)?;
            gs.moments.push(MomentEntry { p, value });
        }
        Ok(gs)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_sq.sqrt()
    }

    fn startup(&self) -> Startup {
        Startup::new(&ode_for(&self.params), self.profile.amplitude)
    }

    /// `(Q(r), Q'(r))` for any `r >= 0`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let p = &self.profile;
        if r <= p.nodes[0] {
            let st = self.startup();
            return (st.value(r), st.deriv(r));
        }
        let last = p.nodes.len() - 1;
        if r >= p.nodes[last] {
            return (p.tail.value(r), p.tail.deriv(r));
        }
        let k = p.nodes.partition_point(|&x| x <= r) - 1;
        let h = p.nodes[k + 1] - p.nodes[k];
        let t = (r - p.nodes[k]) / h;
        let ode = ode_for(&self.params);
        quintic(t, h, knot(&ode, p, k), knot(&ode, p, k + 1))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    fn integrate(&self, kind: Integrand) -> f64 {
        let n = self.params.dim() as f64;
        let b = self.params.b();
        let qexp = self.params.nonlinear_power();
        let ode = ode_for(&self.params);
        let p = &self.profile;
        let weight_exp = match kind {
            Integrand::Mass | Integrand::Gradient => n - 1.0,
            Integrand::Nonlinear => n - 1.0 - b,
            Integrand::Moment(m) => n - 1.0 + m,
        };
        let f = |q: f64, dq: f64| match kind {
            Integrand::Mass | Integrand::Moment(_) => q * q,
            Integrand::Gradient => dq * dq,
            Integrand::Nonlinear => q.abs().powf(qexp),
        };

        let mut total = self.origin_piece(kind, weight_exp);
        for k in 0..p.nodes.len() - 1 {
            let (r0, r1) = (p.nodes[k], p.nodes[k + 1]);
            let h = r1 - r0;
            let (k0, k1) = (knot(&ode, p, k), knot(&ode, p, k + 1));
            let mut cell = 0.0;
            for (x, w) in GL_X.iter().zip(GL_W) {
                let t = 0.5 * (x + 1.0);
                let r = r0 + t * h;
                let (q, dq) = quintic(t, h, k0, k1);
                cell += w * r.powf(weight_exp) * f(q, dq);
            }
            total += 0.5 * h * cell;
        }
        sphere_area(self.params.dim()) * total
    }

    /// Closed-form integral over `[0, r0]` of the startup expansion.
    fn origin_piece(&self, kind: Integrand, weight_exp: f64) -> f64 {
        let st = self.startup();
        let r0 = self.profile.nodes[0];
        let q: Vec<(f64, f64)> = st.q_terms().collect();
        // ∫_0^{r0} r^{w + e} dr for a product of two monomials
        let mono = |c: f64, e: f64| c * r0.powf(weight_exp + e + 1.0) / (weight_exp + e + 1.0);
        let pair_sum = |a: &[(f64, f64)], b: &[(f64, f64)]| -> f64 {
            a.iter().flat_map(|&(ea, ca)| b.iter().map(move |&(eb, cb)| mono(ca * cb, ea + eb))).sum()
        };
        match kind {
            Integrand::Mass | Integrand::Moment(_) => pair_sum(&q, &q),
            Integrand::Gradient => {
                // Q' = Σ c e r^{e-1}; shift the exponent back by one per factor
                let dq: Vec<(f64, f64)> = q.iter().filter(|t| t.0 > 0.0).map(|&(e, c)| (e - 1.0, c * e)).collect();
                pair_sum(&dq, &dq)
            }
            Integrand::Nonlinear => {
                let pw: Vec<(f64, f64)> = st.pow_terms().collect();
                pair_sum(&q, &pw)
            }
        }
    }

    /// `(∫|x|^p Q², tail bound beyond r_max)`.
    pub fn moment_estimate(&self, p: f64) -> (f64, f64) {
        let value = self.integrate(Integrand::Moment(p));
        let r = self.profile.r_max;
        let q = self.value(r);
        let n = self.params.dim() as f64;
        // Q² ~ e^{-2r} beyond r_max
        let tail = sphere_area(self.params.dim()) * q * q * r.powf(n - 1.0 + p) * 0.5;
        (value, tail)
    }

    /// `∫_{R^N} |x|^p Q² dx` with the default relative accuracy `1e-10`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        self.moment_with_tol(p, 1e-10)
    }

    pub fn moment_with_tol(&self, p: f64, tol: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(Error::InvalidParams(format!("moment exponent {p} must be nonnegative")));
        }
        if p == 0.0 {
            return Ok(self.l2_sq);
        }
        let (value, tail) = self.moment_estimate(p);
        if tail > tol * value.abs() {
            return Err(Error::TailUnresolved { estimate: tail, tol: tol * value.abs() });
        }
        Ok(value)
    }

    /// Limit profile `β^{N/2} Q(β|x|) / ‖Q‖₂` of the rescaled minimizers.
    pub fn limit_profile(&self, x: f64) -> f64 {
        let beta = self.params.beta_sq().sqrt();
        beta.powf(0.5 * self.params.dim() as f64) * self.value(beta * x.abs()) / self.l2_norm()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let gs: GroundStateData = serde_json::from_str(text)?;
        if gs.format_version != GROUND_STATE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "ground-state document version {} (expected {})",
                gs.format_version, GROUND_STATE_FORMAT_VERSION
            )));
        }
        Ok(gs)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    /// `|∫|∇Q|² - ‖Q‖²/β²| / ‖Q‖²`
    pub kinetic_mass: f64,
    /// `|∫|∇Q|² - ∫|x|^{-b}Q^{2+2β²}/(1+β²)| / ∫|∇Q|²`
    pub kinetic_nonlinear: f64,
    pub shooting: f64,
    pub pass: bool,
}

pub fn verify_identities(gs: &GroundStateData, tol: f64) -> IdentityReport {
    let bs = gs.params.beta_sq();
    let kinetic_mass = (gs.grad_sq - gs.l2_sq / bs).abs() / gs.l2_sq;
    let kinetic_nonlinear = (gs.grad_sq - gs.nonlinear_int / (1.0 + bs)).abs() / gs.grad_sq;
    let shooting = gs.shooting_residual;
    IdentityReport {
        kinetic_mass,
        kinetic_nonlinear,
        shooting,
        pass: kinetic_mass < tol && kinetic_nonlinear < tol && shooting < tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_sq_is_derived() {
        let p = GNParams::new(1, 0.5, 0.0).unwrap();
        assert_eq!(p.beta_sq(), 1.5);
        assert_eq!(p.nonlinear_power(), 5.0);
        let p = GNParams::new(3, 1.0, 0.0).unwrap();
        assert!((p.beta_sq() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn params_reject_out_of_range_b() {
        assert!(GNParams::new(1, 1.0, 0.0).is_err());
        assert!(GNParams::new(2, 2.0, 0.0).is_err());
        assert!(GNParams::new(3, 0.0, 0.0).is_err());
        assert!(GNParams::new(0, 0.5, 0.0).is_err());
        assert!(GNParams::new(1, 0.5, -1.0).is_err());
    }

    #[test]
    fn params_json_ignores_beta() {
        let p = GNParams::new(2, 0.5, 1.0).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(!text.contains("beta"));
        let back: GNParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<GNParams>(r#"{"dim":1,"b":1.5,"a":0}"#).is_err());
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert_eq!(sphere_area(1), 2.0);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn startup_singular_for_large_r0() {
        let p = GNParams::new(1, 0.5, 0.0).unwrap();
        let cfg = ShootingConfig { r0: 0.5, ..Default::default() };
        assert!(matches!(solve_ground_state(&p, &cfg), Err(Error::SingularStartup { .. })));
    }

    #[test]
    fn bracket_failure_on_narrow_range() {
        let p = GNParams::new(1, 0.5, 0.0).unwrap();
        let cfg = ShootingConfig { s_min: 2.0, s_max: 5.0, ..Default::default() };
        assert!(matches!(solve_ground_state(&p, &cfg), Err(Error::BracketFailure { .. })));
    }
}
