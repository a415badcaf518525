//! Trapping potentials `V(x) = h(x)|x|^{p0} ∏|x - x_i|^{p_i}` and the
//! concentration constant `λ = ((p/2) ∫|x|^p Q² · L₀)^{1/(p+2)}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::discretization::{Domain, Grid};
use crate::error::{Error, Result};
use crate::groundstate::GroundStateData;

/// The bounded positive factor `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HFactor {
    Constant {
        value: f64,
    },
    /// `Σ c_k |x|^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// Linear interpolation through `(x, h)` pairs sorted by `x`, held
    /// constant beyond the end points.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

impl HFactor {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            HFactor::Constant { value } => *value,
            HFactor::Polynomial { coeffs } => {
                let r = x.abs();
                coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
            }
            HFactor::Tabulated { points } => interpolate(points, x),
        }
    }

    /// `h(0)` when it is available in closed form.
    fn at_origin(&self) -> Option<f64> {
        match self {
            HFactor::Constant { value } => Some(*value),
            HFactor::Polynomial { coeffs } => Some(coeffs.first().copied().unwrap_or(0.0)),
            HFactor::Tabulated { .. } => None,
        }
    }
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    match points {
        [] => f64::NAN,
        [(_, y)] => *y,
        _ => {
            let k = points.partition_point(|p| p.0 <= x);
            if k == 0 {
                return points[0].1;
            }
            if k == points.len() {
                return points[k - 1].1;
            }
            let ((x0, y0), (x1, y1)) = (points[k - 1], points[k]);
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zero {
    pub location: f64,
    pub exponent: f64,
}

/// `V(x) = h(x)|x|^{p0} ∏|x - x_i|^{p_i}`. On ball domains `x` is the
/// radial coordinate and only the origin zero makes sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub h: HFactor,
    pub p0: f64,
    #[serde(default)]
    pub zeros: Vec<Zero>,
}

impl PotentialSpec {
    /// `h ≡ c`, `V = c|x|^p`.
    pub fn power(c: f64, p: f64) -> Self {
        Self { h: HFactor::Constant { value: c }, p0: p, zeros: Vec::new() }
    }

    pub fn with_zero(mut self, location: f64, exponent: f64) -> Self {
        self.zeros.push(Zero { location, exponent });
        self
    }

    /// `V(x)` without a domain check.
    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 || self.zeros.iter().any(|z| z.location == x) {
            return 0.0;
        }
        self.h.eval(x) * x.abs().powf(self.p0) * self.cofactor(x)
    }

    fn cofactor(&self, x: f64) -> f64 {
        self.zeros.iter().map(|z| (x - z.location).abs().powf(z.exponent)).product()
    }

    /// `V` at every node of `grid`.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x)).collect()
    }

    /// `L₀ = lim_{x→0} h(x) ∏|x - x_i|^{p_i}`.
    pub fn origin_limit(&self) -> f64 {
        match self.h.at_origin() {
            Some(h0) => h0 * self.cofactor(0.0),
            None => self.extrapolated_limit(),
        }
    }

    /// Richardson extrapolation of `h(x)∏|x - x_i|^{p_i}` along a dyadic
    /// sequence `x → 0+`.
    fn extrapolated_limit(&self) -> f64 {
        const LEVELS: usize = 8;
        let nearest = self.zeros.iter().map(|z| z.location.abs()).fold(1.0, f64::min);
        let start = 0.25 * nearest;
        let f = |x: f64| self.h.eval(x) * self.cofactor(x);
        let mut table: Vec<f64> = (0..LEVELS).map(|k| f(start * 0.5f64.powi(k as i32))).collect();
        // halving steps: error terms c1 x + c2 x² + ...
        for level in 1..LEVELS {
            let factor = 2f64.powi(level as i32);
            for k in (level..LEVELS).rev() {
                table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
            }
        }
        table[LEVELS - 1]
    }
}

/// `V(x)` after checking `x ∈ Ω̄`.
pub fn eval_potential(spec: &PotentialSpec, domain: &Domain, x: f64) -> Result<f64> {
    if !domain.contains(x) {
        return Err(Error::OutsideDomain(x));
    }
    Ok(spec.eval(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaConstant {
    pub p: f64,
    pub lambda: f64,
    /// `∫|x|^p Q² dx`
    pub moment: f64,
    /// `lim_{x→0} h(x)∏|x - x_i|^{p_i}`
    pub l0: f64,
}

pub fn compute_lambda(spec: &PotentialSpec, gs: &GroundStateData) -> Result<LambdaConstant> {
    let p = spec.p0;
    let moment = gs.moment(p)?;
    let l0 = spec.origin_limit();
    let lambda = (0.5 * p * moment * l0).powf(1.0 / (p + 2.0));
    Ok(LambdaConstant { p, lambda, moment, l0 })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OriginExponent(f64),
    ZeroExponent {
        location: f64,
        exponent: f64,
    },
    ZeroOutsideDomain(f64),
    ZeroAtOrigin,
    DuplicateZero(f64),
    /// Zeros away from the origin break radial symmetry.
    ZeroOnRadialDomain(f64),
    HNotPositive {
        x: f64,
        h: f64,
    },
    Negative {
        x: f64,
        v: f64,
    },
    UnsortedTable,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OriginExponent(p) => write!(f, "origin exponent must be positive (p0 = {p})"),
            Violation::ZeroExponent { location, exponent } => {
                write!(f, "zero at {location} has nonpositive exponent {exponent}")
            }
            Violation::ZeroOutsideDomain(x) => write!(f, "zero outside domain at {x}"),
            Violation::ZeroAtOrigin => write!(f, "extra zero placed at the origin"),
            Violation::DuplicateZero(x) => write!(f, "zero at {x} listed twice"),
            Violation::ZeroOnRadialDomain(x) => write!(f, "zero at {x} on a radially reduced domain"),
            Violation::HNotPositive { x, h } => write!(f, "h({x}) = {h} is not positive and finite"),
            Violation::Negative { x, v } => write!(f, "V({x}) = {v} < 0"),
            Violation::UnsortedTable => write!(f, "tabulated h is not sorted by x"),
        }
    }
}

/// Structural checks plus a dense sampling of `h` and `V` on the domain.
pub fn validate_assumptions(spec: &PotentialSpec, domain: &Domain) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(spec.p0 > 0.0) {
        out.push(Violation::OriginExponent(spec.p0));
    }
    for (i, z) in spec.zeros.iter().enumerate() {
        if !(z.exponent > 0.0) {
            out.push(Violation::ZeroExponent { location: z.location, exponent: z.exponent });
        }
        if z.location == 0.0 {
            out.push(Violation::ZeroAtOrigin);
        }
        if matches!(domain, Domain::Ball { .. }) {
            out.push(Violation::ZeroOnRadialDomain(z.location));
        } else if !interior(domain, z.location) {
            out.push(Violation::ZeroOutsideDomain(z.location));
        }
        if spec.zeros[..i].iter().any(|w| w.location == z.location) {
            out.push(Violation::DuplicateZero(z.location));
        }
    }
    if let HFactor::Tabulated { points } = &spec.h {
        if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            out.push(Violation::UnsortedTable);
        }
    }
    let (lo, hi) = match *domain {
        Domain::Interval { lo, hi } => (lo, hi),
        Domain::Ball { radius, .. } => (0.0, radius),
    };
    const SAMPLES: usize = 4096;
    for k in 0..=SAMPLES {
        let x = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        let h = spec.h.eval(x);
        if !(h > 0.0 && h.is_finite()) {
            out.push(Violation::HNotPositive { x, h });
            break;
        }
        let v = spec.eval(x);
        if v < 0.0 {
            out.push(Violation::Negative { x, v });
            break;
        }
    }
    out
}

fn interior(domain: &Domain, x: f64) -> bool {
    match *domain {
        Domain::Interval { lo, hi } => lo < x && x < hi,
        Domain::Ball { radius, .. } => x.abs() < radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> Domain {
        Domain::interval(-1.0, 1.0).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let v = PotentialSpec::power(1.0, 2.0);
        assert_eq!(eval_potential(&v, &interval(), 0.5).unwrap(), 0.25);
        assert_eq!(eval_potential(&v, &interval(), 0.0).unwrap(), 0.0);
        let w = v.with_zero(0.7, 1.0);
        assert_eq!(w.eval(0.7), 0.0);
        assert!((w.eval(0.35) - 0.042875).abs() < 1e-15);
        assert!(matches!(eval_potential(&w, &interval(), 1.5), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn polynomial_and_table() {
        let h = HFactor::Polynomial { coeffs: vec![1.0, 0.0, 2.0] };
        assert_eq!(h.eval(-0.5), 1.5);
        let t = HFactor::Tabulated { points: vec![(-1.0, 2.0), (0.0, 1.0), (1.0, 3.0)] };
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(-0.5), 1.5);
        assert_eq!(t.eval(5.0), 3.0);
    }

    #[test]
    fn origin_limit_closed_form_and_extrapolated() {
        let spec = PotentialSpec::power(1.0, 2.0).with_zero(0.7, 2.0);
        assert!((spec.origin_limit() - 0.49).abs() < 1e-15);
        // tabulated h equal to 1 + x near the origin: limit 1 · 0.49
        let tab = PotentialSpec { h: HFactor::Tabulated { points: vec![(-1.0, 0.0), (1.0, 2.0)] }, ..spec.clone() };
        assert!((tab.origin_limit() - 0.49).abs() < 1e-12, "{}", tab.origin_limit());
    }

    #[test]
    fn violations_are_reported() {
        assert!(validate_assumptions(&PotentialSpec::power(1.0, 2.0), &interval()).is_empty());
        let bad = PotentialSpec::power(1.0, 2.0).with_zero(1.5, 1.0);
        let v = validate_assumptions(&bad, &interval());
        assert_eq!(v, vec![Violation::ZeroOutsideDomain(1.5)]);
        assert_eq!(v[0].to_string(), "zero outside domain at 1.5");
        let flat = PotentialSpec::power(1.0, 0.0);
        assert_eq!(
            validate_assumptions(&flat, &interval())[0].to_string(),
            "origin exponent must be positive (p0 = 0)"
        );
        let neg = PotentialSpec { h: HFactor::Constant { value: -1.0 }, p0: 2.0, zeros: vec![] };
        assert!(matches!(validate_assumptions(&neg, &interval())[0], Violation::HNotPositive { .. }));
    }

    #[test]
    fn spec_toml_round_trip() {
        let spec = PotentialSpec::power(2.0, 2.0).with_zero(0.7, 1.0);
        let text = toml::to_string(&spec).unwrap();
        assert_eq!(toml::from_str::<PotentialSpec>(&text).unwrap(), spec);
    }
}
