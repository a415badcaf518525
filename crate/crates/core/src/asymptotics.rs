//! Sweeps `a ↗ a*` with warm starts, rescaled profiles and scaling-law fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::archive::csv_table;
use crate::discretization::GridFunction;
use crate::error::{Error, Result};
use crate::groundstate::GroundStateData;
use crate::potential::LambdaConstant;
use crate::variational::{minimize_with, FlowConfig, Functional, MinimizerResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub a: f64,
    /// `a* - a`
    pub gap: f64,
    pub energy: f64,
    pub eps: f64,
    pub mu: f64,
    pub profile_err_l2: f64,
    pub profile_err_sup: f64,
    pub iterations: usize,
    /// `|μ - μ_EL|`, the multiplier identity re-checked against the
    /// residual-minimizing multiplier.
    pub multiplier_defect: f64,
    pub residual: f64,
}

/// One row per record; columns `a, gap, energy, eps, mu, errL2, errSup, iters`.
pub fn sweep_csv(records: &[SweepRecord]) -> String {
    csv_table(
        &[
            ("a", "coupling"),
            ("gap", "a* - a"),
            ("energy", "e(a)"),
            ("eps", "(kinetic)^(-1/2)"),
            ("mu", "Lagrange multiplier"),
            ("errL2", "L2 distance of the rescaled minimizer to the limit profile"),
            ("errSup", "sup distance of the same"),
            ("iters", "gradient-flow iterations"),
        ],
        records
            .iter()
            .map(|r| vec![r.a, r.gap, r.energy, r.eps, r.mu, r.profile_err_l2, r.profile_err_sup, r.iterations as f64]),
    )
}

/// `points` gaps `a* - a` geometric from `widest·a*` to `tightest·a*`,
/// returned as an increasing schedule of `a`.
pub fn gap_schedule(a_star: f64, widest: f64, tightest: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(0.0 < tightest && tightest < widest && widest < 1.0) {
        return Err(Error::InvalidParams(format!(
            "gap schedule needs 0 < tightest < widest < 1 and 2+ points (got {widest}, {tightest}, {points})"
        )));
    }
    let ratio = (tightest / widest).powf(1.0 / (points - 1) as f64);
    Ok((0..points).map(|k| a_star * (1.0 - widest * ratio.powi(k as i32))).collect())
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// False when a point failed; `records` then holds the prefix.
    pub complete: bool,
    pub failure: Option<String>,
    /// Minimizer at the last successful `a`.
    pub last: Option<MinimizerResult>,
    pub warnings: Vec<String>,
}

/// One minimization per `a`, each warm-started from the previous minimizer.
pub fn run_sweep(
    schedule: &[f64],
    functional: &Functional,
    gs: &GroundStateData,
    init: &GridFunction,
    flow: &FlowConfig,
) -> Result<SweepOutcome> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams("a schedule must be strictly increasing".into()));
    }
    if let Some(&a) = schedule.iter().find(|&&a| !(a > 0.0 && a < gs.a_star)) {
        return Err(Error::InvalidParams(format!("a = {a} outside (0, a*) with a* = {}", gs.a_star)));
    }
    let mut records = Vec::with_capacity(schedule.len());
    let mut warnings = Vec::new();
    let mut start = init.clone();
    let mut last = None;
    for &a in schedule {
        let f = functional.with_a(a)?;
        let result = match minimize_with(&f, &start, flow) {
            Ok(r) => r,
            Err(e) => {
                return Ok(SweepOutcome {
                    records,
                    complete: false,
                    failure: Some(format!("a = {a}: {e}")),
                    last,
                    warnings,
                })
            }
        };
        let (_, err_l2, err_sup) = rescale_minimizer(&result, gs);
        let mu_el = f.residual_minimizing_multiplier(result.u.values());
        records.push(SweepRecord {
            a,
            gap: gs.a_star - a,
            energy: result.energy,
            eps: result.eps,
            mu: result.mu,
            profile_err_l2: err_l2,
            profile_err_sup: err_sup,
            iterations: result.iterations,
            multiplier_defect: (result.mu - mu_el).abs(),
            residual: result.residual,
        });
        start = result.u.clone();
        last = Some(result);
    }
    if let Some(r) = &last {
        let reach = r.u.grid().domain().dist_to_boundary() / r.eps;
        if reach < 20.0 {
            warnings.push(format!("domain reaches only {reach:.1} ε_a from the origin at the tightest gap"));
        }
    }
    Ok(SweepOutcome { records, complete: true, failure: None, last, warnings })
}

/// `w(x) = ε^{N/2} u(εx)` on the native nodes `x_i/ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledProfile {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub scale: f64,
    /// Rescaled finite-volume mass weights; `Σ weights·values² = ‖u‖²`.
    pub weights: Vec<f64>,
}

impl RescaledProfile {
    /// Cubic Lagrange interpolation through the four nearest nodes; zero
    /// outside the rescaled domain.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if n < 4 || x < self.nodes[0] || x > self.nodes[n - 1] {
            return 0.0;
        }
        let k = self.nodes.partition_point(|&t| t <= x).clamp(2, n - 2);
        let idx = [k - 2, k - 1, k, k + 1];
        idx.iter()
            .map(|&i| {
                let basis: f64 = idx
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (x - self.nodes[j]) / (self.nodes[i] - self.nodes[j]))
                    .product();
                basis * self.values[i]
            })
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v * v).sum()
    }
}

/// Rescaled minimizer and its (L², sup) distance to `β^{N/2}Q(β|x|)/‖Q‖₂`.
/// Both are evaluated at the native nodes, so the peak is never smeared by
/// interpolation. The L² error covers the rescaled domain only.
pub fn rescale_minimizer(result: &MinimizerResult, gs: &GroundStateData) -> (RescaledProfile, f64, f64) {
    let grid = result.u.grid();
    let eps = result.eps;
    let n = grid.dim() as f64;
    let amp = eps.powf(0.5 * n);
    let nodes: Vec<f64> = grid.nodes().iter().map(|x| x / eps).collect();
    let values: Vec<f64> = result.u.values().iter().map(|u| amp * u).collect();
    let weights: Vec<f64> = grid.mass_weights().iter().map(|m| m / eps.powf(n)).collect();
    let mut sup: f64 = 0.0;
    let mut l2 = 0.0;
    for ((x, w), m) in nodes.iter().zip(&values).zip(&weights) {
        let lim = gs.limit_profile(*x);
        sup = sup.max((w - lim).abs());
        l2 += m * (w - lim).powi(2);
    }
    let profile = RescaledProfile { nodes, values, scale: eps, weights };
    (profile, l2.sqrt(), sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    /// 95% confidence half-width of the exponent.
    pub half_width: f64,
    /// `exp(intercept)` of the free fit.
    pub prefactor_free: f64,
    /// Geometric mean of `y/gap^{predicted exponent}` over the fitted records.
    pub prefactor_pinned: f64,
    pub predicted_exponent: f64,
    pub predicted_prefactor: f64,
    pub exponent_pass: bool,
    pub prefactor_pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitTolerances {
    /// Half-width of the accepted band around the energy exponent.
    pub energy_exponent: f64,
    pub eps_exponent: f64,
    /// Relative tolerance on the prefactors.
    pub prefactor: f64,
    /// Widest-gap records left out as pre-asymptotic.
    pub skip_widest: usize,
}

impl Default for FitTolerances {
    fn default() -> Self {
        Self { energy_exponent: 0.025, eps_exponent: 0.0125, prefactor: 0.10, skip_widest: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub energy: PowerFit,
    pub eps: PowerFit,
    pub records_used: usize,
    pub gap_span_decades: f64,
}

/// Closed-form limits of `e(a)/(a*-a)^{p/(p+2)}` and `ε_a/(a*-a)^{1/(p+2)}`.
pub fn predicted_prefactors(gs: &GroundStateData, lambda: &LambdaConstant) -> (f64, f64) {
    let p = lambda.p;
    let bs = gs.params.beta_sq();
    let energy =
        (p + 2.0) / p * lambda.lambda.powi(2) * gs.l2_sq.powf(-2.0 / (p + 2.0)) * (gs.a_star * bs).powf(-p / (p + 2.0));
    let eps = (gs.l2_sq * bs.powf(0.5 * p) / gs.a_star).powf(1.0 / (p + 2.0)) / lambda.lambda;
    (energy, eps)
}

/// Lemma-type upper bound `(p+2)/p λ² ‖Q‖^{-4/(p+2)} ((a*-a)/(a*β²))^{p/(p+2)}`.
pub fn energy_upper_bound(gap: f64, gs: &GroundStateData, lambda: &LambdaConstant) -> f64 {
    predicted_prefactors(gs, lambda).0 * gap.powf(lambda.p / (lambda.p + 2.0))
}

pub fn fit_scaling_laws(
    records: &[SweepRecord],
    gs: &GroundStateData,
    lambda: &LambdaConstant,
    tol: &FitTolerances,
) -> Result<ScalingFit> {
    let mut used: Vec<&SweepRecord> = records.iter().collect();
    used.sort_by(|x, y| y.gap.total_cmp(&x.gap));
    let used: Vec<&SweepRecord> = used.into_iter().skip(tol.skip_widest).collect();
    let span = match (used.first(), used.last()) {
        (Some(w), Some(t)) => (w.gap / t.gap).log10(),
        _ => 0.0,
    };
    if used.len() < 5 || span < 1.0 - 1e-9 {
        return Err(Error::InsufficientSpan { needed: 5, got: used.len(), span });
    }
    let p = lambda.p;
    let (pe, pv) = predicted_prefactors(gs, lambda);
    let x: Vec<f64> = used.iter().map(|r| r.gap.ln()).collect();
    let fit = |y: Vec<f64>, exponent: f64, prefactor: f64, band: f64| -> Result<PowerFit> {
        let (slope, intercept, se) = linear_fit(&x, &y);
        let t = StudentsT::new(0.0, 1.0, (x.len() - 2) as f64)
            .map_err(|e| Error::InvalidParams(e.to_string()))?
            .inverse_cdf(0.975);
        let pinned = (y.iter().zip(&x).map(|(y, x)| y - exponent * x).sum::<f64>() / x.len() as f64).exp();
        Ok(PowerFit {
            exponent: slope,
            half_width: t * se,
            prefactor_free: intercept.exp(),
            prefactor_pinned: pinned,
            predicted_exponent: exponent,
            predicted_prefactor: prefactor,
            exponent_pass: (slope - exponent).abs() <= band,
            prefactor_pass: (pinned / prefactor - 1.0).abs() <= tol.prefactor,
        })
    };
    if used.iter().any(|r| !(r.energy > 0.0 && r.eps > 0.0)) {
        return Err(Error::InvalidParams("energies and eps must be positive to fit in log scale".into()));
    }
    Ok(ScalingFit {
        energy: fit(used.iter().map(|r| r.energy.ln()).collect(), p / (p + 2.0), pe, tol.energy_exponent)?,
        eps: fit(used.iter().map(|r| r.eps.ln()).collect(), 1.0 / (p + 2.0), pv, tol.eps_exponent)?,
        records_used: used.len(),
        gap_span_decades: span,
    })
}

/// Ordinary least squares `y = slope·x + intercept`; returns the standard
/// error of the slope.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let se = if n > 2.0 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, intercept, se)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitTolerances {
    /// On `|μ ε² + β²|/β²` at the tightest gap.
    pub multiplier: f64,
    /// Required `e(tightest)/e(widest)` upper limit when `V(0) = 0`.
    pub energy_ratio: f64,
    /// Relative slack on the upper energy bound.
    pub bound_slack: f64,
    /// Profile sup error allowed at the tightest gap.
    pub profile_sup: f64,
    /// Records in the tail that must show decreasing profile error.
    pub profile_tail: usize,
}

impl Default for LimitTolerances {
    fn default() -> Self {
        Self { multiplier: 0.05, energy_ratio: 0.10, bound_slack: 0.05, profile_sup: 0.05, profile_tail: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub mu_eps_sq: f64,
    pub mu_rel_err: f64,
    pub multiplier_pass: bool,
    /// `e(tightest)/e(widest)`
    pub energy_ratio: f64,
    pub v0: f64,
    pub energy_trend_pass: bool,
    pub worst_bound_ratio: f64,
    pub bound_pass: bool,
    pub energy_monotone: bool,
    pub eps_monotone: bool,
    pub profile_sup_tightest: f64,
    pub profile_monotone_tail: bool,
    pub profile_pass: bool,
}

/// Records must come from one sweep, sorted by increasing `a`.
pub fn check_limits(
    records: &[SweepRecord],
    gs: &GroundStateData,
    lambda: &LambdaConstant,
    v0: f64,
    tol: &LimitTolerances,
) -> Result<LimitReport> {
    let (widest, tightest) = match (records.first(), records.last()) {
        (Some(w), Some(t)) if records.len() >= 2 => (w, t),
        _ => return Err(Error::InsufficientSpan { needed: 2, got: records.len(), span: 0.0 }),
    };
    let bs = gs.params.beta_sq();
    let mu_eps_sq = tightest.mu * tightest.eps * tightest.eps;
    let mu_rel_err = (mu_eps_sq + bs).abs() / bs;
    let energy_ratio = tightest.energy / widest.energy;
    // with V(0) > 0 the limit is V(0) itself: require approach from below
    let energy_trend_pass = if v0 == 0.0 {
        energy_ratio.abs() < tol.energy_ratio
    } else {
        (tightest.energy - v0).abs() < (widest.energy - v0).abs()
    };
    let worst_bound_ratio =
        records.iter().map(|r| r.energy / energy_upper_bound(r.gap, gs, lambda)).fold(f64::NEG_INFINITY, f64::max);
    let decreasing =
        |f: &dyn Fn(&SweepRecord) -> f64, tail: &[SweepRecord]| tail.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let tail = &records[records.len().saturating_sub(tol.profile_tail)..];
    let profile_monotone_tail = decreasing(&|r| r.profile_err_sup, tail);
    Ok(LimitReport {
        mu_eps_sq,
        mu_rel_err,
        multiplier_pass: mu_rel_err < tol.multiplier,
        energy_ratio,
        v0,
        energy_trend_pass,
        worst_bound_ratio,
        bound_pass: v0 != 0.0 || worst_bound_ratio <= 1.0 + tol.bound_slack,
        energy_monotone: decreasing(&|r| r.energy, records),
        eps_monotone: decreasing(&|r| r.eps, records),
        profile_sup_tightest: tightest.profile_err_sup,
        profile_monotone_tail,
        profile_pass: tightest.profile_err_sup < tol.profile_sup && profile_monotone_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{solve_ground_state, GNParams, ShootingConfig};

    fn synthetic(gaps: &[f64], ce: f64, cv: f64, noise: f64) -> Vec<SweepRecord> {
        gaps.iter()
            .enumerate()
            .map(|(k, &g)| SweepRecord {
                a: 1.0 - g,
                gap: g,
                energy: ce * g.sqrt() * (1.0 + noise * (k as f64).sin()),
                eps: cv * g.powf(0.25),
                mu: -1.5 / (cv * cv * g.sqrt()),
                profile_err_l2: 0.0,
                profile_err_sup: 0.0,
                iterations: 1,
                multiplier_defect: 0.0,
                residual: 0.0,
            })
            .collect()
    }

    fn gs() -> GroundStateData {
        solve_ground_state(&GNParams::new(1, 0.5, 0.0).unwrap(), &ShootingConfig { steps: 4096, ..Default::default() })
            .unwrap()
    }

    fn lam(gs: &GroundStateData) -> LambdaConstant {
        LambdaConstant { p: 2.0, lambda: 1.0, moment: 2.0 * gs.moment(2.0).unwrap(), l0: 1.0 }
    }

    #[test]
    fn schedule_is_geometric() {
        let s = gap_schedule(2.0, 0.1, 1e-3, 8).unwrap();
        assert_eq!(s.len(), 8);
        assert!((2.0 - s[0] - 0.2).abs() < 1e-15 && (2.0 - s[7] - 2e-3).abs() < 1e-14);
        let r: Vec<f64> = s.windows(2).map(|w| (2.0 - w[1]) / (2.0 - w[0])).collect();
        assert!(r.iter().all(|x| (x - r[0]).abs() < 1e-12));
        assert!(gap_schedule(2.0, 1e-3, 0.1, 8).is_err());
    }

    #[test]
    fn exact_power_laws_are_recovered() {
        let gs = gs();
        let l = lam(&gs);
        let (pe, pv) = predicted_prefactors(&gs, &l);
        let gaps: Vec<f64> = (0..8).map(|k| 0.1 * 0.5f64.powi(k)).chain([1e-3, 5e-4]).collect();
        let fit = fit_scaling_laws(&synthetic(&gaps, pe, pv, 0.0), &gs, &l, &FitTolerances::default()).unwrap();
        assert!((fit.energy.exponent - 0.5).abs() < 1e-12 && (fit.eps.exponent - 0.25).abs() < 1e-12);
        assert!((fit.energy.prefactor_pinned / pe - 1.0).abs() < 1e-10);
        assert!(fit.energy.exponent_pass && fit.eps.prefactor_pass);
        assert!(fit.energy.half_width < 1e-10);
        let noisy = fit_scaling_laws(&synthetic(&gaps, pe, pv, 0.05), &gs, &l, &FitTolerances::default()).unwrap();
        assert!(noisy.energy.half_width > 1e-3);
    }

    #[test]
    fn predicted_exponents() {
        let gs = gs();
        let gaps: Vec<f64> = (0..8).map(|k| 0.1 * 0.5f64.powi(k)).collect();
        let records = synthetic(&gaps, 1.0, 1.0, 0.0);
        let one = LambdaConstant { p: 1.0, ..lam(&gs) };
        let fit =
            fit_scaling_laws(&records, &gs, &one, &FitTolerances { skip_widest: 0, ..Default::default() }).unwrap();
        assert!((fit.energy.predicted_exponent - 1.0 / 3.0).abs() < 1e-15);
        assert!(!fit.energy.exponent_pass);
    }

    #[test]
    fn short_span_is_rejected() {
        let gs = gs();
        let gaps = [0.1, 0.08, 0.06, 0.05, 0.04, 0.03, 0.02];
        let err = fit_scaling_laws(&synthetic(&gaps, 1.0, 1.0, 0.0), &gs, &lam(&gs), &FitTolerances::default());
        assert!(matches!(err, Err(Error::InsufficientSpan { .. })));
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let nodes: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64 + 0.01 * (i as f64).sin()).collect();
        let cubic = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let p = RescaledProfile {
            values: nodes.iter().map(|&x| cubic(x)).collect(),
            weights: vec![0.0; nodes.len()],
            nodes,
            scale: 1.0,
        };
        for x in [-0.95, -0.33, 0.0, 0.41, 0.88] {
            assert!((p.value_at(x) - cubic(x)).abs() < 1e-12);
        }
        assert_eq!(p.value_at(5.0), 0.0);
    }
}
