//! Run configuration: a TOML file with one table per stage. Unknown keys
//! are rejected; every table has defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretization::Domain;
use crate::error::{Error, Result};
use crate::groundstate::{GNParams, ShootingConfig};
use crate::potential::PotentialSpec;
use crate::variational::FlowConfig;
use crate::verify::VerifySettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    pub b: f64,
    /// Absolute coupling; takes precedence over `a_mult`.
    pub a: Option<f64>,
    /// Coupling as a multiple of `a*`.
    pub a_mult: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { dim: 1, b: 0.5, a: None, a_mult: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub resolution: usize,
    /// Defaults to `(-5, 5)` for `N = 1` and the ball of radius 5 otherwise.
    pub shape: Option<Domain>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { resolution: 4000, shape: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Widest and tightest gap as fractions of `a*`.
    pub widest: f64,
    pub tightest: f64,
    pub points: usize,
    pub skip_widest: usize,
    /// Explicit increasing multiples of `a*`; overrides the geometric gaps.
    pub a_mults: Option<Vec<f64>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { widest: 0.1, tightest: 1e-3, points: 8, skip_widest: 2, a_mults: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonexistConfig {
    pub a_mult: f64,
    pub taus: Vec<f64>,
    pub cutoff_radius: Option<f64>,
}

impl Default for NonexistConfig {
    fn default() -> Self {
        Self { a_mult: 1.2, taus: vec![5.0, 10.0, 20.0, 40.0], cutoff_radius: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessConfig {
    pub a_mult: f64,
    pub starts: usize,
    pub l2_tol: f64,
    pub energy_tol: f64,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        Self { a_mult: 0.99, starts: 10, l2_tol: 1e-4, energy_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnCheckConfig {
    pub samples: usize,
    pub taus: Vec<f64>,
    /// Small by default: the continuum excess of `Φ_τ` decays like
    /// `exp(-2τR)` and must stay above the discretization error.
    pub cutoff_radius: Option<f64>,
    /// Resolution of the grid used for the `Φ_τ` family.
    pub trial_resolution: usize,
}

impl Default for GnCheckConfig {
    fn default() -> Self {
        Self { samples: 1000, taus: vec![5.0, 10.0, 20.0, 40.0], cutoff_radius: Some(0.1), trial_resolution: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub problem: ProblemConfig,
    pub domain: DomainConfig,
    pub potential: PotentialSpec,
    pub flow: FlowConfig,
    pub ground_state: ShootingConfig,
    pub sweep: SweepConfig,
    pub nonexist: NonexistConfig,
    pub uniqueness: UniquenessConfig,
    pub gn_check: GnCheckConfig,
    pub verify: VerifySettings,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            problem: ProblemConfig::default(),
            domain: DomainConfig::default(),
            potential: PotentialSpec::power(1.0, 2.0),
            flow: FlowConfig::default(),
            ground_state: ShootingConfig::default(),
            sweep: SweepConfig::default(),
            nonexist: NonexistConfig::default(),
            uniqueness: UniquenessConfig::default(),
            gn_check: GnCheckConfig::default(),
            verify: VerifySettings::default(),
            output: OutputConfig::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::IoFailure { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    /// `a` is resolved later against `a*`, so the coupling here is zero.
    pub fn params(&self) -> Result<GNParams> {
        GNParams::new(self.problem.dim, self.problem.b, 0.0).map_err(|e| bad(e.to_string()))
    }

    pub fn coupling(&self, a_star: f64) -> f64 {
        self.problem.a.unwrap_or(self.problem.a_mult * a_star)
    }

    pub fn domain(&self) -> Result<Domain> {
        let d = match self.domain.shape {
            Some(d) => d,
            None if self.problem.dim == 1 => Domain::Interval { lo: -5.0, hi: 5.0 },
            None => Domain::Ball { dim: self.problem.dim, radius: 5.0 },
        };
        d.validate().map_err(|e| bad(e.to_string()))?;
        if d.dim() != self.problem.dim {
            return Err(bad(format!("domain dimension {} does not match N = {}", d.dim(), self.problem.dim)));
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.domain()?;
        let p = &self.problem;
        if let Some(a) = p.a {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(bad(format!("problem.a = {a} must be finite and non-negative")));
            }
        }
        if !(p.a_mult >= 0.0 && p.a_mult.is_finite()) {
            return Err(bad("problem.a_mult must be finite and non-negative"));
        }
        if self.domain.resolution < 8 || self.domain.resolution > 50_000_000 {
            return Err(bad("domain.resolution must lie in [8, 5e7]"));
        }
        let f = &self.flow;
        if !(f.dt > 0.0 && f.tol > 0.0 && f.min_dt > 0.0 && f.min_dt <= f.dt && f.max_iters > 0) {
            return Err(bad("flow needs dt ≥ min_dt > 0, tol > 0 and max_iters > 0"));
        }
        if !(f.energy_slack >= 0.0) {
            return Err(bad("flow.energy_slack must be non-negative"));
        }
        let g = &self.ground_state;
        if !(g.r0 > 0.0 && g.r0 < g.r_max && g.steps >= 64) {
            return Err(bad("ground_state needs 0 < r0 < r_max and steps ≥ 64"));
        }
        let s = &self.sweep;
        match &s.a_mults {
            Some(m) => {
                if m.is_empty() || m.windows(2).any(|w| !(w[0] < w[1])) || m.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                    return Err(bad("sweep.a_mults must be increasing values in (0, 1)"));
                }
            }
            None => {
                if !(0.0 < s.tightest && s.tightest < s.widest && s.widest < 1.0 && s.points >= 2) {
                    return Err(bad("sweep needs 0 < tightest < widest < 1 and points ≥ 2"));
                }
            }
        }
        let n = &self.nonexist;
        if n.taus.len() < 3 || n.taus.windows(2).any(|w| !(w[0] < w[1])) || n.taus[0] <= 0.0 {
            return Err(bad("nonexist.taus must be 3+ increasing positive values"));
        }
        if !(n.a_mult > 0.0) {
            return Err(bad("nonexist.a_mult must be positive"));
        }
        let u = &self.uniqueness;
        if u.starts < 3 || !(u.a_mult > 0.0 && u.a_mult < 1.0) {
            return Err(bad("uniqueness needs starts ≥ 3 and 0 < a_mult < 1"));
        }
        let c = &self.gn_check;
        if c.samples == 0 || c.taus.is_empty() || c.trial_resolution < 8 {
            return Err(bad("gn_check needs samples > 0, taus and trial_resolution ≥ 8"));
        }
        Ok(())
    }
}
