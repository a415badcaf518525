//! Command line front end. Exit status: 0 success, 1 configuration error,
//! 2 solver failure, 3 a FAIL in `verify-all`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::archive::{csv_table, fmt12, RunArchive};
use crate::asymptotics::{
    check_limits, fit_scaling_laws, gap_schedule, run_sweep, sweep_csv, FitTolerances, LimitTolerances,
};
use crate::config::RunConfig;
use crate::discretization::{build_grid, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::groundstate::{solve_ground_state, verify_identities, GroundStateData};
use crate::potential::{compute_lambda, validate_assumptions};
use crate::variational::{
    gn_random_check, gn_trial_excess, minimize_with, multistart_uniqueness, nonexistence_probe, random_positive,
    Functional,
};
use crate::verify::run_all;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "GNLAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "gnlab", version, about = "Threshold minimizers of the inhomogeneous critical NLS energy")]
pub struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $GNLAB_OUT/<command> or gnlab-out/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Space dimension N.
    #[arg(long = "N", global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Absolute coupling a.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Coupling as a multiple of a*.
    #[arg(long, global = true)]
    pub a_mult: Option<f64>,
    /// Grid resolution (cells).
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for Q and report a* and the Pohozaev identities.
    GroundState,
    /// Minimize E_a on the unit L² sphere by gradient flow.
    Minimize,
    /// Sweep a ↗ a* and fit the scaling laws.
    Sweep,
    /// Check the GN bound on random functions and the Φ_τ family.
    GnCheck {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Energies of trial functions above threshold.
    Nonexist,
    /// Gradient flow from several random starts.
    Uniqueness {
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Run every acceptance criterion.
    VerifyAll,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::Minimize => "minimize",
            Command::Sweep => "sweep",
            Command::GnCheck { .. } => "gn-check",
            Command::Nonexist => "nonexist",
            Command::Uniqueness { .. } => "uniqueness",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Parses `argv`, runs the command and returns the exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            Error::IoFailure { path, source } => Error::Config(format!("cannot read {path}: {source}")),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(n) = o.dim {
        cfg.problem.dim = n;
        if cfg.domain.shape.is_some_and(|d| d.dim() != n) {
            cfg.domain.shape = None;
        }
    }
    if let Some(b) = o.b {
        cfg.problem.b = b;
    }
    if let Some(a) = o.a {
        cfg.problem.a = Some(a);
    }
    if let Some(m) = o.a_mult {
        match cli.command {
            Command::Nonexist => cfg.nonexist.a_mult = m,
            Command::Uniqueness { .. } => cfg.uniqueness.a_mult = m,
            _ => {
                cfg.problem.a = None;
                cfg.problem.a_mult = m;
            }
        }
    }
    if let Some(r) = o.resolution {
        cfg.domain.resolution = r;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
        cfg.verify.seed = s;
    }
    match &cli.command {
        Command::GnCheck { samples: Some(n) } => cfg.gn_check.samples = *n,
        Command::Uniqueness { starts: Some(n) } => cfg.uniqueness.starts = *n,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    let name = cli.command.name();
    cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| match std::env::var_os(OUT_ENV) {
        Some(root) => Path::new(&root).join(name),
        None => Path::new("gnlab-out").join(name),
    })
}

fn check(name: &str, pass: bool, detail: impl AsRef<str>) -> bool {
    println!("{} {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    pass
}

struct Context {
    cfg: RunConfig,
    gs: GroundStateData,
    archive: RunArchive,
}

impl Context {
    fn new(cfg: RunConfig) -> Result<Self> {
        let gs = solve_ground_state(&cfg.params()?, &cfg.ground_state)?;
        let mut archive = RunArchive::new();
        archive.add("config.toml", cfg.to_toml()?);
        archive.add("ground_state.json", gs.to_json()? + "\n");
        Ok(Self { cfg, gs, archive })
    }

    fn grid(&self) -> Result<Arc<Grid>> {
        build_grid(self.cfg.domain()?, self.cfg.domain.resolution)
    }

    fn functional(&self, grid: &Arc<Grid>, a: f64) -> Result<Functional> {
        Functional::new(grid.clone(), self.gs.params.with_a(a)?, &self.cfg.potential)
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    let dir = output_dir(cli, &cfg);
    let domain = cfg.domain()?;
    for v in validate_assumptions(&cfg.potential, &domain) {
        eprintln!("warning: potential: {v}");
    }
    if let Command::VerifyAll = cli.command {
        return verify_all(&cfg, &dir);
    }
    let mut ctx = Context::new(cfg)?;
    let mut status = 0;
    println!("a* = {}", fmt12(ctx.gs.a_star));
    match cli.command {
        Command::GroundState => ground_state(&mut ctx)?,
        Command::Minimize => minimize(&mut ctx)?,
        Command::Sweep => status = sweep(&mut ctx)?,
        Command::GnCheck { .. } => gn_check(&mut ctx)?,
        Command::Nonexist => nonexist(&mut ctx)?,
        Command::Uniqueness { .. } => uniqueness(&mut ctx)?,
        Command::VerifyAll => unreachable!(),
    }
    let manifest = ctx.archive.write(&dir)?;
    println!("wrote {} files to {}", manifest.files.len() + 1, dir.display());
    Ok(status)
}

fn ground_state(ctx: &mut Context) -> Result<()> {
    let gs = &ctx.gs;
    let r = verify_identities(gs, 1e-6);
    check(
        "identities",
        r.pass,
        format!("kinetic/mass {:.2e}, kinetic/nonlinear {:.2e}", r.kinetic_mass, r.kinetic_nonlinear),
    );
    println!("Q(0) = {}  ‖Q‖² = {}  ∫|∇Q|² = {}", fmt12(gs.profile.amplitude), fmt12(gs.l2_sq), fmt12(gs.grad_sq));
    let rows =
        gs.profile.nodes.iter().zip(&gs.profile.values).zip(&gs.profile.derivs).map(|((r, q), d)| vec![*r, *q, *d]);
    ctx.archive.add("profile.csv", csv_table(&[("r", "radius"), ("q", "Q(r)"), ("dq", "Q'(r)")], rows));
    Ok(())
}

fn profile_csv(u: &GridFunction) -> String {
    let rows = u.grid().nodes().iter().zip(u.values()).map(|(x, v)| vec![*x, *v]);
    csv_table(&[("x", "node (radius on a ball)"), ("u", "minimizer value")], rows)
}

fn initial(grid: &Arc<Grid>, seed: u64) -> GridFunction {
    random_positive(grid, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn minimize(ctx: &mut Context) -> Result<()> {
    let grid = ctx.grid()?;
    let a = ctx.cfg.coupling(ctx.gs.a_star);
    let mut flow = ctx.cfg.flow.clone();
    if a >= ctx.gs.a_star && !flow.probe {
        println!("a ≥ a*: running in probe mode");
        flow.probe = true;
    }
    let f = ctx.functional(&grid, a)?;
    let r = minimize_with(&f, &initial(&grid, ctx.cfg.seed), &flow)?;
    println!(
        "a = {}  e = {}  mu = {}  eps = {}  iterations = {}",
        fmt12(a),
        fmt12(r.energy),
        fmt12(r.mu),
        fmt12(r.eps),
        r.iterations
    );
    let mu_el = f.residual_minimizing_multiplier(r.u.values());
    check(
        "multiplier identity",
        (r.mu - mu_el).abs() <= 1e-8 * (1.0 + r.mu.abs()),
        format!("|μ - μ_EL| = {:.2e}", (r.mu - mu_el).abs()),
    );
    check("Euler-Lagrange residual", r.residual < 1e-4 * (1.0 + r.mu.abs()), format!("{:.2e}", r.residual));
    if a < ctx.gs.a_star {
        let lower = (1.0 - a / ctx.gs.a_star) * r.breakdown.kinetic;
        check("coercivity bound", r.energy >= lower - 1e-8, format!("e = {:.6e} ≥ {:.6e}", r.energy, lower));
    }
    ctx.archive.add_json("summary.json", &r.summary(f.params(), "profile.csv"))?;
    ctx.archive.add("profile.csv", profile_csv(&r.u));
    Ok(())
}

#[derive(Serialize)]
struct FitSummary {
    lambda: crate::potential::LambdaConstant,
    fit: Option<crate::asymptotics::ScalingFit>,
    fit_error: Option<String>,
    limits: crate::asymptotics::LimitReport,
    complete: bool,
    failure: Option<String>,
    warnings: Vec<String>,
}

fn sweep(ctx: &mut Context) -> Result<i32> {
    let grid = ctx.grid()?;
    let gs = &ctx.gs;
    let s = &ctx.cfg.sweep;
    let schedule = match &s.a_mults {
        Some(m) => m.iter().map(|x| x * gs.a_star).collect(),
        None => gap_schedule(gs.a_star, s.widest, s.tightest, s.points)?,
    };
    let l = grid.domain().dist_to_boundary();
    let init = GridFunction::from_fn(grid.clone(), |x| (-x * x).exp() * (l * l - x * x).max(0.0));
    let f = ctx.functional(&grid, 0.0)?;
    let out = run_sweep(&schedule, &f, gs, &init, &ctx.cfg.flow)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for r in &out.records {
        println!(
            "a = {}  gap = {:.3e}  e = {:.6e}  eps = {:.6e}  mu·eps² = {:.5}",
            fmt12(r.a),
            r.gap,
            r.energy,
            r.eps,
            r.mu * r.eps * r.eps
        );
    }
    let lambda = compute_lambda(&ctx.cfg.potential, gs)?;
    let tol = FitTolerances { skip_widest: s.skip_widest, ..Default::default() };
    let fit = fit_scaling_laws(&out.records, gs, &lambda, &tol);
    match &fit {
        Ok(fit) => {
            for (name, p) in [("energy", fit.energy), ("eps", fit.eps)] {
                check(
                    &format!("{name} exponent"),
                    p.exponent_pass,
                    format!("{:.4} ± {:.4} vs {:.4}", p.exponent, p.half_width, p.predicted_exponent),
                );
                check(
                    &format!("{name} prefactor"),
                    p.prefactor_pass,
                    format!("{:.4} vs {:.4}", p.prefactor_pinned, p.predicted_prefactor),
                );
            }
        }
        Err(e) => {
            check("scaling fit", false, e.to_string());
        }
    }
    let limits =
        check_limits(&out.records, gs, &lambda, ctx.cfg.potential.origin_limit(), &LimitTolerances::default())?;
    check("multiplier limit", limits.multiplier_pass, format!("μ ε² = {:.5}", limits.mu_eps_sq));
    check("threshold limit", limits.energy_trend_pass, format!("e ratio {:.4}", limits.energy_ratio));
    check("upper bound", limits.bound_pass, format!("max e/bound {:.4}", limits.worst_bound_ratio));
    check("profile convergence", limits.profile_pass, format!("sup error {:.2e}", limits.profile_sup_tightest));
    ctx.archive.add("sweep.csv", sweep_csv(&out.records));
    ctx.archive.add_json(
        "fit.json",
        &FitSummary {
            lambda,
            fit_error: fit.as_ref().err().map(|e| e.to_string()),
            fit: fit.ok(),
            limits,
            complete: out.complete,
            failure: out.failure.clone(),
            warnings: out.warnings.clone(),
        },
    )?;
    Ok(match out.failure {
        Some(msg) => {
            eprintln!("sweep stopped early: {msg}");
            2
        }
        None => 0,
    })
}

fn gn_check(ctx: &mut Context) -> Result<()> {
    let grid = ctx.grid()?;
    let c = &ctx.cfg.gn_check;
    let rep = gn_random_check(&ctx.gs, &grid, c.samples, ctx.cfg.seed)?;
    check(
        "GN bound",
        rep.min_ratio >= 1.0 - 1e-6,
        format!("min Υ(1+β²)/a* = {:.6} over {} functions", rep.min_ratio, rep.samples),
    );
    let fine = build_grid(ctx.cfg.domain()?, c.trial_resolution)?;
    let excess = gn_trial_excess(&ctx.gs, &fine, &c.taus, c.cutoff_radius)?;
    let decreasing = excess.windows(2).all(|w| w[1].1 < w[0].1);
    let positive = excess.iter().all(|e| e.1 > 0.0);
    let trail: Vec<String> = excess.iter().map(|(t, e)| format!("{t}:{e:.3e}")).collect();
    check("non-attainment", decreasing && positive, trail.join(" "));
    ctx.archive.add_json("gn_check.json", &serde_json::json!({ "random": rep, "trial_excess": excess }))?;
    Ok(())
}

fn nonexist(ctx: &mut Context) -> Result<()> {
    let grid = ctx.grid()?;
    let n = &ctx.cfg.nonexist;
    let a = n.a_mult * ctx.gs.a_star;
    let rep = nonexistence_probe(&ctx.gs, a, &grid, &ctx.cfg.potential, &n.taus, n.cutoff_radius)?;
    println!("{:>10} {:>20}", "tau", "E_a(Phi_tau)");
    for (t, e) in &rep.rows {
        println!("{t:>10} {:>20}", fmt12(*e));
    }
    check("decreasing", rep.rows.windows(2).all(|w| w[1].1 < w[0].1), "E_a(Φ_τ) along τ");
    let rel = (rep.tau_sq_coefficient / rep.predicted_coefficient - 1.0).abs();
    check("tau² coefficient", rel < 0.05, format!("{:.5} vs {:.5}", rep.tau_sq_coefficient, rep.predicted_coefficient));
    ctx.archive.add(
        "nonexist.csv",
        csv_table(&[("tau", "dilation"), ("energy", "E_a(Phi_tau)")], rep.rows.iter().map(|r| vec![r.0, r.1])),
    );
    ctx.archive.add_json("nonexist.json", &rep)?;
    Ok(())
}

fn uniqueness(ctx: &mut Context) -> Result<()> {
    let grid = ctx.grid()?;
    let u = &ctx.cfg.uniqueness;
    let f = ctx.functional(&grid, u.a_mult * ctx.gs.a_star)?;
    let rep = multistart_uniqueness(&f, &ctx.cfg.flow, u.starts, ctx.cfg.seed)?;
    for msg in &rep.failures {
        eprintln!("warning: {msg}");
    }
    check(
        "L² agreement",
        rep.max_l2_distance < u.l2_tol,
        format!("max distance {:.2e} over {} converged starts", rep.max_l2_distance, rep.converged),
    );
    check("energy spread", rep.energy_spread < u.energy_tol, format!("{:.2e}", rep.energy_spread));
    ctx.archive.add_json("uniqueness.json", &rep)?;
    Ok(())
}

fn verify_all(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let results = run_all(&cfg.verify)?;
    for r in &results {
        println!("{r}");
    }
    let mut archive = RunArchive::new();
    archive.add("config.toml", cfg.to_toml()?);
    archive.add_json("verify.json", &results)?;
    archive.write(dir)?;
    Ok(if results.iter().all(|r| r.pass) { 0 } else { 3 })
}
