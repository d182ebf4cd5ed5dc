//! The `jlmqt` command-line front end.
//!
//! Every subcommand reads one run configuration (see [`config`]) and writes
//! plain text, CSV or JSON. Floating-point values are printed with 17
//! significant digits so that output round-trips exactly.
//!
//! Exit codes:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success                                              |
//! | 1    | `verify` found a failing check                       |
//! | 2    | command line, config syntax, missing key, unreadable or unwritable file |
//! | 3    | parameter invariant violated                         |
//! | 4    | non-finite state or failed numerical convergence     |
//! | 5    | no barrier (bias at or above the critical tilt)      |
//! | 6    | invalid sweep axis                                   |

pub mod config;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::{self, PhaseState};
use crate::error::Error;
use crate::escape::{self, AxisSpec, EpsilonMode, SweepAxis, SweepGrid};
use crate::model::{self, JunctionParams};
use crate::oracle::suite::{self, VerifyOptions};

pub use config::{ConfigError, RunConfig};

/// Largest `|ln(Gamma/Gamma_0)|` for which the plain ratio is also printed.
const PLAIN_RATIO_LIMIT: f64 = 700.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed { .. } => 1,
            CliError::Config(_) | CliError::Io { .. } | CliError::Usage(_) => 2,
            CliError::Model(e) => match e {
                Error::InvalidParameter { .. }
                | Error::InvalidArgument(_)
                | Error::NoEquilibrium(_) => 3,
                Error::NonFinite { .. } | Error::Convergence(_) => 4,
                Error::NoBarrier { .. }
                | Error::EpsilonOutOfRange(_)
                | Error::NoTurningPoint(_) => 5,
                Error::InvalidAxis(_) => 6,
            },
        }
    }
}

fn io_err(path: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

#[derive(Debug, Parser)]
#[command(
    name = "jlmqt",
    version,
    about = "Phase dynamics and zero-point-renormalized tunneling rates of two-channel Josephson junctions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived scales, <psi^2> and eps.
    Derive(CommonArgs),
    /// Integrate the classical phase dynamics and write a CSV trajectory.
    Simulate(CommonArgs),
    /// Escape rate with and without the zero-point renormalization.
    Escape(CommonArgs),
    /// ln(Gamma/Gamma_0) over a two-axis parameter grid (CSV + JSON).
    Sweep(CommonArgs),
    /// Run the oracle suite and print a pass/fail table.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Emit JSON instead of the plain listing.
    #[arg(long)]
    json: bool,
    /// Output path (overrides `out` in the config).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Keep every n-th integration step (simulate only).
    #[arg(long, value_name = "N")]
    stride: Option<usize>,
    /// Reserved. Nothing in this tool draws random numbers.
    #[arg(long)]
    seedless: bool,
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                2
            } else {
                let _ = write!(stdout, "{e}");
                0
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (args, handler): (CommonArgs, Handler) = match cmd {
        Command::Derive(a) => (a, cmd_derive),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Escape(a) => (a, cmd_escape),
        Command::Sweep(a) => (a, cmd_sweep),
        Command::Verify(a) => (a, cmd_verify),
    };
    if args.seedless {
        return Err(CliError::Usage(
            "--seedless is reserved and not accepted: no command uses a random number generator"
                .into(),
        ));
    }
    let text =
        std::fs::read_to_string(&args.config).map_err(io_err(args.config.display().to_string()))?;
    let cfg = RunConfig::parse(&text)?;
    let mut ctx = Context {
        args,
        cfg,
        stdout,
        stderr,
    };
    handler(&mut ctx)
}

type Handler = fn(&mut Context<'_>) -> Result<(), CliError>;

struct Context<'a> {
    args: CommonArgs,
    cfg: RunConfig,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Context<'_> {
    fn params(&self) -> Result<JunctionParams, CliError> {
        let p = self.cfg.junction_params()?;
        p.validate()?;
        Ok(p)
    }

    /// `--out` beats the config's `out`.
    fn out_path(&self) -> Option<PathBuf> {
        self.args
            .out
            .clone()
            .or_else(|| self.cfg.run_str("out").map(PathBuf::from))
    }

    fn warn(&mut self, msg: impl std::fmt::Display) {
        let _ = writeln!(self.stderr, "warning: {msg}");
    }

    /// Writes to `path`, or to stdout when `path` is `None`.
    fn emit(
        &mut self,
        path: Option<&Path>,
        body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<(), CliError> {
        match path {
            Some(p) => {
                let file = File::create(p).map_err(io_err(p.display().to_string()))?;
                let mut w = BufWriter::new(file);
                body(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(io_err(p.display().to_string()))
            }
            None => body(self.stdout).map_err(io_err("<stdout>")),
        }
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_derive(ctx: &mut Context<'_>) -> Result<(), CliError> {
    let params = ctx.params()?;
    let s = model::derive(&params)?;
    let renorm = escape::epsilon_from_scales(&params, &s);
    if params.kappa < 0.0 {
        ctx.warn("kappa = -1 (s++ pairing): the tilt uses |ej1 - ej2|; treat these values as provisional");
    }
    if !renorm.is_valid() {
        ctx.warn(format!(
            "eps = {} >= 1: the renormalized washboard has no well",
            renorm.epsilon
        ));
    } else if renorm.is_strained() {
        ctx.warn(format!(
            "eps = {} exceeds {}: the first-order renormalization is strained",
            renorm.epsilon,
            escape::EPSILON_STRAIN_THRESHOLD
        ));
    }
    let fields: [(&str, f64); 21] = [
        ("ej1", params.ej1),
        ("ej2", params.ej2),
        ("ein", params.ein),
        ("alpha1", params.alpha1),
        ("alpha2", params.alpha2),
        ("kappa", params.kappa),
        ("bias", params.bias),
        ("lambda", s.lambda_cap),
        ("ej_sum", s.ej_sum),
        ("ej_tilt", s.ej_tilt),
        ("omega_p", s.omega_p),
        ("omega_p1", s.omega_p1),
        ("omega_p2", s.omega_p2),
        ("omega_jl", s.omega_jl),
        ("m_cm", s.m_cm),
        ("m_rlt", s.m_rlt),
        ("g_plus", s.g_plus),
        ("g_minus", s.g_minus),
        ("psi_variance", renorm.psi_variance),
        ("epsilon", renorm.epsilon),
        ("epsilon_closed_form", renorm.epsilon_closed_form),
    ];
    let json = ctx.args.json;
    ctx.emit(None, |w| {
        if json {
            let obj: serde_json::Map<String, Value> = fields
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            writeln!(w, "{}", serde_json::to_string_pretty(&obj)?)
        } else {
            for (k, v) in fields {
                writeln!(w, "{k}={}", num(v))?;
            }
            Ok(())
        }
    })
}

fn cmd_simulate(ctx: &mut Context<'_>) -> Result<(), CliError> {
    let params = ctx.params()?;
    let cfg = &ctx.cfg;
    let dt: f64 = cfg.run_or("dt", 1e-3)?;
    let n_steps: usize = cfg.run_or("n_steps", 10_000)?;
    let stride = match ctx.args.stride {
        Some(s) => s,
        None => cfg.run_or("stride", 1)?,
    };
    let window: f64 = cfg.run_or("switch_window", dynamics::DEFAULT_SWITCH_WINDOW)?;
    // default start: the static equilibrium, or the origin when none exists
    let (eq_theta, eq_psi) = dynamics::equilibrium(&params).unwrap_or((0.0, 0.0));
    let initial = PhaseState {
        theta: cfg.run_or("theta0", eq_theta)?,
        psi: cfg.run_or("psi0", eq_psi)?,
        theta_dot: cfg.run_or("theta_dot0", 0.0)?,
        psi_dot: cfg.run_or("psi_dot0", 0.0)?,
        tau: 0.0,
    };
    let traj = dynamics::integrate_strided(initial, dt, n_steps, stride, &params)?;
    let drift = traj.max_relative_energy_drift();
    let switch = dynamics::detect_switching(&traj, window);

    let out = ctx.out_path();
    ctx.emit(out.as_deref(), |w| {
        writeln!(w, "tau,theta,psi,theta_dot,psi_dot,energy,reduced_voltage")?;
        for (s, e) in traj.states.iter().zip(&traj.energies) {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                num(s.tau),
                num(s.theta),
                num(s.psi),
                num(s.theta_dot),
                num(s.psi_dot),
                num(*e),
                num(dynamics::reduced_voltage(s, &params))
            )?;
        }
        writeln!(w, "# max_energy_drift={}", num(drift))?;
        if let Some(t) = switch {
            writeln!(w, "# switch_tau={}", num(t))?;
        }
        Ok(())
    })
}

fn escape_fields(r: &escape::EscapeResult) -> [(&'static str, f64); 8] {
    [
        ("epsilon", r.epsilon),
        ("theta0", r.theta0),
        ("omega_p_i", r.omega_p_i),
        ("v0", r.v0),
        ("barrier_ratio", r.barrier_ratio()),
        ("exponent_b", r.exponent_b),
        ("ln_prefactor", r.ln_prefactor),
        ("ln_gamma", r.ln_gamma),
    ]
}

fn cmd_escape(ctx: &mut Context<'_>) -> Result<(), CliError> {
    let params = ctx.params()?;
    let eps = match ctx.cfg.run_value::<f64>("epsilon")? {
        Some(e) => e,
        None => escape::epsilon(&params)?.epsilon,
    };
    if params.kappa < 0.0 {
        ctx.warn("kappa = -1 (s++ pairing): treat these values as provisional");
    }
    let corrected = escape::escape_rate_ln(&params, eps)?;
    let bare = escape::escape_rate_ln(&params, 0.0)?;
    let ln_ratio = corrected.ln_gamma - bare.ln_gamma;
    let ratio = (ln_ratio.abs() < PLAIN_RATIO_LIMIT).then(|| ln_ratio.exp());

    if let Some(path) = ctx.cfg.run_str("profile_out").map(PathBuf::from) {
        let points: usize = ctx.cfg.run_or("profile_points", 512)?;
        let profile = escape::potential_profile(&params, eps, -PI, PI, points)?;
        ctx.emit(Some(&path), |w| {
            writeln!(w, "theta,bare,effective")?;
            for (t, b, e) in &profile {
                writeln!(w, "{},{},{}", num(*t), num(*b), num(*e))?;
            }
            Ok(())
        })?;
    }

    let json = ctx.args.json;
    let out = ctx.out_path();
    ctx.emit(out.as_deref(), |w| {
        if json {
            let block = |r: &escape::EscapeResult| -> serde_json::Map<String, Value> {
                escape_fields(r)
                    .iter()
                    .map(|(k, v)| (k.to_string(), json!(v)))
                    .collect()
            };
            let doc = json!({
                "corrected": block(&corrected),
                "bare": block(&bare),
                "ln_ratio": ln_ratio,
                "ratio": ratio,
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)
        } else {
            for (label, r) in [("corrected", &corrected), ("bare", &bare)] {
                for (k, v) in escape_fields(r) {
                    writeln!(w, "{label}.{k}={}", num(v))?;
                }
            }
            writeln!(w, "ln_ratio={}", num(ln_ratio))?;
            if let Some(r) = ratio {
                writeln!(w, "ratio={}", num(r))?;
            }
            Ok(())
        }
    })
}

fn axis_spec(cfg: &RunConfig, slot: &str) -> Result<AxisSpec, CliError> {
    let name: String = cfg.run_required(slot)?;
    let axis: SweepAxis = name.parse()?;
    Ok(AxisSpec::new(
        axis,
        cfg.run_required(&format!("{slot}_min"))?,
        cfg.run_required(&format!("{slot}_max"))?,
        cfg.run_required(&format!("{slot}_count"))?,
    ))
}

/// JSON document for a sweep: axis metadata, the fixed parameters and the
/// row-major grid (`null` for invalid cells).
pub fn sweep_json(grid: &SweepGrid) -> Value {
    let axis = |a: &AxisSpec| {
        json!({
            "name": a.axis.name(),
            "min": a.min,
            "max": a.max,
            "count": a.count,
            "values": a.values(),
        })
    };
    let rows: Vec<Vec<Option<f64>>> = (0..grid.axis1.count)
        .map(|i| (0..grid.axis2.count).map(|j| grid.get(i, j)).collect())
        .collect();
    json!({
        "axis1": axis(&grid.axis1),
        "axis2": axis(&grid.axis2),
        "fixed": grid.base,
        "epsilon_mode": grid.epsilon_mode,
        "layout": "row_major",
        "valid_count": grid.valid_count(),
        "ln_ratio": rows,
    })
}

/// CSV rows `axis1,axis2,ln_ratio,valid`, row-major.
pub fn write_sweep_csv(grid: &SweepGrid, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "axis1,axis2,ln_ratio,valid")?;
    let n2 = grid.axis2.count;
    for (k, (v, ok)) in grid.ln_ratio.iter().zip(&grid.valid).enumerate() {
        let ln = if *ok { num(*v) } else { "nan".to_string() };
        writeln!(
            w,
            "{},{},{},{}",
            num(grid.axis1.value(k / n2)),
            num(grid.axis2.value(k % n2)),
            ln,
            u8::from(*ok)
        )?;
    }
    Ok(())
}

fn cmd_sweep(ctx: &mut Context<'_>) -> Result<(), CliError> {
    let params = ctx.params()?;
    let a1 = axis_spec(&ctx.cfg, "axis1")?;
    let a2 = axis_spec(&ctx.cfg, "axis2")?;
    let mode = match ctx.cfg.run_value::<f64>("epsilon")? {
        Some(e) => EpsilonMode::Fixed(e),
        None => EpsilonMode::FromParams,
    };
    let grid = escape::sweep_grid(&params, a1, a2, mode)?;
    if grid.valid_count() == 0 {
        ctx.warn("no cell of the grid has a barrier; every cell is marked invalid");
    }

    let csv_path = ctx.out_path();
    let json_path = ctx
        .cfg
        .run_str("json_out")
        .map(PathBuf::from)
        .or_else(|| csv_path.as_ref().map(|p| p.with_extension("json")));
    let doc = sweep_json(&grid);
    let write_json = |w: &mut dyn Write| -> io::Result<()> {
        writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)
    };

    match (&csv_path, ctx.args.json) {
        // nothing on disk requested: --json picks the stdout format
        (None, true) => ctx.emit(None, write_json)?,
        _ => ctx.emit(csv_path.as_deref(), |w| write_sweep_csv(&grid, w))?,
    }
    if let Some(p) = json_path {
        ctx.emit(Some(&p), write_json)?;
    }
    Ok(())
}

fn verify_options(cfg: &RunConfig) -> Result<VerifyOptions, ConfigError> {
    let d = VerifyOptions::default();
    Ok(VerifyOptions {
        spectrum_points: cfg.run_or("spectrum_points", d.spectrum_points)?,
        spectrum_width_sigmas: cfg.run_or("spectrum_width_sigmas", d.spectrum_width_sigmas)?,
        spectrum_levels: cfg.run_or("spectrum_levels", d.spectrum_levels)?,
        bounce_tol: cfg.run_or("bounce_tol", d.bounce_tol)?,
        dt: cfg.run_or("dt", d.dt)?,
        n_steps: cfg.run_or("n_steps", d.n_steps)?,
        amplitude: cfg.run_or("amplitude", d.amplitude)?,
        flip_g_plus: cfg.run_or("flip_g_plus", d.flip_g_plus)?,
    })
}

fn cmd_verify(ctx: &mut Context<'_>) -> Result<(), CliError> {
    let params = ctx.params()?;
    let opts = verify_options(&ctx.cfg)?;
    let checks = suite::run(&params, &opts)?;
    let json = ctx.args.json;
    let out = ctx.out_path();
    ctx.emit(out.as_deref(), |w| {
        if json {
            writeln!(w, "{}", serde_json::to_string_pretty(&checks)?)
        } else {
            writeln!(
                w,
                "{:<24} {:>24} {:>24} {:>10} status",
                "check", "computed", "reference", "tolerance"
            )?;
            for c in &checks {
                writeln!(
                    w,
                    "{:<24} {:>24} {:>24} {:>10.1e} {}",
                    c.name,
                    num(c.computed),
                    num(c.reference),
                    c.tolerance,
                    if c.passed { "PASS" } else { "FAIL" }
                )?;
                if let Some(note) = &c.note {
                    writeln!(w, "    note: {note}")?;
                }
            }
            Ok(())
        }
    })?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::VerifyFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(())
}
