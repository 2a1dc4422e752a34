//! `so3trotter`: command-line driver for exact Trotter-error experiments.
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use so3_trotter::analysis::{
    emit, fit_exponent, gated_window, scan_n, AnalysisError, Emittable, ErrorCurve, Format, RunConfig, StateSpec,
};
use so3_trotter::error::{
    certificate_for, error_via_integral, trotter_error_exact_with, trotter_error_oracle, EngineError,
};
use so3_trotter::exec::Execution;
use so3_trotter::kinematics::{
    chi_asymptote, effective_rotation, is_degenerate_time, limiting_error_axis, step_rotation, KinematicsError,
    Ordering, TrotterParams,
};
use so3_trotter::rotation::{compose, euler_from_axis_angle, AxisAngle, EulerZYZ, UnitVector3};
use so3_trotter::state::{domain_summability, StateError};
use so3_trotter::wigner::{wigner_d, WignerError};

const THREADS_ENV: &str = "SO3TROTTER_THREADS";
const ORACLE_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "so3trotter", version, about = "Exact first-order Trotter error for (L_x, L_y) on L2(S2)")]
struct Cli {
    /// Run every sum on the calling thread
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compose two axis-angle rotations (applied right to left)
    Compose {
        /// angle,x,y,z of the left factor
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        first: Vec<f64>,
        /// angle,x,y,z of the right factor
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        second: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Step and effective rotations for given t, n
    Kinematics {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = Ordering::YThenX)]
        ordering: Ordering,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dense Wigner-D block for ZYZ Euler angles
    Wigner {
        #[arg(long)]
        ell: u64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build a state and report its norm and domain summability
    State {
        #[command(flatten)]
        run: RunArgs,
        /// Exponent s of the weighted sum sum l^(2s) |psi_l|^2
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// Exact error at a single n (uses --n-lo)
    Error {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Compare the closed form against explicit matrix products and quadrature
    OracleCheck {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Lower-bound certificates across the n-grid
    Certify {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Exact error across the n-grid
    Scan {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Log-log exponent fit of a scan
    Fit {
        #[command(flatten)]
        run: RunArgs,
        /// Fit a previously emitted JSON curve instead of scanning
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        window_lo: Option<u64>,
        #[arg(long)]
        window_hi: Option<u64>,
        /// Shrink the window to the longest run passing the quality gate
        #[arg(long)]
        gated: bool,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long)]
    n_lo: Option<u64>,
    #[arg(long)]
    n_hi: Option<u64>,
    #[arg(long)]
    points_per_decade: Option<u32>,
    /// Basis state Y_{ell,m} as ell,m
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, group = "state_kind")]
    basis: Option<Vec<i64>>,
    /// L_z-kernel power law as C,gamma,L_max
    #[arg(long, value_delimiter = ',', group = "state_kind")]
    m0: Option<Vec<f64>>,
    /// L_+-kernel power law as C,gamma,L_max
    #[arg(long, value_delimiter = ',', group = "state_kind")]
    top: Option<Vec<f64>>,
    /// State serialized as JSON
    #[arg(long, group = "state_kind")]
    state_file: Option<PathBuf>,
    #[arg(long)]
    ordering: Option<Ordering>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    quad_points: Option<usize>,
    /// Worker threads (also read from SO3TROTTER_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    allow_degenerate: bool,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn guard(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

fn engine_code(e: &EngineError) -> u8 {
    match e {
        EngineError::DegenerateTime(_) | EngineError::DegenerateBeta(_) => 3,
        EngineError::Kinematics(KinematicsError::NonFiniteTime(_)) => 3,
        EngineError::Wigner(WignerError::Domain(_)) => 3,
        _ => 2,
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        let code = match &e {
            AnalysisError::Config(_) | AnalysisError::State(_) | AnalysisError::InsufficientPoints { .. } => 2,
            AnalysisError::DegenerateTime(_) | AnalysisError::QualityGate { .. } => 3,
            AnalysisError::Point { source, .. } => engine_code(source),
            AnalysisError::Io { .. } | AnalysisError::Serialize(_) => 4,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        Self { code: engine_code(&e), message: e.to_string() }
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        Self::config(e.to_string())
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(n) = self.n_lo {
            cfg.n_lo = n;
        }
        if let Some(n) = self.n_hi {
            cfg.n_hi = n;
        }
        if let Some(p) = self.points_per_decade {
            cfg.points_per_decade = p;
        }
        if let Some(v) = &self.basis {
            expect_len(v, 2, "basis")?;
            if v[0] < 0 {
                return Err(CliError::config(format!("ell must be nonnegative, got {}", v[0])));
            }
            cfg.state = StateSpec::Basis { ell: v[0] as u64, m: v[1] };
        }
        if let Some(v) = &self.m0 {
            expect_len(v, 3, "m0")?;
            cfg.state = StateSpec::PowerLawM0 { c: v[0], gamma: v[1], l_max: as_count(v[2])? };
        }
        if let Some(v) = &self.top {
            expect_len(v, 3, "top")?;
            cfg.state = StateSpec::PowerLawTop { c: v[0], gamma: v[1], l_max: as_count(v[2])? };
        }
        if let Some(path) = &self.state_file {
            cfg.state = StateSpec::File { path: path.clone() };
        }
        if let Some(o) = self.ordering {
            cfg.ordering = o;
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(q) = self.quad_points {
            cfg.quad_points = q;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.allow_degenerate |= self.allow_degenerate;
        Ok(cfg)
    }
}

fn as_count(x: f64) -> Result<u64, CliError> {
    if x >= 1.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(CliError::config(format!("L_max must be a positive integer, got {x}")))
    }
}

fn configure_threads(requested: Option<usize>) -> Result<(), CliError> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    let Some(threads) = requested.or(from_env).filter(|&n| n > 0) else {
        return Ok(());
    };
    #[cfg(feature = "parallel")]
    {
        // A pool that is already running wins; the count is only a hint.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn write_json(value: &serde_json::Value, path: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| CliError::io(e.to_string()))
        }
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", p.display()))),
    }
}

fn expect_len<T>(v: &[T], len: usize, flag: &str) -> Result<(), CliError> {
    if v.len() == len {
        Ok(())
    } else {
        Err(CliError::config(format!("--{flag} takes {len} comma-separated values, got {}", v.len())))
    }
}

fn axis_angle(v: &[f64]) -> Result<AxisAngle, CliError> {
    expect_len(v, 4, "first/--second")?;
    let axis = UnitVector3::new(v[1], v[2], v[3]).map_err(|e| CliError::config(e.to_string()))?;
    Ok(AxisAngle::new(v[0], axis))
}

fn rotation_json(r: AxisAngle) -> serde_json::Value {
    let e = euler_from_axis_angle(r);
    json!({
        "angle": r.angle,
        "axis": r.axis.to_array(),
        "near_identity": r.near_identity,
        "euler": { "alpha": e.alpha, "beta": e.beta, "gamma": e.gamma },
    })
}

fn checked(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    if is_degenerate_time(cfg.t) {
        eprintln!("warning: t = {} is degenerate; rate claims do not apply", cfg.t);
    }
    Ok(())
}

fn single_n(cfg: &RunConfig, n: Option<u64>) -> Result<TrotterParams, CliError> {
    if !cfg.t.is_finite() {
        return Err(CliError::config(format!("t must be finite, got {}", cfg.t)));
    }
    if is_degenerate_time(cfg.t) && !cfg.allow_degenerate {
        return Err(AnalysisError::DegenerateTime(cfg.t).into());
    }
    Ok(TrotterParams::with_ordering(cfg.t, n.unwrap_or(cfg.n_lo), cfg.ordering)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Compose { first, second, output } => {
            let (a, b) = (axis_angle(&first)?, axis_angle(&second)?);
            write_json(&rotation_json(compose(a, b)), output.as_deref())
        }
        Command::Kinematics { t, n, ordering, output } => {
            let p = TrotterParams::with_ordering(t, n, ordering)?;
            let step = step_rotation(&p);
            let eff = effective_rotation(&p);
            let value = json!({
                "t": t,
                "n": n,
                "ordering": ordering.to_string(),
                "degenerate_t": p.degenerate_t(),
                "step": {
                    "omega_n": step.omega_n,
                    "rho_n": step.rho_n.to_array(),
                    "near_identity": step.near_identity,
                },
                "effective": {
                    "chi_n": eff.chi_n,
                    "nu_n": eff.nu_n.to_array(),
                    "beta_n": eff.beta_n(),
                    "euler": { "alpha": eff.euler.alpha, "beta": eff.euler.beta, "gamma": eff.euler.gamma },
                    "near_identity": eff.near_identity,
                },
                "n_chi_n": n as f64 * eff.chi_n,
                "chi_asymptote": chi_asymptote(t),
                "limiting_axis": limiting_error_axis(t, ordering).map(|u| u.to_array()),
            });
            write_json(&value, output.as_deref())
        }
        Command::Wigner { ell, alpha, beta, gamma, output } => {
            let block = wigner_d(ell, EulerZYZ::new(alpha, beta, gamma))
                .map_err(|e| CliError::config(e.to_string()))?;
            let rows: Vec<Vec<[f64; 2]>> = (0..block.dim())
                .map(|i| (0..block.dim()).map(|j| [block.entries[(i, j)].re, block.entries[(i, j)].im]).collect())
                .collect();
            write_json(&json!({ "ell": ell, "alpha": alpha, "beta": beta, "gamma": gamma, "entries": rows }), output.as_deref())
        }
        Command::State { run, s } => {
            let cfg = run.resolve()?;
            configure_threads(cfg.threads)?;
            let state = cfg.state.build()?;
            let summability = domain_summability(&state.law(), s)?;
            let value = json!({
                "state": state,
                "family": state.law().family_name(),
                "norm": state.norm(),
                "max_ell": state.max_ell(),
                "tail_bound": state.law().tail_bound(),
                "s": s,
                "finite": summability.finite,
                "critical_exponent": summability.critical_exponent,
            });
            write_json(&value, cfg.output.as_deref())
        }
        Command::Error { run, n } => {
            let cfg = run.resolve()?;
            configure_threads(cfg.threads)?;
            let p = single_n(&cfg, n)?;
            let state = cfg.state.build()?;
            let grid = [p.n];
            let curve = scan_n(&state, cfg.t, &grid, cfg.ordering, exec)?;
            if p.degenerate_t() {
                eprintln!("warning: t = {} is degenerate", cfg.t);
            }
            Ok(emit(Emittable::Curve(&curve), cfg.format, cfg.output.as_deref())?)
        }
        Command::OracleCheck { run, n } => {
            let cfg = run.resolve()?;
            configure_threads(cfg.threads)?;
            let p = single_n(&cfg, n)?;
            let state = cfg.state.build()?;
            let exact = trotter_error_exact_with(&state, &p, exec)?.xi;
            let oracle = trotter_error_oracle(&state, &p)?;
            let integral = error_via_integral(&state, &p, cfg.quad_points)?;
            let agree = (exact - oracle).abs() <= ORACLE_TOL * exact.max(1.0);
            write_json(
                &json!({
                    "t": cfg.t,
                    "n": p.n,
                    "ordering": cfg.ordering.to_string(),
                    "exact": exact,
                    "oracle": oracle,
                    "integral": integral,
                    "oracle_diff": (exact - oracle).abs(),
                    "integral_diff": (exact - integral).abs(),
                    "agree": agree,
                }),
                cfg.output.as_deref(),
            )?;
            if agree {
                Ok(())
            } else {
                Err(CliError::guard(format!("oracle mismatch: |{exact} - {oracle}| > {ORACLE_TOL}")))
            }
        }
        Command::Certify { run } => {
            let cfg = run.resolve()?;
            configure_threads(cfg.threads)?;
            checked(&cfg)?;
            let state = cfg.state.build()?;
            let mut certs = Vec::new();
            for n in cfg.grid()? {
                let p = TrotterParams::with_ordering(cfg.t, n, cfg.ordering)?;
                match certificate_for(&state, &p)? {
                    Some(c) => certs.push(c),
                    None => return Err(CliError::config("certificates need a power-law state (--m0 or --top)")),
                }
            }
            Ok(emit(Emittable::Certs(&certs), cfg.format, cfg.output.as_deref())?)
        }
        Command::Scan { run } => {
            let cfg = run.resolve()?;
            configure_threads(cfg.threads)?;
            checked(&cfg)?;
            let state = cfg.state.build()?;
            let curve = scan_n(&state, cfg.t, &cfg.grid()?, cfg.ordering, exec)?;
            Ok(emit(Emittable::Curve(&curve), cfg.format, cfg.output.as_deref())?)
        }
        Command::Fit { run, curve, window_lo, window_hi, gated } => {
            let cfg = run.resolve()?;
            configure_threads(cfg.threads)?;
            let curve: ErrorCurve = match curve {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::config(format!("bad curve {}: {e}", path.display())))?
                }
                None => {
                    checked(&cfg)?;
                    let state = cfg.state.build()?;
                    scan_n(&state, cfg.t, &cfg.grid()?, cfg.ordering, exec)?
                }
            };
            if is_degenerate_time(curve.t) {
                return Err(AnalysisError::DegenerateTime(curve.t).into());
            }
            let span = match (curve.points.first(), curve.points.last()) {
                (Some(a), Some(b)) => (a.point.n, b.point.n),
                _ => (cfg.n_lo, cfg.n_hi),
            };
            let mut window = (window_lo.unwrap_or(span.0), window_hi.unwrap_or(span.1));
            if gated {
                window = gated_window(&curve, window)
                    .ok_or_else(|| CliError::guard("no point in the window passes the quality gate"))?;
            }
            let fit = fit_exponent(&curve, window)?;
            Ok(emit(Emittable::Fit(&fit), cfg.format, cfg.output.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
