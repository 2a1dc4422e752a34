//! n-scans, log-log exponent fits and flat-file output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{certificate_for, trotter_error_exact_with, EngineError, ErrorPoint, LowerBoundCert};
use crate::exec::{map_items, Execution};
use crate::kinematics::{effective_rotation, is_degenerate_time, Ordering, TrotterParams};
use crate::state::{
    make_basis_state, make_power_law_m0, make_power_law_top, SphericalState, StateError, StateLaw,
};

/// Points per decade of the default geometric grid.
pub const DEFAULT_POINTS_PER_DECADE: u32 = 12;

/// A fit point must satisfy `xi > QUALITY_FACTOR · tail_bound`.
pub const QUALITY_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scan failed at n = {n}: {source}")]
    Point { n: u64, source: EngineError },
    #[error(transparent)]
    State(#[from] StateError),
    #[error("fit needs at least 3 points in [{lo}, {hi}], found {found}")]
    InsufficientPoints { lo: u64, hi: u64, found: usize },
    #[error("quality gate xi > 10*tail_bound violated at n = {offending:?}")]
    QualityGate { offending: Vec<u64> },
    #[error("t = {0} is a zero of sin(t/sqrt 2); pass --allow-degenerate to run anyway")]
    DegenerateTime(f64),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serialization error: {0}")]
    Serialize(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    #[serde(flatten)]
    pub point: ErrorPoint,
    pub chi_n: f64,
    pub beta_n: f64,
    pub cert: Option<LowerBoundCert>,
}

impl CurvePoint {
    pub fn passes_gate(&self) -> bool {
        self.point.xi > 0.0 && self.point.xi > QUALITY_FACTOR * self.point.tail_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub t: f64,
    pub ordering: Ordering,
    pub law: StateLaw,
    pub max_ell: u64,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (u64, u64),
    pub points_used: usize,
}

/// Roughly `points_per_decade` geometrically spaced integers from `lo` to
/// `hi` inclusive, strictly increasing.
pub fn geometric_grid(lo: u64, hi: u64, points_per_decade: u32) -> Result<Vec<u64>, AnalysisError> {
    if lo == 0 || hi < lo || points_per_decade == 0 {
        return Err(AnalysisError::Config(format!(
            "bad grid: lo = {lo}, hi = {hi}, points per decade = {points_per_decade}"
        )));
    }
    let decades = (hi as f64 / lo as f64).log10();
    let steps = (decades * points_per_decade as f64).round().max(0.0) as u32;
    let mut grid: Vec<u64> = (0..=steps)
        .map(|k| {
            let frac = if steps == 0 { 0.0 } else { k as f64 / steps as f64 };
            (lo as f64 * (hi as f64 / lo as f64).powf(frac)).round() as u64
        })
        .collect();
    grid.push(hi);
    grid.dedup();
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

/// One [`CurvePoint`] per grid entry, certificates attached for power-law
/// states. Points are evaluated independently and returned in grid order.
pub fn scan_n(
    state: &SphericalState,
    t: f64,
    grid: &[u64],
    ordering: Ordering,
    exec: Execution,
) -> Result<ErrorCurve, AnalysisError> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::Config("n-grid must be strictly increasing".into()));
    }
    let degenerate = is_degenerate_time(t);
    let results = map_items(exec, grid, |&n| -> Result<CurvePoint, AnalysisError> {
        let p = TrotterParams::with_ordering(t, n, ordering)
            .map_err(|e| AnalysisError::Point { n, source: e.into() })?;
        // Outer parallelism is over n, so each sum runs sequentially.
        let point = trotter_error_exact_with(state, &p, inner_execution(exec, grid.len()))
            .map_err(|source| AnalysisError::Point { n, source })?;
        let eff = effective_rotation(&p);
        let cert = if degenerate {
            None
        } else {
            certificate_for(state, &p).map_err(|source| AnalysisError::Point { n, source })?
        };
        Ok(CurvePoint { point, chi_n: eff.chi_n, beta_n: eff.beta_n(), cert })
    });
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ErrorCurve { t, ordering, law: state.law(), max_ell: state.max_ell(), points })
}

fn inner_execution(outer: Execution, items: usize) -> Execution {
    if outer.is_parallel() && items > 1 {
        Execution::Sequential
    } else {
        outer
    }
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// Fit of `ln ξ_n` against `ln n` over `window`, after the quality gate.
pub fn fit_exponent(curve: &ErrorCurve, window: (u64, u64)) -> Result<FitResult, AnalysisError> {
    let (lo, hi) = window;
    let selected: Vec<&CurvePoint> =
        curve.points.iter().filter(|p| p.point.n >= lo && p.point.n <= hi).collect();
    let offending: Vec<u64> = selected.iter().filter(|p| !p.passes_gate()).map(|p| p.point.n).collect();
    if !offending.is_empty() {
        return Err(AnalysisError::QualityGate { offending });
    }
    if selected.len() < 3 {
        return Err(AnalysisError::InsufficientPoints { lo, hi, found: selected.len() });
    }
    let xs: Vec<f64> = selected.iter().map(|p| p.point.n as f64).collect();
    let ys: Vec<f64> = selected.iter().map(|p| p.point.xi).collect();
    let (slope, intercept, r_squared) = log_log_fit(&xs, &ys);
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        window: (selected[0].point.n, selected[selected.len() - 1].point.n),
        points_used: selected.len(),
    })
}

/// Longest run of consecutive gate-passing points inside `window`, as an
/// `(n_lo, n_hi)` pair. Ties go to the run with the smaller `n`.
pub fn gated_window(curve: &ErrorCurve, window: (u64, u64)) -> Option<(u64, u64)> {
    let mut best: Option<(usize, u64, u64)> = None;
    let mut run: Option<(usize, u64, u64)> = None;
    for p in curve.points.iter().filter(|p| p.point.n >= window.0 && p.point.n <= window.1) {
        if p.passes_gate() {
            run = Some(match run {
                Some((len, start, _)) => (len + 1, start, p.point.n),
                None => (1, p.point.n, p.point.n),
            });
            if best.is_none_or(|b| run.unwrap().0 > b.0) {
                best = run;
            }
        } else {
            run = None;
        }
    }
    best.map(|(_, lo, hi)| (lo, hi))
}

/// How the state for a run is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Basis { ell: u64, m: i64 },
    PowerLawM0 { c: f64, gamma: f64, l_max: u64 },
    PowerLawTop { c: f64, gamma: f64, l_max: u64 },
    File { path: PathBuf },
}

impl StateSpec {
    pub fn build(&self) -> Result<SphericalState, AnalysisError> {
        Ok(match self {
            StateSpec::Basis { ell, m } => make_basis_state(*ell, *m)?,
            StateSpec::PowerLawM0 { c, gamma, l_max } => make_power_law_m0(*c, *gamma, *l_max)?,
            StateSpec::PowerLawTop { c, gamma, l_max } => make_power_law_top(*c, *gamma, *l_max)?,
            StateSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| AnalysisError::Io { path: path.clone(), source })?;
                serde_json::from_str(&text).map_err(|e| AnalysisError::Config(e.to_string()))?
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub t: f64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub points_per_decade: u32,
    pub state: StateSpec,
    pub ordering: Ordering,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub quad_points: usize,
    pub threads: Option<usize>,
    pub allow_degenerate: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            n_lo: 10,
            n_hi: 1000,
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
            state: StateSpec::Basis { ell: 1, m: 0 },
            ordering: Ordering::default(),
            output: None,
            format: Format::default(),
            quad_points: 32,
            threads: None,
            allow_degenerate: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !self.t.is_finite() {
            return Err(AnalysisError::Config(format!("t must be finite, got {}", self.t)));
        }
        if self.n_lo == 0 || self.n_lo >= self.n_hi {
            return Err(AnalysisError::Config(format!(
                "need 1 <= n_lo < n_hi, got {} and {}",
                self.n_lo, self.n_hi
            )));
        }
        if is_degenerate_time(self.t) && !self.allow_degenerate {
            return Err(AnalysisError::DegenerateTime(self.t));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Vec<u64>, AnalysisError> {
        geometric_grid(self.n_lo, self.n_hi, self.points_per_decade)
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: [&str; 11] =
    ["n", "t", "chi_n", "beta_n", "xi", "tail_bound", "cert_value", "family", "gamma", "C", "L_max"];

pub fn write_curve_csv<W: Write>(curve: &ErrorCurve, out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| AnalysisError::Serialize(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    let (gamma, c) = match curve.law.power_law() {
        Some((c, gamma, _)) => (fmt_real(gamma), fmt_real(c)),
        None => (String::new(), String::new()),
    };
    for p in &curve.points {
        let cert = p.cert.map(|c| fmt_real(c.value)).unwrap_or_default();
        w.write_record([
            p.point.n.to_string(),
            fmt_real(curve.t),
            fmt_real(p.chi_n),
            fmt_real(p.beta_n),
            fmt_real(p.point.xi),
            fmt_real(p.point.tail_bound),
            cert,
            curve.law.family_name().to_string(),
            gamma.clone(),
            c.clone(),
            curve.max_ell.to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| AnalysisError::Serialize(e.to_string()))?;
    Ok(())
}

pub fn write_certs_csv<W: Write>(certs: &[LowerBoundCert], out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| AnalysisError::Serialize(e.to_string());
    w.write_record(["n", "family", "cutoff", "cert_value", "truncated"]).map_err(ser)?;
    for c in certs {
        w.write_record([
            c.n.to_string(),
            c.family.to_string(),
            c.cutoff.to_string(),
            fmt_real(c.value),
            c.truncated.to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| AnalysisError::Serialize(e.to_string()))?;
    Ok(())
}

pub fn write_fit_csv<W: Write>(fit: &FitResult, out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| AnalysisError::Serialize(e.to_string());
    w.write_record(["slope", "intercept", "r_squared", "n_lo", "n_hi", "points_used"]).map_err(ser)?;
    w.write_record([
        fmt_real(fit.slope),
        fmt_real(fit.intercept),
        fmt_real(fit.r_squared),
        fit.window.0.to_string(),
        fit.window.1.to_string(),
        fit.points_used.to_string(),
    ])
    .map_err(ser)?;
    w.flush().map_err(|e| AnalysisError::Serialize(e.to_string()))?;
    Ok(())
}

/// Anything the CLI can write out.
#[derive(Debug, Clone, Copy)]
pub enum Emittable<'a> {
    Curve(&'a ErrorCurve),
    Fit(&'a FitResult),
    Certs(&'a [LowerBoundCert]),
}

pub fn write_emittable<W: Write>(item: Emittable<'_>, format: Format, mut out: W) -> Result<(), AnalysisError> {
    match format {
        Format::Csv => match item {
            Emittable::Curve(c) => write_curve_csv(c, out),
            Emittable::Fit(f) => write_fit_csv(f, out),
            Emittable::Certs(c) => write_certs_csv(c, out),
        },
        Format::Json => {
            let text = match item {
                Emittable::Curve(c) => serde_json::to_string_pretty(c),
                Emittable::Fit(f) => serde_json::to_string_pretty(f),
                Emittable::Certs(c) => serde_json::to_string_pretty(c),
            }
            .map_err(|e| AnalysisError::Serialize(e.to_string()))?;
            writeln!(out, "{text}").map_err(|e| AnalysisError::Serialize(e.to_string()))
        }
    }
}

/// Writes `item` to `path`, or to stdout when `path` is `None`.
pub fn emit(item: Emittable<'_>, format: Format, path: Option<&Path>) -> Result<(), AnalysisError> {
    match path {
        None => write_emittable(item, format, std::io::stdout().lock()),
        Some(path) => {
            let file = File::create(path).map_err(|source| AnalysisError::Io { path: path.to_path_buf(), source })?;
            let mut w = BufWriter::new(file);
            write_emittable(item, format, &mut w)?;
            w.flush().map_err(|source| AnalysisError::Io { path: path.to_path_buf(), source })
        }
    }
}
