//! Trotter error evaluation and lower-bound certificates.
//!
//! The exact path sums `‖(D^{(ℓ)}(χ_n, ν̂_n) − I) ψ^{(ℓ)}‖²` over blocks.
//! A block carrying a single amplitude `ψ_{ℓ,m}` contributes
//! `(2 − 2 Re D_{mm})|ψ_{ℓ,m}|²` because every column of `D` has unit norm;
//! `m = 0` and `m = ±ℓ` have closed forms valid for any `ℓ`.
//!
//! The oracle path never touches the rotation algebra: it builds
//! `exp(−iτJ_y)`, `exp(−iτJ_x)` and `exp(−it(J_x+J_y))` from eigendecompositions
//! and multiplies `n` explicit step matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{sum_range, sum_sequence, Execution};
use crate::kinematics::{
    chi_asymptote, effective_rotation, is_degenerate_time, limiting_error_axis, EffectiveRotation,
    KinematicsError, Ordering, TrotterParams,
};
use crate::linalg::{unitary_exp, CMatrix, CVector};
use crate::quadrature::gauss_legendre_unit;
use crate::state::{
    apply_l_along, generator_matrices, power_law_weight, BlockVector, SphericalState, StateError,
    StateLaw,
};
use crate::wigner::{one_minus_legendre, wigner_d, OneMinusLegendre, TopElement, WignerError};

/// `κ = f(1) = 1 − 2^{-1/4}`, the chord slope of `f(x) = 1 − (1+x)^{-1/4}` on `[0, 1]`.
pub const KAPPA: f64 = 0.159_103_584_746_285_46;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error("t = {0} is a zero of sin(t/sqrt 2); the certificate is uninformative")]
    DegenerateTime(f64),
    #[error("beta_n = {0} leaves no usable cutoff")]
    DegenerateBeta(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub n: u64,
    pub xi: f64,
    pub tail_bound: f64,
    pub degenerate_t: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    M0,
    Top,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::M0 => "M0",
            Family::Top => "Top",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCert {
    pub n: u64,
    pub value: f64,
    pub family: Family,
    pub cutoff: u64,
    /// The cutoff needed support beyond the compared state's `L_max`.
    pub truncated: bool,
}

pub fn trotter_error_exact(state: &SphericalState, p: &TrotterParams) -> Result<ErrorPoint, EngineError> {
    trotter_error_exact_with(state, p, Execution::default())
}

pub fn trotter_error_exact_with(
    state: &SphericalState,
    p: &TrotterParams,
    exec: Execution,
) -> Result<ErrorPoint, EngineError> {
    let eff = effective_rotation(p);
    let law = state.law();
    let sum = if eff.near_identity {
        0.0
    } else {
        match law {
            StateLaw::FiniteSupport => {
                let mut acc = 0.0;
                for b in state.explicit_blocks() {
                    acc += block_error_sqr(b, &eff)?;
                }
                acc
            }
            StateLaw::PowerLawM0 { c, gamma, l_max } => m0_error_sqr(c, gamma, l_max, eff.beta_n()),
            StateLaw::PowerLawTop { c, gamma, l_max } => {
                let top = TopElement::new(eff.beta_n(), eff.euler.alpha_plus_gamma());
                sum_range(exec, 1..l_max + 1, |l| 2.0 * top.one_minus_re(l) * power_law_weight(c, gamma, l))
            }
        }
    };
    Ok(ErrorPoint { n: p.n, xi: sum.sqrt(), tail_bound: law.tail_bound(), degenerate_t: p.degenerate_t() })
}

/// `Σ_{ℓ=1}^{L} 2(1 − P_ℓ(cos β))·C ℓ^{-(1+γ)}`; the recurrence is sequential.
fn m0_error_sqr(c: f64, gamma: f64, l_max: u64, beta: f64) -> f64 {
    let terms = OneMinusLegendre::new(beta)
        .enumerate()
        .skip(1)
        .take(l_max as usize)
        .map(|(l, q)| 2.0 * q * power_law_weight(c, gamma, l as u64));
    sum_sequence(terms)
}

/// `‖(D^{(ℓ)} − I) ψ^{(ℓ)}‖²` for one explicit block.
fn block_error_sqr(b: &BlockVector, eff: &EffectiveRotation) -> Result<f64, EngineError> {
    let e = eff.euler;
    let l = b.ell as i64;
    if let Some((m, z)) = b.single_mode() {
        let one_minus = if b.ell == 0 {
            0.0
        } else if m == 0 {
            one_minus_legendre(b.ell, e.beta)
        } else if m.abs() == l {
            // d_{−ℓ,−ℓ} = d_{ℓ,ℓ}; the phase flips sign, Re unchanged.
            TopElement::new(e.beta, e.alpha_plus_gamma()).one_minus_re(b.ell)
        } else {
            1.0 - wigner_d(b.ell, e)?.get(m, m)?.re
        };
        return Ok(2.0 * one_minus * z.norm_sqr());
    }
    let d = wigner_d(b.ell, e)?;
    let psi = b.to_vector();
    let diff = &d.entries * &psi - &psi;
    Ok(diff.norm_squared())
}

/// `exp(−iτJ_y)exp(−iτJ_x)` raised to the `n`-th power by explicit products,
/// minus `exp(−it(J_x+J_y))`, on `H_ℓ`.
pub fn oracle_difference_block(ell: u64, p: &TrotterParams) -> Result<CMatrix, EngineError> {
    let g = generator_matrices(ell)?;
    let tau = p.step_time();
    let ux = unitary_exp(&g.jx, tau);
    let uy = unitary_exp(&g.jy, tau);
    let step = match p.ordering {
        Ordering::YThenX => &uy * &ux,
        Ordering::XThenY => &ux * &uy,
    };
    let mut power = step.clone();
    for _ in 1..p.n {
        power = &power * &step;
    }
    let target = unitary_exp(&(&g.jx + &g.jy), p.t);
    Ok(power - target)
}

pub fn trotter_error_oracle(state: &SphericalState, p: &TrotterParams) -> Result<f64, EngineError> {
    let mut acc = 0.0;
    for b in state.materialize()?.explicit_blocks() {
        let diff = oracle_difference_block(b.ell, p)?;
        acc += (diff * b.to_vector()).norm_squared();
    }
    Ok(acc.sqrt())
}

/// `χ_n ‖∫₀¹ du e^{-iuχ_n ν̂_n·L} (ν̂_n·L) ψ‖` by Gauss–Legendre quadrature.
pub fn error_via_integral(state: &SphericalState, p: &TrotterParams, quad_points: usize) -> Result<f64, EngineError> {
    if quad_points == 0 {
        return Err(EngineError::Parameter("quad_points must be at least 1".into()));
    }
    let eff = effective_rotation(p);
    if eff.near_identity {
        return Ok(0.0);
    }
    let (nodes, weights) = gauss_legendre_unit(quad_points);
    let axis = eff.nu_n.to_array();
    let mut acc = 0.0;
    for b in state.materialize()?.explicit_blocks() {
        let a = generator_matrices(b.ell)?.along(axis);
        let eig = a.clone().symmetric_eigen();
        // Work in the eigenbasis of ν̂_n·L, where the propagator is diagonal.
        let proj: CVector = eig.eigenvectors.adjoint() * (&a * b.to_vector());
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let mut integral = Complex64::new(0.0, 0.0);
            for (&u, &w) in nodes.iter().zip(&weights) {
                integral += Complex64::from_polar(w, -u * eff.chi_n * lambda);
            }
            acc += (integral * proj[k]).norm_sqr();
        }
    }
    Ok(eff.chi_n * acc.sqrt())
}

/// `(1/2)|sin(t/√2)| ‖(L_x+L_y)ψ‖ |t|`.
pub fn prefactor_regular(state: &SphericalState, t: f64) -> Result<f64, EngineError> {
    let lsum = apply_l_along(state, [1.0, 1.0, 0.0])?;
    Ok(0.5 * (t * FRAC_1_SQRT_2).sin().abs() * lsum.norm() * t.abs())
}

/// `lim n·ξ_n = ‖(û·L)ψ‖ · c(t)` where `û` is the limiting effective axis
/// and `c(t)` the coefficient of `χ_n ~ c/n`. `None` at degenerate `t`.
pub fn regular_asymptote(state: &SphericalState, t: f64, ordering: Ordering) -> Result<Option<f64>, EngineError> {
    let Some(axis) = limiting_error_axis(t, ordering) else {
        return Ok(None);
    };
    let lu = apply_l_along(state, axis.to_array())?;
    Ok(Some(lu.norm() * chi_asymptote(t)))
}

fn check_family(gamma: f64, c: f64) -> Result<(), EngineError> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(EngineError::Parameter(format!("gamma must lie in (0, 2), got {gamma}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(EngineError::Parameter(format!("C must be positive, got {c}")));
    }
    Ok(())
}

/// `⌊1/sin β⌋`: below it `ℓ² sin²β ≤ 1`.
pub fn m0_cutoff(beta: f64) -> Result<u64, EngineError> {
    let s = beta.sin();
    if s.is_nan() || s <= 0.0 {
        return Err(EngineError::DegenerateBeta(beta));
    }
    Ok((1.0 / s).floor() as u64)
}

/// `⌈ln(1/2) / (2 ln cos(β/2))⌉`: from it on, `cos(β/2)^{2ℓ} ≤ 1/2`.
pub fn top_cutoff(beta: f64) -> Result<u64, EngineError> {
    if !(beta > 0.0 && beta < std::f64::consts::PI) {
        return Err(EngineError::DegenerateBeta(beta));
    }
    let s = (0.25 * beta).sin();
    let log_cos_half = (-2.0 * s * s).ln_1p();
    let x = std::f64::consts::LN_2 / (-2.0 * log_cos_half);
    // Snap ratios that are integers up to rounding, e.g. β = π/2 gives 1.
    let snapped = if (x - x.round()).abs() < 1e-12 * x.max(1.0) { x.round() } else { x.ceil() };
    Ok(snapped.max(1.0) as u64)
}

/// `κ² C sin⁴β L^{4−γ}/(4−γ)` with `L = min(L_n, L_max)`, square-rooted.
pub fn m0_certificate_value(c: f64, gamma: f64, beta: f64, cutoff: u64) -> f64 {
    let s2 = beta.sin().powi(2);
    let l = cutoff as f64;
    KAPPA * s2 * (c * l.powf(4.0 - gamma) / (4.0 - gamma)).sqrt()
}

/// `√((C/4γ)(L_n^{-γ} − (L_max+1)^{-γ}))`; the subtraction is absent for
/// the untruncated law.
pub fn top_certificate_value(c: f64, gamma: f64, cutoff: u64, l_max: Option<u64>) -> f64 {
    let head = (cutoff as f64).powf(-gamma);
    let tail = l_max.map_or(0.0, |l| ((l + 1) as f64).powf(-gamma));
    (c / (4.0 * gamma) * (head - tail).max(0.0)).sqrt()
}

pub fn lower_bound_m0(
    gamma: f64,
    c: f64,
    p: &TrotterParams,
    l_max: Option<u64>,
) -> Result<LowerBoundCert, EngineError> {
    check_family(gamma, c)?;
    if is_degenerate_time(p.t) {
        return Err(EngineError::DegenerateTime(p.t));
    }
    let beta = effective_rotation(p).beta_n();
    let cutoff = m0_cutoff(beta)?;
    let kept = l_max.map_or(cutoff, |l| cutoff.min(l));
    Ok(LowerBoundCert {
        n: p.n,
        value: m0_certificate_value(c, gamma, beta, kept),
        family: Family::M0,
        cutoff,
        truncated: kept < cutoff,
    })
}

pub fn lower_bound_top(
    gamma: f64,
    c: f64,
    p: &TrotterParams,
    l_max: Option<u64>,
) -> Result<LowerBoundCert, EngineError> {
    check_family(gamma, c)?;
    if is_degenerate_time(p.t) {
        return Err(EngineError::DegenerateTime(p.t));
    }
    let beta = effective_rotation(p).beta_n();
    let cutoff = top_cutoff(beta)?;
    Ok(LowerBoundCert {
        n: p.n,
        value: top_certificate_value(c, gamma, cutoff, l_max),
        family: Family::Top,
        cutoff,
        truncated: l_max.is_some_and(|l| l < cutoff),
    })
}

/// Certificate for a power-law state, truncated at the state's `L_max`.
pub fn certificate_for(state: &SphericalState, p: &TrotterParams) -> Result<Option<LowerBoundCert>, EngineError> {
    match state.law() {
        StateLaw::FiniteSupport => Ok(None),
        StateLaw::PowerLawM0 { c, gamma, l_max } => lower_bound_m0(gamma, c, p, Some(l_max)).map(Some),
        StateLaw::PowerLawTop { c, gamma, l_max } => lower_bound_top(gamma, c, p, Some(l_max)).map(Some),
    }
}
