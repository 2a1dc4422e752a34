//! Wigner-D blocks and the special elements used by the error sums.
//!
//! Basis order inside a block is `m = −ℓ, …, ℓ`, so matrix index `i`
//! corresponds to `m = i − ℓ`. `D^{(ℓ)}_{mm'}(α, β, γ) = e^{-iαm} d^{ℓ}_{mm'}(β) e^{-iγm'}`
//! with `d^ℓ(β) = e^{-iβJ_y}` in the Condon–Shortley phase.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::rotation::EulerZYZ;
use crate::state::generator_jx_real;
use crate::DENSE_CAP;

#[derive(Debug, Error, PartialEq)]
pub enum WignerError {
    #[error("Legendre argument {0} outside [-1, 1]")]
    Domain(f64),
    #[error("dense block for l = {ell} exceeds the cap {cap}; use the D_00 / D_ll element paths")]
    CapExceeded { ell: u64, cap: u64 },
    #[error("index m = {m} outside the l = {ell} block")]
    Index { ell: u64, m: i64 },
}

/// Dense representation of a rotation on `H_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerBlock {
    pub ell: u64,
    pub entries: CMatrix,
}

impl WignerBlock {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    fn index(&self, m: i64) -> Result<usize, WignerError> {
        let l = self.ell as i64;
        if m.abs() > l {
            return Err(WignerError::Index { ell: self.ell, m });
        }
        Ok((m + l) as usize)
    }

    /// `D_{m m'}`.
    pub fn get(&self, m: i64, m_prime: i64) -> Result<Complex64, WignerError> {
        Ok(self.entries[(self.index(m)?, self.index(m_prime)?)])
    }
}

/// `P_ℓ(x)` by the upward three-term recurrence.
pub fn legendre(ell: u64, x: f64) -> Result<f64, WignerError> {
    if x.is_nan() || x.abs() > 1.0 + 1e-12 {
        return Err(WignerError::Domain(x));
    }
    let x = x.clamp(-1.0, 1.0);
    if ell == 0 {
        return Ok(1.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..ell {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// Iterator over `1 − P_ℓ(cos β)` for `ℓ = 0, 1, 2, …`.
///
/// Substituting `P = 1 − Q` and `cos β = 1 − v` with `v = 2 sin²(β/2)`
/// into the Legendre recurrence gives
/// `(ℓ+1) Q_{ℓ+1} = (2ℓ+1)(Q_ℓ + v(1 − Q_ℓ)) − ℓ Q_{ℓ−1}`,
/// which keeps relative accuracy when `Q_ℓ ≪ 1`.
#[derive(Debug, Clone)]
pub struct OneMinusLegendre {
    versine: f64,
    prev: f64,
    curr: f64,
    ell: u64,
}

impl OneMinusLegendre {
    pub fn new(beta: f64) -> Self {
        let half = (0.5 * beta).sin();
        Self { versine: 2.0 * half * half, prev: 0.0, curr: 0.0, ell: 0 }
    }
}

impl Iterator for OneMinusLegendre {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.curr;
        let next = if self.ell == 0 {
            self.versine
        } else {
            let l = self.ell as f64;
            ((2.0 * l + 1.0) * (self.curr + self.versine * (1.0 - self.curr)) - l * self.prev) / (l + 1.0)
        };
        self.prev = self.curr;
        self.curr = next;
        self.ell += 1;
        Some(out)
    }
}

/// `1 − P_ℓ(cos β)` without cancellation.
pub fn one_minus_legendre(ell: u64, beta: f64) -> f64 {
    OneMinusLegendre::new(beta).nth(ell as usize).unwrap_or(0.0)
}

/// `D^{(ℓ)}_{00} = P_ℓ(cos β)`.
pub fn d00(ell: u64, beta: f64) -> f64 {
    legendre(ell, beta.cos()).expect("cos β lies in [-1, 1]")
}

/// `ln cos(β/2)`, computed as `ln(1 − 2 sin²(β/4))`.
fn ln_cos_half(beta: f64) -> f64 {
    let s = (0.25 * beta).sin();
    (-2.0 * s * s).ln_1p()
}

/// `D^{(ℓ)}_{ℓℓ} = cos(β/2)^{2ℓ} e^{-iℓ(α+γ)}`, evaluated in the log domain.
pub fn dll(ell: u64, beta: f64, alpha_plus_gamma: f64) -> Complex64 {
    if ell == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if beta >= PI {
        return Complex64::new(0.0, 0.0);
    }
    let modulus = (2.0 * ell as f64 * ln_cos_half(beta)).exp();
    Complex64::from_polar(modulus, -(ell as f64) * alpha_plus_gamma)
}

/// Precomputed `ln cos(β/2)` for evaluating `1 − Re D_{ℓℓ}` over many `ℓ`.
#[derive(Debug, Clone, Copy)]
pub struct TopElement {
    log_cos_half: f64,
    alpha_plus_gamma: f64,
    antipodal: bool,
}

impl TopElement {
    pub fn new(beta: f64, alpha_plus_gamma: f64) -> Self {
        Self {
            log_cos_half: ln_cos_half(beta),
            alpha_plus_gamma,
            antipodal: beta >= PI,
        }
    }

    /// `1 − Re D_{ℓℓ} = (1 − ρ) + 2ρ sin²(ℓ(α+γ)/2)` with `ρ = cos(β/2)^{2ℓ}`.
    #[inline]
    pub fn one_minus_re(&self, ell: u64) -> f64 {
        if ell == 0 {
            return 0.0;
        }
        if self.antipodal {
            return 1.0;
        }
        let x = 2.0 * ell as f64 * self.log_cos_half;
        let one_minus_rho = -x.exp_m1();
        let rho = 1.0 - one_minus_rho;
        let s = (0.5 * ell as f64 * self.alpha_plus_gamma).sin();
        one_minus_rho + 2.0 * rho * s * s
    }
}

/// `1 − Re D^{(ℓ)}_{ℓℓ}`.
pub fn one_minus_re_dll(ell: u64, beta: f64, alpha_plus_gamma: f64) -> f64 {
    TopElement::new(beta, alpha_plus_gamma).one_minus_re(ell)
}

/// `[1 + ℓ(ℓ+1) sin²β]^{-1/4}`, an upper bound on `P_ℓ(cos β)`.
pub fn legendre_upper_bound(ell: u64, beta: f64) -> f64 {
    let l = ell as f64;
    let s = beta.sin();
    (1.0 + l * (l + 1.0) * s * s).powf(-0.25)
}

/// Real small-d matrix `d^ℓ(β)`.
///
/// `J_y = e^{-i(π/2)J_z} J_x e^{i(π/2)J_z}`, so
/// `d_{mm'} = Re[(−i)^{m−m'} (V e^{-iβΛ} Vᵀ)_{mm'}]` where `J_x = VΛVᵀ` is
/// the real symmetric tridiagonal x-generator with eigenvalues `−ℓ…ℓ`.
pub fn small_d(ell: u64, beta: f64) -> Result<DMatrix<f64>, WignerError> {
    if ell > DENSE_CAP {
        return Err(WignerError::CapExceeded { ell, cap: DENSE_CAP });
    }
    let dim = (2 * ell + 1) as usize;
    if ell == 0 {
        return Ok(DMatrix::from_element(1, 1, 1.0));
    }
    if beta == 0.0 {
        return Ok(DMatrix::identity(dim, dim));
    }
    let eig = generator_jx_real(ell).symmetric_eigen();
    let v = &eig.eigenvectors;
    // The spectrum is exactly the integers −ℓ…ℓ.
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -beta * lambda.round()))
        .collect();
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    let rotate = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    for i in 0..dim {
        for j in 0..dim {
            let mut e = Complex64::new(0.0, 0.0);
            for (k, phase) in phases.iter().enumerate() {
                e += phase * (v[(i, k)] * v[(j, k)]);
            }
            let power = (i as i64 - j as i64).rem_euclid(4) as usize;
            d[(i, j)] = (rotate[power] * e).re;
        }
    }
    Ok(d)
}

pub fn wigner_d(ell: u64, e: EulerZYZ) -> Result<WignerBlock, WignerError> {
    let d = small_d(ell, e.beta)?;
    let l = ell as i64;
    let dim = d.nrows();
    let entries = CMatrix::from_fn(dim, dim, |i, j| {
        let m = i as i64 - l;
        let mp = j as i64 - l;
        Complex64::from_polar(d[(i, j)], -(e.alpha * m as f64 + e.gamma * mp as f64))
    });
    Ok(WignerBlock { ell, entries })
}
