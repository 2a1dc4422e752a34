//! Spherical-harmonic states and the per-ℓ angular-momentum generators.
//!
//! Finite states keep explicit blocks. The two power-law families are
//! generated from their law on demand: a block with `ℓ ~ 10⁷` would need
//! `2ℓ+1` stored amplitudes for a single non-zero one.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{sum_range, Execution};
use crate::linalg::{CMatrix, CVector};
use crate::DENSE_CAP;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("index (l = {ell}, m = {m}) outside the block")]
    Index { ell: u64, m: i64 },
    #[error("invalid state parameter: {0}")]
    Parameter(String),
    #[error("l = {ell} exceeds the dense cap {cap}")]
    CapExceeded { ell: u64, cap: u64 },
    #[error("block for l = {ell} has {got} coefficients, expected {expected}")]
    BlockLength { ell: u64, got: usize, expected: usize },
    #[error("summability is only defined for the power-law families")]
    Unsupported,
}

/// Coefficients of `ψ^{(ℓ)}`, indexed `m = −ℓ…ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    pub ell: u64,
    pub coeffs: Vec<Complex64>,
}

impl BlockVector {
    pub fn zeros(ell: u64) -> Self {
        Self { ell, coeffs: vec![Complex64::new(0.0, 0.0); (2 * ell + 1) as usize] }
    }

    pub fn new(ell: u64, coeffs: Vec<Complex64>) -> Result<Self, StateError> {
        let expected = (2 * ell + 1) as usize;
        if coeffs.len() != expected {
            return Err(StateError::BlockLength { ell, got: coeffs.len(), expected });
        }
        Ok(Self { ell, coeffs })
    }

    pub fn index(&self, m: i64) -> Result<usize, StateError> {
        if m.unsigned_abs() > self.ell {
            return Err(StateError::Index { ell: self.ell, m });
        }
        Ok((m + self.ell as i64) as usize)
    }

    pub fn get(&self, m: i64) -> Complex64 {
        self.index(m).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    pub fn set(&mut self, m: i64, value: Complex64) -> Result<(), StateError> {
        let i = self.index(m)?;
        self.coeffs[i] = value;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Some((m, ψ_m))` when exactly one coefficient is non-zero.
    pub fn single_mode(&self) -> Option<(i64, Complex64)> {
        let mut found = None;
        for (i, z) in self.coeffs.iter().enumerate() {
            if *z != Complex64::new(0.0, 0.0) {
                if found.is_some() {
                    return None;
                }
                found = Some((i as i64 - self.ell as i64, *z));
            }
        }
        found
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_column_slice(&self.coeffs)
    }
}

/// How a state's coefficients are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateLaw {
    FiniteSupport,
    /// `ψ_{ℓ,0} = √(C/ℓ^{1+γ})` for `1 ≤ ℓ ≤ L_max`.
    PowerLawM0 {
        #[serde(rename = "C")]
        c: f64,
        gamma: f64,
        #[serde(rename = "L_max")]
        l_max: u64,
    },
    /// `ψ_{ℓ,ℓ} = √(C/ℓ^{1+γ})` for `1 ≤ ℓ ≤ L_max`.
    PowerLawTop {
        #[serde(rename = "C")]
        c: f64,
        gamma: f64,
        #[serde(rename = "L_max")]
        l_max: u64,
    },
}

impl StateLaw {
    /// `(C, γ, L_max)` for the power-law variants.
    pub fn power_law(&self) -> Option<(f64, f64, u64)> {
        match *self {
            StateLaw::FiniteSupport => None,
            StateLaw::PowerLawM0 { c, gamma, l_max } | StateLaw::PowerLawTop { c, gamma, l_max } => {
                Some((c, gamma, l_max))
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            StateLaw::FiniteSupport => "finite",
            StateLaw::PowerLawM0 { .. } => "M0",
            StateLaw::PowerLawTop { .. } => "Top",
        }
    }

    /// Rigorous upper bound on `Σ_{ℓ > L_max} |ψ_ℓ|²` for the untruncated law.
    pub fn tail_mass(&self) -> f64 {
        match self.power_law() {
            None => 0.0,
            Some((c, gamma, l_max)) => c * zeta_tail_upper(1.0 + gamma, l_max + 1),
        }
    }

    /// `2·√(tail mass)`, the truncation bound on the Trotter error.
    pub fn tail_bound(&self) -> f64 {
        2.0 * self.tail_mass().sqrt()
    }
}

/// Upper bound on `Σ_{k ≥ start} k^{-s}` for `s > 1`, `start ≥ 1`.
///
/// Euler–Maclaurin truncated after the `B₂` term; the next correction
/// `−s(s+1)(s+2)/(720 N^{s+3})` is negative, so this over-estimates.
pub fn zeta_tail_upper(s: f64, start: u64) -> f64 {
    let n = start as f64;
    n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s / 12.0 * n.powf(-s - 1.0)
}

/// `|ψ_ℓ|² = C·ℓ^{-(1+γ)}`.
#[inline]
pub fn power_law_weight(c: f64, gamma: f64, ell: u64) -> f64 {
    c * (-(1.0 + gamma) * (ell as f64).ln()).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalState {
    law: StateLaw,
    blocks: BTreeMap<u64, BlockVector>,
}

impl SphericalState {
    pub fn empty() -> Self {
        Self { law: StateLaw::FiniteSupport, blocks: BTreeMap::new() }
    }

    pub fn from_blocks(blocks: impl IntoIterator<Item = BlockVector>) -> Self {
        let mut s = Self::empty();
        for b in blocks {
            s.blocks.insert(b.ell, b);
        }
        s
    }

    pub fn law(&self) -> StateLaw {
        self.law
    }

    pub fn is_finite_support(&self) -> bool {
        self.law == StateLaw::FiniteSupport
    }

    /// Highest populated `ℓ`.
    pub fn max_ell(&self) -> u64 {
        match self.law.power_law() {
            Some((_, _, l_max)) => l_max,
            None => self.blocks.keys().next_back().copied().unwrap_or(0),
        }
    }

    /// Explicitly stored blocks (empty for law-generated states).
    pub fn explicit_blocks(&self) -> impl Iterator<Item = &BlockVector> {
        self.blocks.values()
    }

    /// Block `ℓ`, generated from the law when needed.
    pub fn block(&self, ell: u64) -> Option<BlockVector> {
        match self.law {
            StateLaw::FiniteSupport => self.blocks.get(&ell).cloned(),
            StateLaw::PowerLawM0 { c, gamma, l_max } => {
                (1..=l_max).contains(&ell).then(|| {
                    let mut b = BlockVector::zeros(ell);
                    b.set(0, Complex64::new(power_law_weight(c, gamma, ell).sqrt(), 0.0)).unwrap();
                    b
                })
            }
            StateLaw::PowerLawTop { c, gamma, l_max } => {
                (1..=l_max).contains(&ell).then(|| {
                    let mut b = BlockVector::zeros(ell);
                    b.set(ell as i64, Complex64::new(power_law_weight(c, gamma, ell).sqrt(), 0.0)).unwrap();
                    b
                })
            }
        }
    }

    /// All populated blocks, ascending in `ℓ`. Materializes law states.
    pub fn blocks(&self) -> Vec<BlockVector> {
        match self.law {
            StateLaw::FiniteSupport => self.blocks.values().cloned().collect(),
            _ => (1..=self.max_ell()).filter_map(|l| self.block(l)).collect(),
        }
    }

    pub fn coefficient(&self, ell: u64, m: i64) -> Complex64 {
        self.block(ell).map(|b| b.get(m)).unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr_with(Execution::default())
    }

    pub fn norm_sqr_with(&self, exec: Execution) -> f64 {
        match self.law.power_law() {
            None => self.blocks.values().map(BlockVector::norm_sqr).sum(),
            Some((c, gamma, l_max)) => sum_range(exec, 1..l_max + 1, |l| power_law_weight(c, gamma, l)),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Converts a law state with small support into explicit blocks.
    pub fn materialize(&self) -> Result<SphericalState, StateError> {
        if self.is_finite_support() {
            return Ok(self.clone());
        }
        if self.max_ell() > DENSE_CAP {
            return Err(StateError::CapExceeded { ell: self.max_ell(), cap: DENSE_CAP });
        }
        Ok(Self::from_blocks(self.blocks()))
    }
}

pub fn make_basis_state(ell: u64, m: i64) -> Result<SphericalState, StateError> {
    let mut b = BlockVector::zeros(ell);
    b.set(m, Complex64::new(1.0, 0.0))?;
    Ok(SphericalState::from_blocks([b]))
}

fn check_power_law(c: f64, gamma: f64, l_max: u64) -> Result<(), StateError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(StateError::Parameter(format!("C must be positive, got {c}")));
    }
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(StateError::Parameter(format!("gamma must lie in (0, 2), got {gamma}")));
    }
    if l_max < 1 {
        return Err(StateError::Parameter("L_max must be at least 1".into()));
    }
    Ok(())
}

/// `L_z`-kernel state with `|ψ_{ℓ,0}|² = C/ℓ^{1+γ}`, not renormalized.
pub fn make_power_law_m0(c: f64, gamma: f64, l_max: u64) -> Result<SphericalState, StateError> {
    check_power_law(c, gamma, l_max)?;
    Ok(SphericalState { law: StateLaw::PowerLawM0 { c, gamma, l_max }, blocks: BTreeMap::new() })
}

/// `L₊`-kernel state with `|ψ_{ℓ,ℓ}|² = C/ℓ^{1+γ}`, not renormalized.
pub fn make_power_law_top(c: f64, gamma: f64, l_max: u64) -> Result<SphericalState, StateError> {
    check_power_law(c, gamma, l_max)?;
    Ok(SphericalState { law: StateLaw::PowerLawTop { c, gamma, l_max }, blocks: BTreeMap::new() })
}

/// `J_x, J_y, J_z` on `H_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorTriple {
    pub ell: u64,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
}

impl GeneratorTriple {
    /// `n̂·J`.
    pub fn along(&self, axis: [f64; 3]) -> CMatrix {
        &self.jx * Complex64::new(axis[0], 0.0)
            + &self.jy * Complex64::new(axis[1], 0.0)
            + &self.jz * Complex64::new(axis[2], 0.0)
    }

    pub fn casimir(&self) -> CMatrix {
        &self.jx * &self.jx + &self.jy * &self.jy + &self.jz * &self.jz
    }
}

/// `⟨m+1|J₊|m⟩ = √(ℓ(ℓ+1) − m(m+1))`.
fn ladder(ell: u64, m: i64) -> f64 {
    let l = ell as f64;
    let m = m as f64;
    (l * (l + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Real symmetric tridiagonal `J_x`.
pub fn generator_jx_real(ell: u64) -> DMatrix<f64> {
    let dim = (2 * ell + 1) as usize;
    let l = ell as i64;
    let mut jx = DMatrix::zeros(dim, dim);
    for i in 0..dim.saturating_sub(1) {
        let a = 0.5 * ladder(ell, i as i64 - l);
        jx[(i + 1, i)] = a;
        jx[(i, i + 1)] = a;
    }
    jx
}

pub fn generator_matrices(ell: u64) -> Result<GeneratorTriple, StateError> {
    if ell > DENSE_CAP {
        return Err(StateError::CapExceeded { ell, cap: DENSE_CAP });
    }
    let dim = (2 * ell + 1) as usize;
    let l = ell as i64;
    let zero = Complex64::new(0.0, 0.0);
    let mut jx = CMatrix::from_element(dim, dim, zero);
    let mut jy = CMatrix::from_element(dim, dim, zero);
    let mut jz = CMatrix::from_element(dim, dim, zero);
    for i in 0..dim {
        jz[(i, i)] = Complex64::new((i as i64 - l) as f64, 0.0);
        if i + 1 < dim {
            let a = ladder(ell, i as i64 - l);
            // J₊ = J_x + iJ_y has a at (i+1, i); J₋ is its transpose.
            jx[(i + 1, i)] = Complex64::new(0.5 * a, 0.0);
            jx[(i, i + 1)] = Complex64::new(0.5 * a, 0.0);
            jy[(i + 1, i)] = Complex64::new(0.0, -0.5 * a);
            jy[(i, i + 1)] = Complex64::new(0.0, 0.5 * a);
        }
    }
    Ok(GeneratorTriple { ell, jx, jy, jz })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LDirection {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl std::str::FromStr for LDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(LDirection::X),
            "y" | "Y" => Ok(LDirection::Y),
            "z" | "Z" => Ok(LDirection::Z),
            "+" | "plus" => Ok(LDirection::Plus),
            "-" | "minus" => Ok(LDirection::Minus),
            other => Err(format!("unknown direction '{other}'")),
        }
    }
}

/// Blockwise `L_dir ψ`.
pub fn apply_l(state: &SphericalState, direction: LDirection) -> Result<SphericalState, StateError> {
    let i = Complex64::new(0.0, 1.0);
    apply_generator(state, |g| match direction {
        LDirection::X => g.jx.clone(),
        LDirection::Y => g.jy.clone(),
        LDirection::Z => g.jz.clone(),
        LDirection::Plus => &g.jx + &g.jy * i,
        LDirection::Minus => &g.jx - &g.jy * i,
    })
}

/// Blockwise `(n̂·L) ψ` for an arbitrary real direction.
pub fn apply_l_along(state: &SphericalState, axis: [f64; 3]) -> Result<SphericalState, StateError> {
    apply_generator(state, |g| g.along(axis))
}

fn apply_generator<F>(state: &SphericalState, op: F) -> Result<SphericalState, StateError>
where
    F: Fn(&GeneratorTriple) -> CMatrix,
{
    let mut out = Vec::new();
    for b in state.materialize()?.explicit_blocks() {
        let g = generator_matrices(b.ell)?;
        let v = op(&g) * b.to_vector();
        out.push(BlockVector { ell: b.ell, coeffs: v.iter().copied().collect() });
    }
    Ok(SphericalState::from_blocks(out))
}

/// Convergence report for `Σ_ℓ (ℓ(ℓ+1))^s |ψ_ℓ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summability {
    pub finite: bool,
    pub critical_exponent: f64,
}

/// Integral test on the untruncated law: the terms behave as
/// `ℓ^{2s−1−γ}`, so the sum converges iff `2s < γ`.
///
/// Finite-support laws are always summable and report an infinite critical
/// exponent.
pub fn domain_summability(law: &StateLaw, s: f64) -> Result<Summability, StateError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(StateError::Parameter(format!("s must be a finite non-negative number, got {s}")));
    }
    match law.power_law() {
        None => Ok(Summability { finite: true, critical_exponent: f64::INFINITY }),
        Some((_, gamma, _)) => Ok(Summability { finite: 2.0 * s < gamma, critical_exponent: 0.5 * gamma }),
    }
}

#[derive(Serialize, Deserialize)]
struct WireBlock {
    ell: u64,
    coeffs: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct WireState {
    law: StateLaw,
    blocks: Vec<WireBlock>,
}

impl Serialize for SphericalState {
    /// Law-generated states serialize with an empty block list; the law
    /// regenerates them.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let blocks = self
            .blocks
            .values()
            .map(|b| WireBlock { ell: b.ell, coeffs: b.coeffs.iter().map(|z| [z.re, z.im]).collect() })
            .collect();
        WireState { law: self.law, blocks }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SphericalState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = WireState::deserialize(deserializer)?;
        match wire.law {
            StateLaw::FiniteSupport => {
                let mut blocks = Vec::new();
                for wb in wire.blocks {
                    let coeffs = wb.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                    blocks.push(BlockVector::new(wb.ell, coeffs).map_err(D::Error::custom)?);
                }
                Ok(SphericalState::from_blocks(blocks))
            }
            StateLaw::PowerLawM0 { c, gamma, l_max } => {
                make_power_law_m0(c, gamma, l_max).map_err(D::Error::custom)
            }
            StateLaw::PowerLawTop { c, gamma, l_max } => {
                make_power_law_top(c, gamma, l_max).map_err(D::Error::custom)
            }
        }
    }
}
