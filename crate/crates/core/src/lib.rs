//! Exact state-dependent Trotter error for the angular-momentum pair
//! `(L_x, L_y)` acting on `L²(S²)`.
//!
//! The Trotter product `(e^{-i(t/n)L_y} e^{-i(t/n)L_x})^n` and the target
//! evolution `e^{-it(L_x+L_y)}` are both rotations, so their mismatch is a
//! single rotation `(χ_n, ν̂_n)`. The error on a state then splits into
//! independent sums over the irreducible blocks `H_ℓ`, which is what makes
//! spectral sums up to `ℓ ~ 10⁷` cheap.
//!
//! Module map:
//! - [`rotation`]: axis-angle, unit quaternion and ZYZ Euler arithmetic.
//! - [`kinematics`]: the Trotter step rotation and the effective error rotation.
//! - [`wigner`]: Wigner-D blocks, Legendre recurrences, special elements.
//! - [`state`]: spherical-harmonic states, power-law families, generators.
//! - [`error`]: the exact error, the brute-force oracle, certificates.
//! - [`analysis`]: n-scans, exponent fits and CSV/JSON emission.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod kinematics;
pub mod linalg;
pub mod quadrature;
pub mod rotation;
pub mod state;
pub mod wigner;

pub use num_complex::Complex64;

/// Largest `ℓ` for which dense `(2ℓ+1)×(2ℓ+1)` matrices are built.
pub const DENSE_CAP: u64 = 200;
