//! Trotter step rotation and the effective error rotation.
//!
//! One Trotter step is itself a rotation `(ω_n, ρ̂_n)`; `n` steps about a
//! fixed axis compose by angle addition, so `(step)^n = (n·ω_n, ρ̂_n)`
//! exactly. Undoing the target evolution `e^{-i√2 t ν̂·L}` leaves the
//! effective rotation `(χ_n, ν̂_n)` whose distance from the identity is the
//! Trotter error.
//!
//! For the `Y_THEN_X` ordering the step axis is
//! `(cos τ, cos τ, −sin τ)/√(1+cos²τ)` with `τ = t/2n`; the other ordering
//! flips the sign of the z component.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::{
    angle_of, compose, AxisAngle, EulerZYZ, UnitQuaternion, UnitVector3,
};

/// Distance in `t` from a zero of `sin(t/√2)` below which `t` is degenerate.
pub const DEGENERATE_T_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("number of Trotter steps must be at least 1")]
    ZeroSteps,
    #[error("evolution time must be finite, got {0}")]
    NonFiniteTime(f64),
}

/// Factor order inside one Trotter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Ordering {
    /// `e^{-i(t/n)L_y} e^{-i(t/n)L_x}`: `L_x` acts first.
    #[default]
    YThenX,
    /// `e^{-i(t/n)L_x} e^{-i(t/n)L_y}`.
    XThenY,
}

impl Ordering {
    pub fn both() -> [Ordering; 2] {
        [Ordering::YThenX, Ordering::XThenY]
    }
}

impl std::fmt::Display for Ordering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ordering::YThenX => "Y_THEN_X",
            Ordering::XThenY => "X_THEN_Y",
        })
    }
}

impl std::str::FromStr for Ordering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "Y_THEN_X" | "YX" => Ok(Ordering::YThenX),
            "X_THEN_Y" | "XY" => Ok(Ordering::XThenY),
            other => Err(format!("unknown ordering '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterParams {
    pub t: f64,
    pub n: u64,
    pub ordering: Ordering,
}

impl TrotterParams {
    pub fn new(t: f64, n: u64) -> Result<Self, KinematicsError> {
        Self::with_ordering(t, n, Ordering::default())
    }

    pub fn with_ordering(t: f64, n: u64, ordering: Ordering) -> Result<Self, KinematicsError> {
        if n == 0 {
            return Err(KinematicsError::ZeroSteps);
        }
        if !t.is_finite() {
            return Err(KinematicsError::NonFiniteTime(t));
        }
        Ok(Self { t, n, ordering })
    }

    pub fn step_time(&self) -> f64 {
        self.t / self.n as f64
    }

    pub fn degenerate_t(&self) -> bool {
        is_degenerate_time(self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRotation {
    pub omega_n: f64,
    pub rho_n: UnitVector3,
    pub near_identity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRotation {
    pub chi_n: f64,
    pub nu_n: UnitVector3,
    pub euler: EulerZYZ,
    pub near_identity: bool,
    pub quaternion: UnitQuaternion,
}

impl EffectiveRotation {
    pub fn axis_angle(&self) -> AxisAngle {
        AxisAngle { angle: self.chi_n, axis: self.nu_n, near_identity: self.near_identity }
    }

    pub fn beta_n(&self) -> f64 {
        self.euler.beta
    }
}

/// True when `t` lies within [`DEGENERATE_T_TOL`] of a zero of `sin(t/√2)`.
pub fn is_degenerate_time(t: f64) -> bool {
    let period = SQRT_2 * PI;
    let k = (t / period).round();
    (t - k * period).abs() < DEGENERATE_T_TOL
}

/// Axis-angle of one Trotter step, composed from the two single-generator
/// rotations.
pub fn step_rotation(p: &TrotterParams) -> StepRotation {
    let tau = p.step_time();
    let rx = AxisAngle::about_x(tau);
    let ry = AxisAngle::about_y(tau);
    let r = match p.ordering {
        Ordering::YThenX => compose(ry, rx),
        Ordering::XThenY => compose(rx, ry),
    };
    StepRotation { omega_n: r.angle, rho_n: r.axis, near_identity: r.near_identity }
}

/// The single rotation `e^{+i√2 t ν̂·L} · (step)^n`.
pub fn effective_rotation(p: &TrotterParams) -> EffectiveRotation {
    let step = step_rotation(p);
    let trotter = if step.near_identity {
        UnitQuaternion::IDENTITY
    } else {
        UnitQuaternion::from_rotation(p.n as f64 * step.omega_n, step.rho_n)
    };
    let target_inverse = UnitQuaternion::from_rotation(-SQRT_2 * p.t, UnitVector3::diagonal_xy());
    let q = target_inverse * trotter;
    let r = angle_of(q);
    let euler = if r.near_identity { EulerZYZ::IDENTITY } else { q.euler_zyz() };
    EffectiveRotation { chi_n: r.angle, nu_n: r.axis, euler, near_identity: r.near_identity, quaternion: q }
}

/// Coefficient `c` in `χ_n ~ c/n`: `(1/√2)·|sin(t/√2)|·|t|`.
pub fn chi_asymptote(t: f64) -> f64 {
    FRAC_1_SQRT_2 * (t * FRAC_1_SQRT_2).sin().abs() * t.abs()
}

/// Limit of the effective axis `ν̂_n` as `n → ∞`.
///
/// To first order the step equals `e^{-i(t/n)(L_x+L_y) ∓ (t²/2n²)[…]}`,
/// so the residual generator is `L_z` averaged over the target rotation
/// about `ν̂`. The average stays in the plane orthogonal to `ν̂`:
/// `∓ sgn(sin T)·(cos T·ẑ + sin T·(ẑ × ν̂))` with `T = t/√2`, upper
/// sign for `Y_THEN_X`. Returns `None` at degenerate `t`.
pub fn limiting_error_axis(t: f64, ordering: Ordering) -> Option<UnitVector3> {
    if is_degenerate_time(t) {
        return None;
    }
    let big_t = t * FRAC_1_SQRT_2;
    let (s, c) = big_t.sin_cos();
    let z_cross_nu = [-FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0];
    let sign = match ordering {
        Ordering::YThenX => -1.0,
        Ordering::XThenY => 1.0,
    } * s.signum()
        * t.signum();
    UnitVector3::new(
        sign * s * z_cross_nu[0],
        sign * s * z_cross_nu[1],
        sign * c,
    )
    .ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(t: f64, n: u64) -> TrotterParams {
        TrotterParams::new(t, n).unwrap()
    }

    #[test]
    fn step_examples() {
        let s = step_rotation(&params(0.0, 7));
        assert!(s.near_identity);
        assert_eq!(s.omega_n, 0.0);

        let s = step_rotation(&params(PI, 1));
        assert_abs_diff_eq!(s.omega_n, PI, epsilon = 1e-15);
    }

    #[test]
    fn step_matches_closed_forms() {
        for &(t, n) in &[(1.0, 1u64), (0.5, 3), (3.0, 10), (-2.0, 7), (1.0, 1000)] {
            for ordering in Ordering::both() {
                let p = TrotterParams::with_ordering(t, n, ordering).unwrap();
                let s = step_rotation(&p);
                let tau = t / (2.0 * n as f64);
                let omega = 2.0 * (tau.cos().powi(2)).acos();
                assert_abs_diff_eq!(s.omega_n, omega, epsilon = 1e-12);
                let norm = (1.0 + tau.cos().powi(2)).sqrt();
                let zsign = if ordering == Ordering::YThenX { -1.0 } else { 1.0 };
                // For t < 0 the step rotates by |ω| about the opposite axis.
                let flip = t.signum();
                assert_abs_diff_eq!(s.rho_n.x, flip * tau.cos() / norm, epsilon = 1e-12);
                assert_abs_diff_eq!(s.rho_n.y, flip * tau.cos() / norm, epsilon = 1e-12);
                assert_abs_diff_eq!(s.rho_n.z, flip * zsign * tau.sin() / norm, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn n_omega_limit() {
        let s = step_rotation(&params(1.0, 1_000_000));
        assert!((1e6 * s.omega_n - SQRT_2).abs() <= 1e-10);
    }

    #[test]
    fn effective_identity_at_zero_time() {
        let e = effective_rotation(&params(0.0, 5));
        assert!(e.near_identity);
        assert_eq!(e.chi_n, 0.0);
        assert_eq!(e.euler, EulerZYZ::IDENTITY);
    }

    #[test]
    fn cos_half_chi_closed_form() {
        for &(t, n) in &[(1.0, 1u64), (0.5, 4), (3.0, 17), (1.0, 1000)] {
            let p = params(t, n);
            let s = step_rotation(&p);
            let e = effective_rotation(&p);
            let half_target = t / SQRT_2;
            let half_trotter = 0.5 * n as f64 * s.omega_n;
            let rhs = half_trotter.cos() * half_target.cos()
                + s.rho_n.dot(UnitVector3::diagonal_xy()) * half_trotter.sin() * half_target.sin();
            // cos(χ/2) may carry the double-cover sign.
            assert_abs_diff_eq!((0.5 * e.chi_n).cos(), rhs.abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn chi_asymptote_examples() {
        assert_eq!(chi_asymptote(0.0), 0.0);
        assert!(chi_asymptote(SQRT_2 * PI) < 1e-14);
        assert_abs_diff_eq!(chi_asymptote(1.0), 0.459_362_684_932_784_2, epsilon = 1e-12);
    }

    #[test]
    fn n_chi_converges() {
        let e = effective_rotation(&params(1.0, 1_000_000));
        let rel = (1e6 * e.chi_n - chi_asymptote(1.0)) / chi_asymptote(1.0);
        assert!(rel.abs() <= 1e-4, "rel = {rel}");
        for &t in &[0.5, 1.0, 3.0] {
            let e = effective_rotation(&params(t, 100_000));
            let rel = (1e5 * e.chi_n - chi_asymptote(t)) / chi_asymptote(t);
            assert!(rel.abs() <= 1e-3, "t = {t}: rel = {rel}");
        }
    }

    #[test]
    fn effective_axis_tends_to_limit() {
        for &t in &[0.5, 1.0, 3.0, -1.2] {
            for ordering in Ordering::both() {
                let limit = limiting_error_axis(t, ordering).unwrap();
                assert_abs_diff_eq!(limit.dot(UnitVector3::diagonal_xy()), 0.0, epsilon = 1e-15);
                let mut prev = f64::INFINITY;
                for &n in &[1_000u64, 10_000, 100_000] {
                    let p = TrotterParams::with_ordering(t, n, ordering).unwrap();
                    let d = effective_rotation(&p).nu_n.distance(limit);
                    assert!(d < prev, "t = {t}, n = {n}: {d} !< {prev}");
                    prev = d;
                }
                assert!(prev < 1e-4, "t = {t}: distance {prev}");
            }
        }
    }

    #[test]
    fn degenerate_times() {
        assert!(is_degenerate_time(0.0));
        assert!(is_degenerate_time(SQRT_2 * PI));
        assert!(is_degenerate_time(-2.0 * SQRT_2 * PI + 1e-10));
        assert!(!is_degenerate_time(1.0));
        assert!(limiting_error_axis(0.0, Ordering::YThenX).is_none());
    }

    #[test]
    fn params_validation() {
        assert_eq!(TrotterParams::new(1.0, 0), Err(KinematicsError::ZeroSteps));
        assert!(matches!(TrotterParams::new(f64::INFINITY, 3), Err(KinematicsError::NonFiniteTime(_))));
        assert_eq!("x_then_y".parse::<Ordering>(), Ok(Ordering::XThenY));
    }
}
