//! SO(3) arithmetic in axis-angle, unit-quaternion and ZYZ Euler form.
//!
//! Conventions: a rotation by `χ` about `n̂` is the operator
//! `e^{-iχ n̂·L}`, backed by the quaternion `(cos χ/2, sin χ/2 · n̂)`.
//! The operator product `e^{-iω₁ n̂₁·L} e^{-iω₂ n̂₂·L}` is the Hamilton
//! product `q₁ ⊗ q₂`, whose vector part carries `+ n̂₁ × n̂₂`. This is
//! pinned by the ℓ = 1 matrix-exponential tests.

use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `‖v‖` below this marks a quaternion as the identity.
pub const NEAR_IDENTITY: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum RotationError {
    #[error("axis ({0}, {1}, {2}) has zero length")]
    ZeroAxis(f64, f64, f64),
    #[error("non-finite rotation parameter")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector3 {
    pub const X: Self = Self { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Self = Self { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Self = Self { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalizes `(x, y, z)`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, RotationError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(RotationError::NonFinite);
        }
        let norm = x.hypot(y).hypot(z);
        if norm == 0.0 {
            return Err(RotationError::ZeroAxis(x, y, z));
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    /// `(1, 1, 0)/√2`, the axis of the target evolution.
    pub fn diagonal_xy() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { x: h, y: h, z: 0.0 }
    }

    /// Axis with polar angle `theta` and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        Self {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, o: Self) -> [f64; 3] {
        [
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        ]
    }

    pub fn flipped(self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }

    /// Euclidean distance to `other`.
    pub fn distance(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y).hypot(self.z - other.z)
    }

    /// Polar angle `θ ∈ [0, π]`.
    pub fn polar(self) -> f64 {
        self.x.hypot(self.y).atan2(self.z)
    }

    /// Azimuth `φ ∈ (−π, π]`.
    pub fn azimuth(self) -> f64 {
        self.y.atan2(self.x)
    }
}

/// Rotation by `angle ∈ [0, π]` about `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    pub angle: f64,
    pub axis: UnitVector3,
    pub near_identity: bool,
}

impl AxisAngle {
    pub fn identity() -> Self {
        Self { angle: 0.0, axis: UnitVector3::Z, near_identity: true }
    }

    /// Canonical axis-angle form of a rotation by any real `angle`.
    pub fn new(angle: f64, axis: UnitVector3) -> Self {
        angle_of(UnitQuaternion::from_rotation(angle, axis))
    }

    pub fn about_x(angle: f64) -> Self {
        Self::new(angle, UnitVector3::X)
    }

    pub fn about_y(angle: f64) -> Self {
        Self::new(angle, UnitVector3::Y)
    }

    pub fn about_z(angle: f64) -> Self {
        Self::new(angle, UnitVector3::Z)
    }

    pub fn inverse(self) -> Self {
        if self.near_identity {
            return self;
        }
        Self { axis: self.axis.flipped(), ..self }
    }

    pub fn quaternion(self) -> UnitQuaternion {
        quat_from_axis_angle(self)
    }
}

/// Unit quaternion `(w, v)` with the double cover fixed by `w ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self { w: 1.0, vx: 0.0, vy: 0.0, vz: 0.0 };

    /// Quaternion of a rotation by an arbitrary real angle.
    pub fn from_rotation(angle: f64, axis: UnitVector3) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self { w: c, vx: s * axis.x, vy: s * axis.y, vz: s * axis.z }.canonical()
    }

    /// Flips the sign if needed so that `w > 0`, or, when `w = 0`, so that
    /// the first non-zero vector component is positive.
    pub fn canonical(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.vx != 0.0 {
            self.vx < 0.0
        } else if self.vy != 0.0 {
            self.vy < 0.0
        } else {
            self.vz < 0.0
        };
        if flip {
            Self { w: -self.w, vx: -self.vx, vy: -self.vy, vz: -self.vz }
        } else {
            self
        }
    }

    pub fn conj(self) -> Self {
        Self { w: self.w, vx: -self.vx, vy: -self.vy, vz: -self.vz }
    }

    pub fn vector_norm(self) -> f64 {
        self.vx.hypot(self.vy).hypot(self.vz)
    }

    pub fn norm(self) -> f64 {
        self.w.hypot(self.vector_norm())
    }

    /// Rescales to unit norm and canonicalizes.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self { w: self.w / n, vx: self.vx / n, vy: self.vy / n, vz: self.vz / n }.canonical()
    }

    /// Hamilton product without canonicalization.
    fn hamilton(self, o: Self) -> Self {
        Self {
            w: self.w * o.w - self.vx * o.vx - self.vy * o.vy - self.vz * o.vz,
            vx: self.w * o.vx + o.w * self.vx + (self.vy * o.vz - self.vz * o.vy),
            vy: self.w * o.vy + o.w * self.vy + (self.vz * o.vx - self.vx * o.vz),
            vz: self.w * o.vz + o.w * self.vz + (self.vx * o.vy - self.vy * o.vx),
        }
    }

    /// ZYZ Euler angles of this rotation.
    ///
    /// From `q = q_z(α) ⊗ q_y(β) ⊗ q_z(γ)`:
    /// `w = cos(β/2)cos((α+γ)/2)`, `v_z = cos(β/2)sin((α+γ)/2)`,
    /// `v_x = −sin(β/2)sin((α−γ)/2)`, `v_y = sin(β/2)cos((α−γ)/2)`.
    pub fn euler_zyz(self) -> EulerZYZ {
        let q = self.canonical();
        let sin_half_beta = q.vx.hypot(q.vy);
        let cos_half_beta = q.w.hypot(q.vz);
        let beta = 2.0 * sin_half_beta.atan2(cos_half_beta);
        let half_sum = if cos_half_beta > 0.0 { q.vz.atan2(q.w) } else { 0.0 };
        let half_diff = if sin_half_beta > 0.0 { (-q.vx).atan2(q.vy) } else { 0.0 };
        EulerZYZ {
            alpha: wrap_angle(half_sum + half_diff),
            beta,
            gamma: wrap_angle(half_sum - half_diff),
        }
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    /// Quaternion of the operator product `self · rhs`.
    fn mul(self, rhs: Self) -> Self {
        self.hamilton(rhs).canonical()
    }
}

/// ZYZ Euler angles: `e^{-iαL_z} e^{-iβL_y} e^{-iγL_z}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerZYZ {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerZYZ {
    pub const IDENTITY: Self = Self { alpha: 0.0, beta: 0.0, gamma: 0.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn quaternion(self) -> UnitQuaternion {
        let qa = UnitQuaternion::from_rotation(self.alpha, UnitVector3::Z);
        let qb = UnitQuaternion::from_rotation(self.beta, UnitVector3::Y);
        let qg = UnitQuaternion::from_rotation(self.gamma, UnitVector3::Z);
        qa * qb * qg
    }

    pub fn alpha_plus_gamma(self) -> f64 {
        self.alpha + self.gamma
    }
}

/// Reduces an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub fn quat_from_axis_angle(r: AxisAngle) -> UnitQuaternion {
    if r.near_identity {
        return UnitQuaternion::IDENTITY;
    }
    UnitQuaternion::from_rotation(r.angle, r.axis)
}

/// Angle and axis of `q` via `2·atan2(‖v‖, w)`.
pub fn angle_of(q: UnitQuaternion) -> AxisAngle {
    let q = q.canonical();
    let vn = q.vector_norm();
    if vn < NEAR_IDENTITY {
        return AxisAngle { angle: 2.0 * vn.atan2(q.w), axis: UnitVector3::Z, near_identity: true };
    }
    AxisAngle {
        angle: 2.0 * vn.atan2(q.w),
        axis: UnitVector3 { x: q.vx / vn, y: q.vy / vn, z: q.vz / vn },
        near_identity: false,
    }
}

/// Axis-angle of the operator product `e^{-iω₁ n̂₁·L} e^{-iω₂ n̂₂·L}`.
pub fn compose(r1: AxisAngle, r2: AxisAngle) -> AxisAngle {
    angle_of(quat_from_axis_angle(r1) * quat_from_axis_angle(r2))
}

pub fn euler_from_axis_angle(r: AxisAngle) -> EulerZYZ {
    if r.near_identity {
        return EulerZYZ::IDENTITY;
    }
    quat_from_axis_angle(r).euler_zyz()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    #[test]
    fn quaternion_examples() {
        let q = quat_from_axis_angle(AxisAngle::identity());
        assert_eq!(q, UnitQuaternion::IDENTITY);

        let q = quat_from_axis_angle(AxisAngle::about_z(PI));
        assert_abs_diff_eq!(q.w, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(q.vz, 1.0, epsilon = 1e-16);

        let q = quat_from_axis_angle(AxisAngle::about_x(FRAC_PI_2));
        assert_abs_diff_eq!(q.w, SQRT_2 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.vx, SQRT_2 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn angle_of_examples() {
        let r = angle_of(UnitQuaternion::IDENTITY);
        assert!(r.near_identity);
        assert_eq!(r.angle, 0.0);

        let r = angle_of(UnitQuaternion { w: 0.0, vx: 0.0, vy: 0.0, vz: 1.0 });
        assert_abs_diff_eq!(r.angle, PI, epsilon = 1e-15);
        assert_eq!(r.axis, UnitVector3::Z);
    }

    #[test]
    fn tiny_angles_survive_extraction() {
        let half = 5e-9_f64;
        let q = UnitQuaternion { w: half.cos(), vx: half.sin(), vy: 0.0, vz: 0.0 };
        let r = angle_of(q);
        assert!(((r.angle - 1e-8) / 1e-8).abs() <= 1e-6);
        // arccos of the scalar part: cos(5e-9) rounds to exactly 1.
        assert_eq!(2.0 * q.w.acos(), 0.0);
    }

    #[test]
    fn compose_examples() {
        let r = AxisAngle::new(0.8, UnitVector3::new(1.0, -2.0, 0.5).unwrap());
        let c = compose(AxisAngle::identity(), r);
        assert_abs_diff_eq!(c.angle, r.angle, epsilon = 1e-15);
        assert_abs_diff_eq!(c.axis.distance(r.axis), 0.0, epsilon = 1e-15);

        let c = compose(AxisAngle::about_z(FRAC_PI_2), AxisAngle::about_z(FRAC_PI_2));
        assert_abs_diff_eq!(c.angle, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(c.axis.z, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn x_pi_then_y_pi_is_z_pi() {
        // q_x(π) ⊗ q_y(π) = (0, x̂) ⊗ (0, ŷ) = (0, x̂ × ŷ) = (0, ẑ).
        let c = compose(AxisAngle::about_x(PI), AxisAngle::about_y(PI));
        assert_abs_diff_eq!(c.angle, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(c.axis.z, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn euler_examples() {
        let e = euler_from_axis_angle(AxisAngle::about_z(0.7));
        assert_abs_diff_eq!(e.beta, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.alpha + e.gamma, 0.7, epsilon = 1e-15);

        let e = euler_from_axis_angle(AxisAngle::about_x(1.3));
        assert_abs_diff_eq!(e.alpha, -FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(e.beta, 1.3, epsilon = 1e-15);
        assert_abs_diff_eq!(e.gamma, FRAC_PI_2, epsilon = 1e-15);

        assert_eq!(euler_from_axis_angle(AxisAngle::identity()), EulerZYZ::IDENTITY);
    }

    #[test]
    fn euler_relations_hold() {
        let (chi, theta, phi) = (1.1_f64, 0.7_f64, 2.0_f64);
        let r = AxisAngle::new(chi, UnitVector3::from_spherical(theta, phi));
        let e = euler_from_axis_angle(r);
        assert_abs_diff_eq!((e.beta / 2.0).sin(), theta.sin() * (chi / 2.0).sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            ((e.alpha + e.gamma) / 2.0).tan(),
            theta.cos() * (chi / 2.0).tan(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            wrap_angle(e.alpha - e.gamma),
            wrap_angle(2.0 * phi - PI),
            epsilon = 1e-14
        );
        let back = angle_of(e.quaternion());
        assert_abs_diff_eq!(back.angle, chi, epsilon = 1e-14);
        assert_abs_diff_eq!(back.axis.distance(r.axis), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn angles_stay_in_zero_pi() {
        let r = AxisAngle::new(-0.4, UnitVector3::Y);
        assert_abs_diff_eq!(r.angle, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(r.axis.y, -1.0, epsilon = 1e-15);
        let r = AxisAngle::new(1.5 * PI, UnitVector3::Z);
        assert_abs_diff_eq!(r.angle, 0.5 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(r.axis.z, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_axis_is_rejected() {
        assert!(matches!(UnitVector3::new(0.0, 0.0, 0.0), Err(RotationError::ZeroAxis(..))));
        assert!(matches!(UnitVector3::new(f64::NAN, 0.0, 1.0), Err(RotationError::NonFinite)));
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-14);
    }
}
