//! Vector and quaternion algebra plus yaw/pitch/roll conversions.
//!
//! Conventions used throughout the crate:
//!
//! - quaternions are scalar-first `(w, x, y, z)` and Hamilton products;
//! - an attitude quaternion rotates body-frame vectors into the earth frame;
//! - the earth frame is North-East-Down, so a level accelerometer reads
//!   `(0, 0, +1) g`;
//! - Euler angles are the aerospace ZYX (yaw, then pitch, then roll) sequence.

use core::f64::consts::{FRAC_PI_2, PI};
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

/// Pitch distance from ±π/2 below which the Euler decomposition is treated as
/// gimbal-locked.
pub const GIMBAL_LOCK_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("zero norm")]
    ZeroNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3::new(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` when the norm is below
    /// `min_norm`.
    pub fn normalized(self, min_norm: f64) -> Option<Vec3> {
        let n = self.norm();
        if n < min_norm || !n.is_finite() {
            None
        } else {
            Some(self / n)
        }
    }

    /// Component-wise product.
    pub fn hadamard(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x * rhs.x, self.y * rhs.y, self.z * rhs.z)
    }

    /// Component-wise quotient.
    pub fn hadamard_div(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x / rhs.x, self.y / rhs.y, self.z / rhs.z)
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Component by axis index (0 = x, 1 = y, 2 = z).
    pub fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, rhs: Vec3) {
        *self = *self - rhs;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Scalar-first quaternion. Attitude quaternions map body vectors to earth
/// vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_parts(w: f64, v: Vec3) -> Self {
        Self::new(w, v.x, v.y, v.z)
    }

    /// Pure quaternion `(0, v)`.
    pub fn pure(v: Vec3) -> Self {
        Self::from_parts(0.0, v)
    }

    pub fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn dot(self, rhs: Quaternion) -> f64 {
        self.w * rhs.w + self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn conjugate(self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn scale(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Scales to unit length. A zero (or non-finite) norm is an error rather
    /// than a NaN quaternion.
    pub fn normalize(self) -> Result<Quaternion, MathError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(MathError::ZeroNorm);
        }
        Ok(self.scale(1.0 / n))
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Quaternion, MathError> {
        let axis = axis.normalized(0.0).ok_or(MathError::ZeroNorm)?;
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Quaternion::from_parts(c, axis * s))
    }

    /// Exponential map of a rotation vector: the rotation by `|v|` radians
    /// about `v`. Exact for any magnitude.
    pub fn from_rotation_vector(v: Vec3) -> Quaternion {
        let angle = v.norm();
        if angle < 1e-9 {
            // second-order series keeps the result unit to rounding
            let w = 1.0 - angle * angle / 8.0;
            let k = 0.5 - angle * angle / 48.0;
            return Quaternion::from_parts(w, v * k);
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Quaternion::from_parts(c, v * (s / angle))
    }

    /// Inverse of [`Quaternion::from_rotation_vector`], choosing the shortest
    /// rotation (angle in `[0, π]`).
    pub fn to_rotation_vector(self) -> Vec3 {
        let q = if self.w < 0.0 { self.scale(-1.0) } else { self };
        let s = q.vector().norm();
        if s < 1e-12 {
            return q.vector() * 2.0;
        }
        let angle = 2.0 * s.atan2(q.w);
        q.vector() * (angle / s)
    }

    /// Rotates `v` by this (unit) quaternion: `q ⊗ (0, v) ⊗ q*`.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        // expanded form of the sandwich product
        let u = self.vector();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(t)
    }

    /// Rotates `v` by the inverse rotation, i.e. earth to body for an
    /// attitude quaternion.
    pub fn rotate_inverse(self, v: Vec3) -> Vec3 {
        self.conjugate().rotate(v)
    }

    pub fn to_euler(self) -> EulerAngles {
        quat_to_euler(self)
    }

    pub fn from_euler(e: EulerAngles) -> Quaternion {
        euler_to_quat(e)
    }

    /// Smallest rotation angle taking `self` to `other`, in `[0, π]`.
    pub fn angular_distance(self, other: Quaternion) -> f64 {
        angular_distance(self, other)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product. `(a * b).rotate(v) == a.rotate(b.rotate(v))`.
    fn mul(self, b: Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w + b.w, self.x + b.x, self.y + b.y, self.z + b.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, b: Quaternion) -> Quaternion {
        Quaternion::new(self.w - b.w, self.x - b.x, self.y - b.y, self.z - b.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

/// ZYX Euler angles in radians.
///
/// Ranges: yaw in (−π, π], pitch in [−π/2, π/2], roll in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub const fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn from_degrees(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self::new(yaw.to_radians(), pitch.to_radians(), roll.to_radians())
    }

    /// `[yaw, pitch, roll]` in degrees.
    pub fn to_degrees(self) -> [f64; 3] {
        [self.yaw.to_degrees(), self.pitch.to_degrees(), self.roll.to_degrees()]
    }
}

/// Maps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub fn quat_normalize(q: Quaternion) -> Result<Quaternion, MathError> {
    q.normalize()
}

pub fn quat_multiply(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

pub fn rotate_vector(q: Quaternion, v: Vec3) -> Vec3 {
    q.rotate(v)
}

/// Decomposes a unit attitude quaternion into yaw, pitch and roll.
///
/// Within [`GIMBAL_LOCK_EPS`] of |pitch| = π/2 roll is fixed to 0 and the
/// free angle is reported as yaw.
pub fn quat_to_euler(q: Quaternion) -> EulerAngles {
    let Quaternion { w, x, y, z } = q;
    let sinp = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0);
    let pitch = sinp.asin();
    if FRAC_PI_2 - pitch.abs() < GIMBAL_LOCK_EPS {
        // yaw − roll (pitch up) or yaw + roll (pitch down) is all that is
        // observable; put it all in yaw.
        let sign = pitch.signum();
        let yaw = -2.0 * sign * x.atan2(w);
        return EulerAngles::new(wrap_angle(yaw), sign * FRAC_PI_2, 0.0);
    }
    let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
    let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
    EulerAngles::new(wrap_angle(yaw), pitch, wrap_angle(roll))
}

/// `Rz(yaw) · Ry(pitch) · Rx(roll)` as a quaternion.
pub fn euler_to_quat(e: EulerAngles) -> Quaternion {
    let (sy, cy) = (0.5 * e.yaw).sin_cos();
    let (sp, cp) = (0.5 * e.pitch).sin_cos();
    let (sr, cr) = (0.5 * e.roll).sin_cos();
    Quaternion::new(
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    )
}

/// `2·acos(|⟨a, b⟩|)`, evaluated through `atan2` so that nearly equal
/// rotations keep full precision.
pub fn angular_distance(a: Quaternion, b: Quaternion) -> f64 {
    let d = a.conjugate() * b;
    let s = d.vector().norm();
    2.0 * s.atan2(d.w.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn normalize_cases() {
        assert_eq!(Quaternion::IDENTITY.normalize().unwrap(), Quaternion::IDENTITY);
        assert_eq!(
            Quaternion::new(2.0, 0.0, 0.0, 0.0).normalize().unwrap(),
            Quaternion::IDENTITY
        );
        let err = Quaternion::new(0.0, 0.0, 0.0, 0.0).normalize().unwrap_err();
        assert_eq!(err, MathError::ZeroNorm);
        assert_eq!(err.to_string(), "zero norm");
        assert!(Quaternion::new(f64::NAN, 0.0, 0.0, 0.0).normalize().is_err());
    }

    #[test]
    fn two_quarter_turns_about_z() {
        let h = FRAC_1_SQRT_2;
        let q = Quaternion::new(h, 0.0, 0.0, h);
        // (h + h k)(h + h k) = h² − h² + 2h² k = k
        let r = q * q;
        assert!(close(r.w, 0.0, 1e-15));
        assert!(close(r.x, 0.0, 1e-15) && close(r.y, 0.0, 1e-15));
        assert!(close(r.z, 1.0, 1e-15));
    }

    #[test]
    fn multiply_identity_and_inverse() {
        let q = Quaternion::new(0.3, -0.5, 0.1, 0.8).normalize().unwrap();
        assert_eq!(Quaternion::IDENTITY * q, q);
        let p = q * q.conjugate();
        assert!(angular_distance(p, Quaternion::IDENTITY) < 1e-15);
    }

    #[test]
    fn rotate_quarter_turn() {
        let q = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), FRAC_PI_2).unwrap();
        let v = q.rotate(Vec3::new(1.0, 0.0, 0.0));
        assert!(close(v.x, 0.0, 1e-12) && close(v.y, 1.0, 1e-12) && close(v.z, 0.0, 1e-12));
        let u = Quaternion::IDENTITY.rotate(Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(u, Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn rotate_matches_sandwich_product() {
        let q = Quaternion::new(0.2, 0.4, -0.7, 0.1).normalize().unwrap();
        let v = Vec3::new(-1.5, 0.25, 2.0);
        let s = q * Quaternion::pure(v) * q.conjugate();
        let r = q.rotate(v);
        assert!(close(s.w, 0.0, 1e-14));
        assert!((s.vector() - r).norm() < 1e-14);
    }

    #[test]
    fn euler_basic_cases() {
        let e = quat_to_euler(Quaternion::IDENTITY);
        assert_eq!((e.yaw, e.pitch, e.roll), (0.0, 0.0, 0.0));
        let h = FRAC_1_SQRT_2;
        let e = quat_to_euler(Quaternion::new(h, 0.0, 0.0, h));
        assert!(close(e.yaw, FRAC_PI_2, 1e-15) && e.pitch.abs() < 1e-15 && e.roll.abs() < 1e-15);
        assert_eq!(euler_to_quat(EulerAngles::default()), Quaternion::IDENTITY);
        let q = euler_to_quat(EulerAngles::new(FRAC_PI_2, 0.0, 0.0));
        assert!(close(q.w, h, 1e-15) && close(q.z, h, 1e-15));
        assert!(q.x.abs() < 1e-15 && q.y.abs() < 1e-15);
    }

    #[test]
    fn euler_composes_single_axis_rotations() {
        let e = EulerAngles::from_degrees(40.0, -25.0, 110.0);
        let z = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), e.yaw).unwrap();
        let y = Quaternion::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), e.pitch).unwrap();
        let x = Quaternion::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), e.roll).unwrap();
        let seq = z * y * x;
        assert!(angular_distance(seq, euler_to_quat(e)) < 1e-14);
    }

    #[test]
    fn gimbal_lock_puts_free_angle_in_yaw() {
        for pitch in [FRAC_PI_2, -FRAC_PI_2] {
            let q = euler_to_quat(EulerAngles::new(0.7, pitch, 0.3));
            let e = quat_to_euler(q);
            assert_eq!(e.roll, 0.0);
            assert_eq!(e.pitch, pitch);
            assert!(angular_distance(euler_to_quat(e), q) < 1e-7);
        }
    }

    #[test]
    fn angular_distance_cases() {
        let q = Quaternion::new(0.1, 0.2, 0.3, 0.4).normalize().unwrap();
        assert_eq!(angular_distance(q, q), 0.0);
        assert_eq!(angular_distance(q, -q), 0.0);
        let z90 = euler_to_quat(EulerAngles::new(FRAC_PI_2, 0.0, 0.0));
        assert!(close(angular_distance(Quaternion::IDENTITY, z90), FRAC_PI_2, 1e-15));
        let z180 = euler_to_quat(EulerAngles::new(PI, 0.0, 0.0));
        assert!(close(angular_distance(Quaternion::IDENTITY, z180), PI, 1e-15));
    }

    #[test]
    fn rotation_vector_round_trip() {
        let v = Vec3::new(0.3, -1.1, 2.0);
        let q = Quaternion::from_rotation_vector(v);
        assert!(close(q.norm(), 1.0, 1e-15));
        assert!((q.to_rotation_vector() - v).norm() < 1e-14);
        let tiny = Vec3::new(1e-11, 0.0, -2e-11);
        assert!((Quaternion::from_rotation_vector(tiny).to_rotation_vector() - tiny).norm() < 1e-25);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!(close(wrap_angle(-PI), PI, 1e-15));
        assert!(close(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, 1e-15));
    }
}
