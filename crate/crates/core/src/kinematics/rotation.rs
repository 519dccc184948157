use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::KinematicsError;

pub type Vec3 = [f64; 3];

/// Tolerance on unit-norm preconditions for axes.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// |cos(pitch)| below this is reported as gimbal lock by [`Rotation::to_euler_xyz`].
pub const GIMBAL_LOCK_COS: f64 = 1e-6;

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Unit quaternion `(w, x, y, z)` kept on the `w >= 0` hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes and canonicalizes an arbitrary non-zero quaternion.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self, KinematicsError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(KinematicsError::DegenerateQuaternion);
        }
        Ok(Self::canonical(w / n, x / n, y / n, z / n))
    }

    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        if w < 0.0 {
            Rotation {
                w: -w,
                x: -x,
                y: -y,
                z: -z,
            }
        } else {
            Rotation { w, x, y, z }
        }
    }

    /// Rotation by `angle` radians about `axis`; the axis must be unit-norm.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self, KinematicsError> {
        check_unit(axis)?;
        Ok(Self::from_unit_axis_angle(axis, angle))
    }

    pub(crate) fn from_unit_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::canonical(c, axis[0] * s, axis[1] * s, axis[2] * s)
    }

    /// Exponential map of a rotation vector (axis scaled by angle).
    pub fn from_rotation_vector(v: &Vec3) -> Self {
        let angle = norm(v);
        if angle < 1e-300 {
            return Self::IDENTITY;
        }
        Self::from_unit_axis_angle(&scale(v, 1.0 / angle), angle)
    }

    /// Logarithm map; the returned vector has norm in `[0, pi]`.
    pub fn to_rotation_vector(&self) -> Vec3 {
        let v = [self.x, self.y, self.z];
        let s = norm(&v);
        if s < 1e-300 {
            return [0.0; 3];
        }
        let angle = 2.0 * s.atan2(self.w);
        scale(&v, angle / s)
    }

    pub fn angle(&self) -> f64 {
        2.0 * norm(&[self.x, self.y, self.z]).atan2(self.w)
    }

    /// Geodesic distance on SO(3), in `[0, pi]`.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        (self.inverse() * *other).angle()
    }

    pub fn inverse(&self) -> Self {
        Rotation {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        let q = [self.x, self.y, self.z];
        let t = scale(&cross(&q, v), 2.0);
        add(&add(v, &scale(&t, self.w)), &cross(&q, &t))
    }

    pub fn wxyz(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Max componentwise difference of the canonical quaternions.
    pub fn distance_inf(&self, other: &Rotation) -> f64 {
        self.wxyz()
            .iter()
            .zip(other.wxyz())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Intrinsic X-Y-Z Euler angles (radians): `R = Rx(a) * Ry(b) * Rz(c)`.
    pub fn from_euler_xyz(angles: &Vec3) -> Self {
        let rx = Self::from_unit_axis_angle(&[1.0, 0.0, 0.0], angles[0]);
        let ry = Self::from_unit_axis_angle(&[0.0, 1.0, 0.0], angles[1]);
        let rz = Self::from_unit_axis_angle(&[0.0, 0.0, 1.0], angles[2]);
        rx * ry * rz
    }

    /// Inverse of [`Rotation::from_euler_xyz`]. The flag is set near gimbal
    /// lock (pitch at +-pi/2), where roll and yaw are not separable and yaw is
    /// reported as zero.
    pub fn to_euler_xyz(&self) -> (Vec3, bool) {
        let m = self.matrix();
        let sin_b = m[0][2].clamp(-1.0, 1.0);
        let b = sin_b.asin();
        let cos_b = b.cos();
        if cos_b.abs() < GIMBAL_LOCK_COS {
            let a = m[2][1].atan2(m[1][1]);
            return ([a, b, 0.0], true);
        }
        let a = (-m[1][2]).atan2(m[2][2]);
        let c = (-m[0][1]).atan2(m[0][0]);
        ([a, b, c], false)
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let Rotation { w, x, y, z } = *self;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, r: Rotation) -> Rotation {
        let l = self;
        let w = l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z;
        let x = l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y;
        let y = l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x;
        let z = l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w;
        // renormalize so long products do not drift off the unit sphere
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Rotation::canonical(w / n, x / n, y / n, z / n)
    }
}

impl TryFrom<[f64; 4]> for Rotation {
    type Error = KinematicsError;

    fn try_from(q: [f64; 4]) -> Result<Self, Self::Error> {
        Rotation::from_quaternion(q[0], q[1], q[2], q[3])
    }
}

impl From<Rotation> for [f64; 4] {
    fn from(r: Rotation) -> Self {
        r.wxyz()
    }
}

pub(crate) fn check_unit(axis: &Vec3) -> Result<(), KinematicsError> {
    let n = norm(axis);
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(KinematicsError::NonUnitAxis { norm: n });
    }
    Ok(())
}

/// Factors `r = swing * twist(axis, angle)`, where the swing's rotation axis is
/// perpendicular to `twist_axis`. Returns the twist angle in `(-pi, pi]`.
///
/// When `r` is a half-turn about an axis perpendicular to `twist_axis` the
/// twist is undefined and reported as zero.
pub fn swing_twist(r: &Rotation, twist_axis: &Vec3) -> Result<(f64, Rotation), KinematicsError> {
    check_unit(twist_axis)?;
    let [w, x, y, z] = r.wxyz();
    let proj = dot(&[x, y, z], twist_axis);
    let twist_norm = (w * w + proj * proj).sqrt();
    if twist_norm < 1e-12 {
        return Ok((0.0, *r));
    }
    let twist_angle = 2.0 * proj.atan2(w);
    let twist = Rotation::from_unit_axis_angle(twist_axis, twist_angle);
    let swing = *r * twist.inverse();
    Ok((twist_angle, swing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const Z: Vec3 = [0.0, 0.0, 1.0];
    const X: Vec3 = [1.0, 0.0, 0.0];

    #[test]
    fn pure_twist() {
        let r = Rotation::from_axis_angle(&Z, 0.7).unwrap();
        let (angle, swing) = swing_twist(&r, &Z).unwrap();
        assert!((angle - 0.7).abs() < 1e-12);
        assert!(swing.distance_inf(&Rotation::IDENTITY) < 1e-12);
    }

    #[test]
    fn pure_swing() {
        let r = Rotation::from_axis_angle(&X, 0.5).unwrap();
        let (angle, swing) = swing_twist(&r, &Z).unwrap();
        assert!(angle.abs() < 1e-12);
        assert!(swing.distance_inf(&r) < 1e-12);
    }

    #[test]
    fn composed_swing_then_twist() {
        let swing = Rotation::from_axis_angle(&X, 0.3).unwrap();
        let twist = Rotation::from_axis_angle(&Z, 0.4).unwrap();
        let r = swing * twist;
        let (angle, s) = swing_twist(&r, &Z).unwrap();
        assert!((angle - 0.4).abs() < 1e-12);
        assert!(s.distance_inf(&swing) < 1e-12);
        let rebuilt = s * Rotation::from_axis_angle(&Z, angle).unwrap();
        assert!(rebuilt.distance_inf(&r) < 1e-9);
    }

    #[test]
    fn half_turn_swing_has_zero_twist() {
        let r = Rotation::from_axis_angle(&X, PI).unwrap();
        let (angle, s) = swing_twist(&r, &Z).unwrap();
        assert_eq!(angle, 0.0);
        assert!(s.distance_inf(&r) < 1e-12);
    }

    #[test]
    fn non_unit_axis_rejected() {
        let err = swing_twist(&Rotation::IDENTITY, &[0.0, 0.0, 1.1]).unwrap_err();
        assert!(matches!(err, KinematicsError::NonUnitAxis { .. }));
        assert!(Rotation::from_axis_angle(&[0.0, 0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn euler_round_trip_and_gimbal_flag() {
        let angles = [0.3, -0.7, 1.2];
        let (back, locked) = Rotation::from_euler_xyz(&angles).to_euler_xyz();
        assert!(!locked);
        for i in 0..3 {
            assert!((back[i] - angles[i]).abs() < 1e-12);
        }
        let (_, locked) = Rotation::from_euler_xyz(&[0.2, FRAC_PI_2, 0.1]).to_euler_xyz();
        assert!(locked);
    }

    #[test]
    fn euler_matches_intrinsic_order() {
        // intrinsic XYZ: rotating e_z by Rz leaves it fixed, then Ry, then Rx
        let r = Rotation::from_euler_xyz(&[FRAC_PI_2, 0.0, 0.0]);
        let v = r.rotate(&[0.0, 1.0, 0.0]);
        assert!((v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_vector_round_trip() {
        let v = [0.4, -1.1, 0.9];
        let back = Rotation::from_rotation_vector(&v).to_rotation_vector();
        for i in 0..3 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn serde_canonicalizes() {
        let r: Rotation = serde_json::from_str("[-2.0, 0.0, 0.0, 0.0]").unwrap();
        assert_eq!(r, Rotation::IDENTITY);
        assert!(serde_json::from_str::<Rotation>("[0.0, 0.0, 0.0, 0.0]").is_err());
    }
}
