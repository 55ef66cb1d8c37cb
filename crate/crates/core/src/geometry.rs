//! Rigid-body algebra shared by the solver, simulator and metrics.
//!
//! Vectors, rotations and poses are thin aliases over `nalgebra` types. Angles
//! are radians and lengths meters everywhere; unit conversion happens only at
//! the reporting boundary.

use nalgebra::{Isometry3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 3-vector in meters, m/s or rad/s depending on role.
pub type Vec3 = Vector3<f64>;
/// Unit quaternion rotation.
pub type Rotation = UnitQuaternion<f64>;
/// Rigid transform (position + orientation).
pub type Pose = Isometry3<f64>;

/// Tolerance on `‖dir‖ = 1` accepted by [`point_to_line_distance`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("line direction is not unit length (norm {0})")]
    NonUnitDirection(f64),
}

/// Linear and angular velocity of the flange, both in the base frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}

impl Twist {
    pub fn new(linear: Vec3, angular: Vec3) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.linear * k, self.angular * k)
    }

    pub fn is_finite(&self) -> bool {
        is_finite(&self.linear) && is_finite(&self.angular)
    }

    /// Velocity of the body point currently at `offset` from the flange origin.
    pub fn point_velocity(&self, offset: &Vec3) -> Vec3 {
        self.linear + self.angular.cross(offset)
    }
}

pub fn is_finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    a.cross(b)
}

/// Distance from `point` to the infinite line through `origin` along `dir`.
pub fn point_to_line_distance(point: &Vec3, origin: &Vec3, dir: &Vec3) -> Result<f64, GeometryError> {
    let n = dir.norm();
    if !((n - 1.0).abs() <= UNIT_TOLERANCE) {
        return Err(GeometryError::NonUnitDirection(n));
    }
    let d = point - origin;
    Ok((d - dir * d.dot(dir)).norm())
}

/// Component of `v` perpendicular to the unit axis `axis`.
pub fn perpendicular_component(v: &Vec3, axis: &Vec3) -> Vec3 {
    v - axis * v.dot(axis)
}

pub fn rotate(r: &Rotation, v: &Vec3) -> Vec3 {
    r * v
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a * b
}

pub fn inverse(a: &Pose) -> Pose {
    a.inverse()
}

pub fn pose(position: Vec3, orientation: Rotation) -> Pose {
    Isometry3::from_parts(Translation3::from(position), orientation)
}

pub fn translation(x: f64, y: f64, z: f64) -> Pose {
    pose(Vec3::new(x, y, z), Rotation::identity())
}

/// Scalar-first quaternion, as stored in files and on the wire.
pub fn quat_wxyz(r: &Rotation) -> [f64; 4] {
    let q = r.quaternion();
    [q.w, q.i, q.j, q.k]
}

/// Builds a rotation from scalar-first components without renormalizing, so
/// components read back from a file keep their exact bits.
pub fn rotation_from_wxyz_unchecked(q: [f64; 4]) -> Rotation {
    UnitQuaternion::new_unchecked(Quaternion::new(q[0], q[1], q[2], q[3]))
}

/// Normalizing constructor for user-supplied quaternions.
pub fn rotation_from_wxyz(q: [f64; 4]) -> Rotation {
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
}

pub fn axis_angle(axis: &Vec3, angle: f64) -> Rotation {
    UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle)
}

/// Exact exponential map of a rotation vector (axis · angle).
pub fn exp_rotation(rotation_vector: &Vec3) -> Rotation {
    UnitQuaternion::from_scaled_axis(*rotation_vector)
}

pub fn quaternion_norm(r: &Rotation) -> f64 {
    r.quaternion().norm()
}
