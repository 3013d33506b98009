#![allow(dead_code)]

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3, Vector6};
use proptest::prelude::*;

use bilts::reparam::{GeometricTrajectory, ProgressType, TemporalTrajectory};
use bilts::se3::{se3_exp, Pose, ScrewTwist};

pub fn rotation_from(q: [f64; 4]) -> Matrix3<f64> {
    let q = Quaternion::new(q[0], q[1], q[2], q[3]);
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

pub fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-range..range).prop_map(Vector3::from)
}

pub fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_filter("quaternion away from zero", |q| q.iter().map(|v| v * v).sum::<f64>() > 0.05)
        .prop_map(rotation_from)
}

pub fn pose(spread: f64) -> impl Strategy<Value = Pose> {
    (rotation(), vec3(spread)).prop_map(|(r, p)| Pose::new(r, p))
}

pub fn twist(scale: f64) -> impl Strategy<Value = ScrewTwist> {
    prop::array::uniform6(-scale..scale).prop_map(|v| ScrewTwist::from_vector(&Vector6::from(v)))
}

/// `base * exp(s a) * exp(s^2 b)` sampled at `n` points of spacing `ds`.
pub fn smooth_poses(base: &Pose, a: &ScrewTwist, b: &ScrewTwist, n: usize, ds: f64) -> Vec<Pose> {
    (0..n)
        .map(|k| {
            let s = k as f64 * ds;
            base * &(se3_exp(&a.scale(s)) * se3_exp(&b.scale(s * s)))
        })
        .collect()
}

pub fn geometric(poses: Vec<Pose>, ds: f64) -> GeometricTrajectory {
    GeometricTrajectory::new(poses, ds, ProgressType::Arclength).unwrap()
}

pub fn temporal(poses: Vec<Pose>, dt: f64) -> TemporalTrajectory {
    TemporalTrajectory::new(poses, dt).unwrap()
}

pub fn pose_error(a: &Pose, b: &Pose) -> f64 {
    (a.rotation - b.rotation).norm() + (a.translation - b.translation).norm()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
