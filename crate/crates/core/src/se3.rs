//! Rigid-body primitives: poses, screw twists, the adjoint screw transform,
//! closed-form exponential and logarithm on SE(3), screw-axis extraction and
//! screw-linear interpolation.
//!
//! Twists are stacked rotation-first, `(omega; v)`, and are expressed in the
//! frame whose origin defines `v`.

use nalgebra::{Matrix3, Matrix4, Matrix6, Rotation3, UnitQuaternion, Vector3, Vector6};

use crate::error::{BiltsError, Result};

/// Rotation magnitude below which angular velocity counts as zero.
pub const EPS_OMEGA: f64 = 1e-8;
/// Rotation angle below which exp/log switch to Taylor series.
pub const SMALL_ANGLE: f64 = 1e-4;
/// Distance to pi within which the logarithm is refused.
pub const NEAR_PI_TOL: f64 = 1e-6;

/// Rigid transformation with an orthonormal rotation and a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Pose::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Pose::new(Matrix3::identity(), translation)
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Pose::new(rotation, Vector3::zeros())
    }

    /// Builds a pose from a unit quaternion `(w, x, y, z)` and a position.
    pub fn from_quaternion(q: &UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Pose::new(q.to_rotation_matrix().into_inner(), translation)
    }

    /// Reads the upper 3x4 block of a homogeneous matrix.
    pub fn from_homogeneous(m: &Matrix4<f64>) -> Self {
        Pose::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation))
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    /// Returns `self * other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Largest absolute entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl std::ops::Mul<&Pose> for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// Screw twist `(omega; v)` with `v` the velocity of the point at the
/// reference-frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScrewTwist {
    pub omega: Vector3<f64>,
    pub vel: Vector3<f64>,
}

impl ScrewTwist {
    pub fn new(omega: Vector3<f64>, vel: Vector3<f64>) -> Self {
        ScrewTwist { omega, vel }
    }

    pub fn zero() -> Self {
        ScrewTwist::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        ScrewTwist::new(
            v.fixed_rows::<3>(0).into_owned(),
            v.fixed_rows::<3>(3).into_owned(),
        )
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut out = Vector6::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&self.omega);
        out.fixed_rows_mut::<3>(3).copy_from(&self.vel);
        out
    }

    pub fn scale(&self, k: f64) -> ScrewTwist {
        ScrewTwist::new(self.omega * k, self.vel * k)
    }
}

impl std::ops::Add for ScrewTwist {
    type Output = ScrewTwist;
    fn add(self, rhs: ScrewTwist) -> ScrewTwist {
        ScrewTwist::new(self.omega + rhs.omega, self.vel + rhs.vel)
    }
}

impl std::ops::Sub for ScrewTwist {
    type Output = ScrewTwist;
    fn sub(self, rhs: ScrewTwist) -> ScrewTwist {
        ScrewTwist::new(self.omega - rhs.omega, self.vel - rhs.vel)
    }
}

/// 6x6 adjoint map changing the reference frame of a twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewTransform(pub Matrix6<f64>);

impl ScrewTransform {
    pub fn apply(&self, t: &ScrewTwist) -> ScrewTwist {
        ScrewTwist::from_vector(&(self.0 * t.to_vector()))
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }
}

/// Skew-symmetric matrix with `skew(a) * b = a x b`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`], reading the antisymmetric part.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}

/// Adjoint `S(T) = [[R, 0], [skew(p) R, R]]`.
pub fn adjoint(pose: &Pose) -> ScrewTransform {
    let r = pose.rotation;
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(skew(&pose.translation) * r));
    ScrewTransform(m)
}

/// Screw cross-product matrix `[[skew(w), 0], [skew(v), skew(w)]]`.
pub fn twist_cross(t: &ScrewTwist) -> Matrix6<f64> {
    let w = skew(&t.omega);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(&t.vel));
    m
}

/// Re-expresses a twist given in `frame` coordinates in the parent frame.
pub fn change_twist_frame(t: &ScrewTwist, frame: &Pose) -> ScrewTwist {
    let omega = frame.rotation * t.omega;
    ScrewTwist::new(omega, frame.rotation * t.vel + frame.translation.cross(&omega))
}

struct ExpCoefficients {
    a: f64,
    b: f64,
    c: f64,
}

fn exp_coefficients(theta: f64) -> ExpCoefficients {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        ExpCoefficients {
            a: 1.0 - t2 / 6.0 + t4 / 120.0,
            b: 0.5 - t2 / 24.0 + t4 / 720.0,
            c: 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
        }
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        ExpCoefficients {
            a: s / theta,
            b: (1.0 - c) / t2,
            c: (theta - s) / (t2 * theta),
        }
    }
}

/// Exponential map of a unit-time twist.
pub fn se3_exp(t: &ScrewTwist) -> Pose {
    let theta = t.omega.norm();
    let k = exp_coefficients(theta);
    let w = skew(&t.omega);
    let w2 = w * w;
    let eye = Matrix3::identity();
    let rotation = eye + w * k.a + w2 * k.b;
    let v = eye + w * k.b + w2 * k.c;
    Pose::new(rotation, v * t.vel)
}

/// Logarithm of a rotation matrix as a rotation vector.
pub fn so3_log(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let a = vee(r) * 2.0;
    let sin_theta = 0.5 * a.norm();
    let cos_theta = 0.5 * (r.trace() - 1.0);
    let theta = sin_theta.atan2(cos_theta);
    if std::f64::consts::PI - theta < NEAR_PI_TOL {
        return Err(BiltsError::RotationNearPi { angle: theta });
    }
    let factor = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0)
    } else {
        0.5 * theta / theta.sin()
    };
    Ok(a * factor)
}

/// Logarithm of a pose as a unit-time twist.
pub fn se3_log(pose: &Pose) -> Result<ScrewTwist> {
    let omega = so3_log(&pose.rotation)?;
    let theta = omega.norm();
    let c = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let (s, co) = theta.sin_cos();
        (1.0 - theta * s / (2.0 * (1.0 - co))) / (theta * theta)
    };
    let w = skew(&omega);
    let v_inv = Matrix3::identity() - w * 0.5 + (w * w) * c;
    Ok(ScrewTwist::new(omega, v_inv * pose.translation))
}

/// Twist `log(b * a^-1) / ds` carrying `a` onto `b` over a progress step `ds`.
pub fn se3_log_between(a: &Pose, b: &Pose, ds: f64) -> Result<ScrewTwist> {
    if !(ds > 0.0) || !ds.is_finite() {
        return Err(BiltsError::invalid(format!("progress step must be positive, got {ds}")));
    }
    Ok(se3_log(&(b * &a.inverse()))?.scale(1.0 / ds))
}

/// Instantaneous screw axis of a twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewAxis {
    /// Unit direction of the axis.
    pub direction: Vector3<f64>,
    /// Point on the axis closest to the reference origin.
    pub point: Vector3<f64>,
    /// Translational speed along the axis, `omega . v / |omega|`.
    pub pitch_velocity: f64,
}

impl ScrewAxis {
    /// Axial translational velocity vector.
    pub fn axial_velocity(&self) -> Vector3<f64> {
        self.direction * self.pitch_velocity
    }
}

pub fn screw_axis(t: &ScrewTwist) -> Result<ScrewAxis> {
    let n = t.omega.norm();
    if n <= EPS_OMEGA {
        return Err(BiltsError::PureTranslation { norm: n });
    }
    Ok(ScrewAxis {
        direction: t.omega / n,
        point: t.omega.cross(&t.vel) / (n * n),
        pitch_velocity: t.omega.dot(&t.vel) / n,
    })
}

/// Screw-linear interpolation `exp(u * log(b * a^-1)) * a`.
pub fn sclerp(a: &Pose, b: &Pose, u: f64) -> Result<Pose> {
    if !(0.0..=1.0).contains(&u) {
        return Err(BiltsError::invalid(format!("interpolation fraction {u} outside [0, 1]")));
    }
    if u == 0.0 {
        return Ok(*a);
    }
    if u == 1.0 {
        return Ok(*b);
    }
    let xi = se3_log(&(b * &a.inverse()))?;
    Ok(se3_exp(&xi.scale(u)).compose(a))
}

/// Rotation matrix from an axis (need not be unit) and an angle.
pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let u = axis.normalize();
    se3_exp(&ScrewTwist::new(u * angle, Vector3::zeros())).rotation
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_pose_has_zero_log() {
        let t = se3_log(&Pose::identity()).unwrap();
        assert_eq!(t.to_vector(), Vector6::zeros());
    }

    #[test]
    fn log_of_quarter_turn() {
        let pose = Pose::new(rotation_about(&Vector3::z(), std::f64::consts::FRAC_PI_2), Vector3::new(1.0, 0.0, 0.0));
        let t = se3_log(&pose).unwrap();
        assert_relative_eq!(t.omega, Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2), epsilon = 1e-14);
        let back = se3_exp(&t);
        assert_relative_eq!(back.translation, pose.translation, epsilon = 1e-14);
        assert_relative_eq!(back.rotation, pose.rotation, epsilon = 1e-14);
    }

    #[test]
    fn pure_translation_exp_matches_closed_form() {
        let v = Vector3::new(0.3, -0.2, 1.1);
        let pose = se3_exp(&ScrewTwist::new(Vector3::zeros(), v));
        assert_eq!(pose.rotation, Matrix3::identity());
        assert_eq!(pose.translation, v);
    }

    #[test]
    fn near_pi_is_refused() {
        let pose = Pose::from_rotation(rotation_about(&Vector3::x(), std::f64::consts::PI - 1e-8));
        assert!(matches!(se3_log(&pose), Err(BiltsError::RotationNearPi { .. })));
    }

    #[test]
    fn series_branches_are_continuous() {
        let axis = Vector3::new(0.2, -0.7, 0.4).normalize();
        let v = Vector3::new(0.1, 0.5, -0.3);
        let below = se3_exp(&ScrewTwist::new(axis * (SMALL_ANGLE * 0.999_999), v));
        let above = se3_exp(&ScrewTwist::new(axis * (SMALL_ANGLE * 1.000_001), v));
        assert_relative_eq!(below.rotation, above.rotation, epsilon = 1e-9);
        assert_relative_eq!(below.translation, above.translation, epsilon = 1e-9);
    }

    #[test]
    fn screw_axis_reconstructs_twist() {
        let t = ScrewTwist::new(Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0));
        let ax = screw_axis(&t).unwrap();
        assert_eq!(ax.direction, Vector3::z());
        assert_eq!(ax.pitch_velocity, 0.0);
        // v = v_axial + omega x (-p)
        let rebuilt = ax.axial_velocity() + t.omega.cross(&(-ax.point));
        assert_relative_eq!(rebuilt, t.vel, epsilon = 1e-15);
    }

    #[test]
    fn screw_axis_of_translation_fails() {
        let t = ScrewTwist::new(Vector3::zeros(), Vector3::x());
        assert!(matches!(screw_axis(&t), Err(BiltsError::PureTranslation { .. })));
    }

    #[test]
    fn sclerp_hits_endpoints_and_midpoint() {
        let a = Pose::new(rotation_about(&Vector3::new(1.0, 2.0, 0.5), 0.4), Vector3::new(0.1, 0.2, 0.3));
        let b = Pose::new(rotation_about(&Vector3::new(-1.0, 0.3, 0.5), 1.1), Vector3::new(-0.4, 0.9, 0.0));
        assert_eq!(sclerp(&a, &b, 0.0).unwrap(), a);
        assert_eq!(sclerp(&a, &b, 1.0).unwrap(), b);
        let mid = sclerp(&a, &b, 0.5).unwrap();
        let half = se3_log(&(b * a.inverse())).unwrap().scale(0.5);
        let expected = se3_exp(&half) * a;
        assert_relative_eq!(mid.rotation, expected.rotation, epsilon = 1e-14);
        assert!(sclerp(&a, &b, 1.5).is_err());
    }

    #[test]
    fn adjoint_matches_frame_change() {
        let frame = Pose::new(rotation_about(&Vector3::new(0.3, 0.1, 0.9), 0.8), Vector3::new(1.0, -2.0, 0.5));
        let t = ScrewTwist::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(-0.5, 0.4, 0.2));
        let a = adjoint(&frame).apply(&t);
        let b = change_twist_frame(&t, &frame);
        assert_relative_eq!(a.to_vector(), b.to_vector(), epsilon = 1e-14);
        // exp of the transformed twist equals conjugation
        let lhs = se3_exp(&a);
        let rhs = frame * se3_exp(&t) * frame.inverse();
        assert_relative_eq!(lhs.to_homogeneous(), rhs.to_homogeneous(), epsilon = 1e-13);
    }

    #[test]
    fn twist_cross_is_adjoint_derivative() {
        // d/dh S(exp(h xi)) at h = 0 equals twist_cross(xi)
        let xi = ScrewTwist::new(Vector3::new(0.3, -0.1, 0.7), Vector3::new(0.2, 0.5, -0.4));
        let h = 1e-6;
        let plus = adjoint(&se3_exp(&xi.scale(h))).0;
        let minus = adjoint(&se3_exp(&xi.scale(-h))).0;
        let fd = (plus - minus) / (2.0 * h);
        assert_relative_eq!(fd, twist_cross(&xi), epsilon = 1e-8);
    }
}
