//! Extended QR decomposition of a 6x3 screw matrix into a rigid frame and a
//! twice-upper-triangular coordinate matrix.

use nalgebra::{Matrix3, SMatrix, Vector3};

use crate::error::{BiltsError, Result};
use crate::se3::{skew, Pose};

/// Relative tolerance on the diagonal entries `r11` and `r22`.
pub const EPS_QR: f64 = 1e-7;

pub type Mat63 = SMatrix<f64, 6, 3>;

/// Body pose and distance limit used to regularize the frame origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub body: Pose,
    pub max_distance: f64,
}

/// Which diagonal entry vanished when a fallback frame was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    /// No rotation: the first axis follows the translational velocity.
    FirstAxis,
    /// Stationary rotation axis: the second axis is carried over.
    SecondAxis,
}

/// Moving frame attached to a local trajectory segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalFrame {
    pub pose: Pose,
    pub regularized: bool,
    pub distance_clamped: bool,
    pub singularity: Option<Singularity>,
}

/// Result of [`eqr_decompose`]: `adjoint(frame.pose) * r == x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub frame: FunctionalFrame,
    pub r: Mat63,
}

fn rot_block(x: &Mat63) -> Matrix3<f64> {
    x.fixed_view::<3, 3>(0, 0).into_owned()
}

fn trans_block(x: &Mat63) -> Matrix3<f64> {
    x.fixed_view::<3, 3>(3, 0).into_owned()
}

fn stack(top: &Matrix3<f64>, bottom: &Matrix3<f64>) -> Mat63 {
    let mut r = Mat63::zeros();
    r.fixed_view_mut::<3, 3>(0, 0).copy_from(top);
    r.fixed_view_mut::<3, 3>(3, 0).copy_from(bottom);
    r
}

/// Unit vector orthogonal to `e1` obtained from `v`, if `v` has a usable
/// orthogonal component.
fn orthogonal_unit(e1: &Vector3<f64>, v: &Vector3<f64>, tol: f64) -> Option<Vector3<f64>> {
    let mut w = v - e1 * e1.dot(v);
    w -= e1 * e1.dot(&w);
    let n = w.norm();
    if n > tol && n > 0.0 { Some(w / n) } else { None }
}

/// Second axis for a frame whose first axis is `e1`, carried over from the
/// previous frame by the minimal rotation taking its first axis onto `e1`.
/// Without a previous frame the body axis least aligned with `e1` is used.
fn complete_second_axis(e1: &Vector3<f64>, previous: Option<&Matrix3<f64>>, body: &Matrix3<f64>) -> Vector3<f64> {
    if let Some(prev) = previous {
        let p1 = prev.column(0).into_owned();
        let p2 = prev.column(1).into_owned();
        let c = p1.dot(e1);
        let carried = if c > -0.5 {
            let k = skew(&p1.cross(e1));
            (Matrix3::identity() + k + k * k / (1.0 + c)) * p2
        } else {
            p2
        };
        for cand in [carried, p2, prev.column(2).into_owned()] {
            if let Some(e2) = orthogonal_unit(e1, &cand, 1e-6) {
                return e2;
            }
        }
    }
    let mut best = 0;
    for j in 1..3 {
        if body.column(j).dot(e1).abs() < body.column(best).dot(e1).abs() {
            best = j;
        }
    }
    orthogonal_unit(e1, &body.column(best).into_owned(), 1e-6).expect("least aligned body axis is never parallel")
}

fn frame_rotation(e1: Vector3<f64>, e2: Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_columns(&[e1, e2, e1.cross(&e2)])
}

/// Clamps the origin offset from the body origin to the regularization limit.
fn regularize_origin(p_star: Vector3<f64>, q: &Matrix3<f64>, reg: &Regularization) -> (Vector3<f64>, bool) {
    let body_local = q.transpose() * reg.body.translation;
    let delta = p_star - body_local;
    let n = delta.norm();
    if n > reg.max_distance {
        let scaled = if n > 0.0 { delta * (reg.max_distance / n) } else { delta };
        (body_local + scaled, true)
    } else {
        (p_star, false)
    }
}

fn finish(
    q: Matrix3<f64>,
    r1: Matrix3<f64>,
    m: Matrix3<f64>,
    p_star: Vector3<f64>,
    clamp_free: bool,
    frame: FunctionalFrame,
) -> Decomposition {
    let mut r2 = m - skew(&p_star) * r1;
    if clamp_free {
        r2[(1, 0)] = 0.0;
        r2[(2, 0)] = 0.0;
        if frame.singularity.is_none() {
            r2[(2, 1)] = 0.0;
        }
    }
    Decomposition {
        frame: FunctionalFrame {
            pose: Pose::new(q, q * p_star),
            ..frame
        },
        r: stack(&r1, &r2),
    }
}

/// Decomposes `x` into a frame `{f}` and `r` with `adjoint(f) * r = x`.
///
/// With `reg` set, the frame origin is kept within `reg.max_distance` of the
/// body origin and singular configurations fall back to a completed frame,
/// continuing from `previous` when given.
pub fn eqr_decompose(x: &Mat63, reg: Option<&Regularization>, previous: Option<&Matrix3<f64>>) -> Result<Decomposition> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(BiltsError::invalid("screw matrix contains non-finite entries"));
    }
    let x1 = rot_block(x);
    let x2 = trans_block(x);
    let c1 = x1.column(0).into_owned();
    let c2 = x1.column(1).into_owned();

    let tol1 = EPS_QR * x.norm();
    let r11 = c1.norm();
    if r11 <= tol1 || r11 == 0.0 {
        return match reg {
            None => Err(BiltsError::SingularDecomposition { r11, r22: 0.0 }),
            Some(reg) => Ok(translation_fallback(&x1, &x2, reg, previous)),
        };
    }
    let e1 = c1 / r11;
    let r12 = e1.dot(&c2);
    let tol2 = EPS_QR * x1.norm();
    let mut w = c2 - e1 * r12;
    w -= e1 * e1.dot(&w);
    let r22 = w.norm();
    if r22 <= tol2 || r22 == 0.0 {
        return match reg {
            None => Err(BiltsError::SingularDecomposition { r11, r22 }),
            Some(reg) => Ok(axis_fallback(&x1, &x2, e1, r11, reg, previous)),
        };
    }
    let e2 = w / r22;
    let q = frame_rotation(e1, e2);
    let mut r1 = q.transpose() * x1;
    r1[(0, 0)] = r11;
    r1[(1, 0)] = 0.0;
    r1[(2, 0)] = 0.0;
    r1[(0, 1)] = r12;
    r1[(1, 1)] = r22;
    r1[(2, 1)] = 0.0;
    let m = q.transpose() * x2;
    let z = m[(1, 0)] / r11;
    let y = -m[(2, 0)] / r11;
    let xo = (m[(2, 1)] + r12 * y) / r22;
    let p_star = Vector3::new(xo, y, z);
    let (p_star, clamped) = match reg {
        Some(reg) => regularize_origin(p_star, &q, reg),
        None => (p_star, false),
    };
    Ok(finish(
        q,
        r1,
        m,
        p_star,
        !clamped,
        FunctionalFrame {
            pose: Pose::identity(),
            regularized: reg.is_some(),
            distance_clamped: clamped,
            singularity: None,
        },
    ))
}

/// Frame for a (near) pure translation: the first axis follows the velocity,
/// the second follows its change when it has one, and the origin sits at the
/// body origin.
fn translation_fallback(
    x1: &Matrix3<f64>,
    x2: &Matrix3<f64>,
    reg: &Regularization,
    previous: Option<&Matrix3<f64>>,
) -> Decomposition {
    let tol = EPS_QR * x2.norm();
    let v = x2.column(0).into_owned();
    let nv = v.norm();
    let body_rot = &reg.body.rotation;
    let e1 = if nv > tol && nv > 0.0 {
        v / nv
    } else {
        previous.map(|p| p.column(0).into_owned()).unwrap_or_else(|| body_rot.column(0).into_owned())
    };
    let e2 = orthogonal_unit(&e1, &x2.column(1).into_owned(), tol)
        .unwrap_or_else(|| complete_second_axis(&e1, previous, body_rot));
    let q = frame_rotation(e1, e2);
    let r1 = q.transpose() * x1;
    let m = q.transpose() * x2;
    let p_star = q.transpose() * reg.body.translation;
    finish(
        q,
        r1,
        m,
        p_star,
        false,
        FunctionalFrame {
            pose: Pose::identity(),
            regularized: true,
            distance_clamped: true,
            singularity: Some(Singularity::FirstAxis),
        },
    )
}

/// Frame for a stationary rotation axis: the first axis is the rotation
/// axis, the second is carried over, and the origin is the point of the axis
/// nearest to the body origin before clamping.
fn axis_fallback(
    x1: &Matrix3<f64>,
    x2: &Matrix3<f64>,
    e1: Vector3<f64>,
    r11: f64,
    reg: &Regularization,
    previous: Option<&Matrix3<f64>>,
) -> Decomposition {
    let e2 = complete_second_axis(&e1, previous, &reg.body.rotation);
    let q = frame_rotation(e1, e2);
    let mut r1 = q.transpose() * x1;
    r1[(0, 0)] = r11;
    r1[(1, 0)] = 0.0;
    r1[(2, 0)] = 0.0;
    let m = q.transpose() * x2;
    let along = (q.transpose() * reg.body.translation).x;
    let p_star = Vector3::new(along, -m[(2, 0)] / r11, m[(1, 0)] / r11);
    let (p_star, clamped) = regularize_origin(p_star, &q, reg);
    finish(
        q,
        r1,
        m,
        p_star,
        !clamped,
        FunctionalFrame {
            pose: Pose::identity(),
            regularized: true,
            distance_clamped: clamped,
            singularity: Some(Singularity::SecondAxis),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{adjoint, rotation_about};
    use approx::assert_relative_eq;
    use nalgebra::Matrix6;

    fn reconstruct(d: &Decomposition) -> Mat63 {
        let s: Matrix6<f64> = adjoint(&d.frame.pose).0;
        s * d.r
    }

    #[test]
    fn upper_triangular_input_is_a_fixed_point() {
        #[rustfmt::skip]
        let x = Mat63::from_row_slice(&[
            1.0, 0.2, -0.3,
            0.0, 0.5, 0.4,
            0.0, 0.0, 0.7,
            0.1, 0.3, 0.2,
            0.0, 0.6, -0.1,
            0.0, 0.0, 0.8,
        ]);
        let d = eqr_decompose(&x, None, None).unwrap();
        assert_relative_eq!(d.frame.pose.rotation, Matrix3::identity(), epsilon = 1e-15);
        assert_relative_eq!(d.frame.pose.translation, Vector3::zeros(), epsilon = 1e-15);
        assert_relative_eq!(d.r, x, epsilon = 1e-15);
    }

    #[test]
    fn general_input_reconstructs_with_zero_pattern() {
        #[rustfmt::skip]
        let x = Mat63::from_row_slice(&[
            0.3, -1.2, 0.5,
            0.8, 0.4, -0.7,
            -0.2, 0.9, 1.1,
            1.5, 0.2, -0.4,
            -0.6, 0.7, 0.3,
            0.1, -0.9, 0.8,
        ]);
        let d = eqr_decompose(&x, None, None).unwrap();
        assert_relative_eq!(reconstruct(&d), x, epsilon = 1e-13);
        for (i, j) in [(1, 0), (2, 0), (2, 1), (4, 0), (5, 0), (5, 1)] {
            assert_eq!(d.r[(i, j)], 0.0);
        }
        assert!(d.r[(0, 0)] > 0.0 && d.r[(1, 1)] > 0.0);
        let q = d.frame.pose.rotation;
        assert_relative_eq!(q.transpose() * q, Matrix3::identity(), epsilon = 1e-14);
        assert_relative_eq!(q.determinant(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pure_translation_needs_regularization() {
        let mut x = Mat63::zeros();
        x[(3, 0)] = 1.0;
        x[(3, 1)] = 0.1;
        x[(4, 2)] = 0.2;
        assert!(matches!(
            eqr_decompose(&x, None, None),
            Err(BiltsError::SingularDecomposition { .. })
        ));
        let reg = Regularization {
            body: Pose::from_translation(Vector3::new(0.3, 0.1, -0.2)),
            max_distance: 0.1,
        };
        let d = eqr_decompose(&x, Some(&reg), None).unwrap();
        assert!(d.frame.distance_clamped);
        assert!(d.r.iter().all(|v| v.is_finite()));
        assert!((d.frame.pose.translation - reg.body.translation).norm() <= 0.1 + 1e-12);
        assert_relative_eq!(reconstruct(&d), x, epsilon = 1e-13);
    }

    #[test]
    fn distant_axis_is_clamped() {
        // rotation about z through (5, 0, 0) with changing axis direction
        let c = Vector3::new(5.0, 0.0, 0.0);
        let w0 = Vector3::new(0.0, 0.0, 1.0);
        let w1 = Vector3::new(0.3, 0.0, 0.0);
        let w2 = Vector3::new(0.0, 0.2, 0.1);
        let cols = [w0, w1, w2];
        let mut x = Mat63::zeros();
        for (j, w) in cols.iter().enumerate() {
            x.fixed_view_mut::<3, 1>(0, j).copy_from(w);
            x.fixed_view_mut::<3, 1>(3, j).copy_from(&c.cross(w));
        }
        let free = eqr_decompose(&x, None, None).unwrap();
        assert_relative_eq!(free.frame.pose.translation, c, epsilon = 1e-12);
        let reg = Regularization { body: Pose::identity(), max_distance: 0.5 };
        let d = eqr_decompose(&x, Some(&reg), None).unwrap();
        assert!(d.frame.distance_clamped);
        assert_relative_eq!(d.frame.pose.translation.norm(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(reconstruct(&d), x, epsilon = 1e-12);
    }

    #[test]
    fn fixed_axis_completes_from_previous_frame() {
        let axis = Vector3::new(0.0, 0.0, 2.0);
        let mut x = Mat63::zeros();
        for j in 0..3 {
            x.fixed_view_mut::<3, 1>(0, j).copy_from(&axis);
        }
        let reg = Regularization { body: Pose::identity(), max_distance: 1.0 };
        let prev = rotation_about(&Vector3::new(1.0, 1.0, 0.0), 0.3);
        let d = eqr_decompose(&x, Some(&reg), Some(&prev)).unwrap();
        assert_eq!(d.frame.singularity, Some(Singularity::SecondAxis));
        assert_relative_eq!(d.frame.pose.rotation.column(0).into_owned(), Vector3::z(), epsilon = 1e-15);
        assert_relative_eq!(reconstruct(&d), x, epsilon = 1e-14);
        assert!(eqr_decompose(&x, None, None).is_err());
    }
}
