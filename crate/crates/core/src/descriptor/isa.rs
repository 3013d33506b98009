//! Relations between the twice-upper-triangular screw coordinates and the
//! instantaneous-screw-axis invariants with their progress derivatives.

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use super::eqr::{Mat63, EPS_QR};
use crate::error::{BiltsError, Result};

/// Screw-axis invariants `(omega1, omega2, omega3, v1, v2, v3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IsaInvariants {
    pub omega: [f64; 3],
    pub vel: [f64; 3],
}

impl IsaInvariants {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.omega[0], self.omega[1], self.omega[2], self.vel[0], self.vel[1], self.vel[2])
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        IsaInvariants {
            omega: [v[0], v[1], v[2]],
            vel: [v[3], v[4], v[5]],
        }
    }
}

/// Progress derivatives of the invariants that enter the screw coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IsaDerivatives {
    pub d_omega1: f64,
    pub d_omega2: f64,
    pub d_vel1: f64,
    pub d_vel2: f64,
    pub dd_omega1: f64,
    pub dd_vel1: f64,
}

/// Screw coordinates `[twist, twist', twist'']` in the moving frame, written
/// in terms of the invariants.
pub fn analytic_r_from_isa(inv: &IsaInvariants, d: &IsaDerivatives) -> Mat63 {
    let [w1, w2, w3] = inv.omega;
    let [v1, v2, v3] = inv.vel;
    #[rustfmt::skip]
    let r = Mat63::from_row_slice(&[
        w1, d.d_omega1, -w1 * w2 * w2 + d.dd_omega1,
        0.0, w1 * w2, w1 * d.d_omega2 + 2.0 * d.d_omega1 * w2,
        0.0, 0.0, w1 * w2 * w3,
        v1, d.d_vel1, -2.0 * w1 * w2 * v2 - v1 * w2 * w2 + d.dd_vel1,
        0.0, w1 * v2 + v1 * w2, w1 * d.d_vel2 + v1 * d.d_omega2 + 2.0 * d.d_vel1 * w2 + 2.0 * d.d_omega1 * v2,
        0.0, 0.0, v1 * w2 * w3 + w1 * v2 * w3 + w1 * w2 * v3,
    ]);
    r
}

/// Recovers the invariants from twice-upper-triangular screw coordinates.
pub fn isa_from_r(r: &Mat63) -> Result<IsaInvariants> {
    let r11 = r[(0, 0)];
    let r22 = r[(1, 1)];
    let scale = r.fixed_view::<3, 3>(0, 0).norm();
    let tol = EPS_QR * scale;
    if !(r11 > tol) || !(r22 > tol) {
        return Err(BiltsError::SingularInvariants { r11, r22 });
    }
    let w1 = r11;
    let v1 = r[(3, 0)];
    let w2 = r22 / r11;
    let v2 = r[(4, 1)] / r11 - r22 * r[(3, 0)] / (r11 * r11);
    let w3 = r[(2, 2)] / r22;
    let v3 = r[(5, 2)] / r22 - r[(2, 2)] * r[(4, 1)] / (r22 * r22);
    Ok(IsaInvariants {
        omega: [w1, w2, w3],
        vel: [v1, v2, v3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hand_evaluated_entries() {
        let inv = IsaInvariants { omega: [1.0, 0.5, 0.0], vel: [0.2, 0.0, 0.0] };
        let r = analytic_r_from_isa(&inv, &IsaDerivatives::default());
        assert_relative_eq!(r[(0, 0)], 1.0);
        assert_relative_eq!(r[(0, 2)], -0.25);
        assert_relative_eq!(r[(1, 1)], 0.5);
        assert_relative_eq!(r[(3, 0)], 0.2);
        assert_relative_eq!(r[(3, 2)], -0.05);
        assert_relative_eq!(r[(4, 1)], 0.1);
    }

    #[test]
    fn roundtrip() {
        let inv = IsaInvariants { omega: [1.3, 0.7, -0.4], vel: [0.2, -0.5, 0.9] };
        let d = IsaDerivatives { d_omega1: 0.1, d_omega2: -0.3, d_vel1: 0.4, d_vel2: 0.2, dd_omega1: -0.6, dd_vel1: 0.05 };
        let back = isa_from_r(&analytic_r_from_isa(&inv, &d)).unwrap();
        assert_relative_eq!(back.to_vector(), inv.to_vector(), epsilon = 1e-14);
    }

    #[test]
    fn singular_second_invariant() {
        let inv = IsaInvariants { omega: [1.0, 0.0, 0.3], vel: [0.1, 0.0, 0.0] };
        let r = analytic_r_from_isa(&inv, &IsaDerivatives::default());
        assert!(matches!(isa_from_r(&r), Err(BiltsError::SingularInvariants { .. })));
    }
}
