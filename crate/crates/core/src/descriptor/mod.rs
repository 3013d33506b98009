//! Local trajectory-shape descriptors.
//!
//! A descriptor stacks three screw twists of a local segment, taken a
//! progress window `m * ds` apart, and expresses them in a moving frame found
//! by the extended QR decomposition. The continuous counterpart uses the twist
//! and its first two progress derivatives.

pub mod eqr;
pub mod isa;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

pub use eqr::{eqr_decompose, Decomposition, FunctionalFrame, Mat63, Regularization, Singularity, EPS_QR};
pub use isa::{analytic_r_from_isa, isa_from_r, IsaDerivatives, IsaInvariants};

use crate::error::{BiltsError, Result};
use crate::reparam::GeometricTrajectory;
use crate::se3::{self, ScrewTwist};

/// Descriptor of one local segment, expressed in its moving frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeDescriptor {
    /// Columns: twist at `s - m ds`, at `s`, at `s + m ds`.
    pub y: Mat63,
    pub m: usize,
    pub ds: f64,
    pub frame: FunctionalFrame,
}

impl ShapeDescriptor {
    pub fn rot_block(&self) -> Matrix3<f64> {
        self.y.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn trans_block(&self) -> Matrix3<f64> {
        self.y.fixed_view::<3, 3>(3, 0).into_owned()
    }

    /// Progress distance between neighbouring columns.
    pub fn window(&self) -> f64 {
        self.m as f64 * self.ds
    }

    /// Estimate of `[twist, twist', twist'']` in the moving frame.
    pub fn continuous_r(&self) -> Mat63 {
        self.y * c_matrix(self.window()).try_inverse().expect("window is positive")
    }
}

/// Settings of a descriptor sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorParams {
    /// Length scale weighting rotation against translation and bounding the
    /// regularized frame origin.
    pub l: f64,
    /// Progress window between the descriptor columns.
    pub xi: f64,
    pub regularize: bool,
}

/// Descriptors for all admissible samples of a geometric trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSequence {
    pub descriptors: Vec<ShapeDescriptor>,
    /// Pose index of each descriptor.
    pub indices: Vec<usize>,
    pub m: usize,
    pub ds: f64,
}

impl DescriptorSequence {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    /// Progress value of each descriptor.
    pub fn progress(&self) -> Vec<f64> {
        self.indices.iter().map(|&k| k as f64 * self.ds).collect()
    }
}

/// `A` with `[y-, y0, y+] * A = [y0, y+ - y-, y-]`.
pub fn a_matrix() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

pub fn a_inverse() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0)
}

/// `C` with `[t, t', t''] * C` the second-order Taylor estimates at
/// `-ds, 0, +ds`.
pub fn c_matrix(ds: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 1.0, 1.0, -ds, 0.0, ds, 0.5 * ds * ds, 0.0, 0.5 * ds * ds)
}

/// Column half-width in samples for a progress window `xi`.
pub fn window_half_width(xi: f64, ds: f64) -> usize {
    let m = (xi / ds).round();
    if m.is_finite() && m >= 1.0 { m as usize } else { 1 }
}

/// Pose indices admitting a descriptor with half-width `m`.
pub fn valid_range(n: usize, m: usize) -> std::ops::Range<usize> {
    if n < 2 * m + 3 { (m + 1)..(m + 1) } else { (m + 1)..(n - m - 1) }
}

/// Central-difference twist at each interior pose; entry `k - 1` belongs to
/// pose `k`.
pub fn central_twists(traj: &GeometricTrajectory) -> Result<Vec<ScrewTwist>> {
    traj.poses
        .windows(3)
        .map(|w| se3::se3_log_between(&w[0], &w[2], 2.0 * traj.ds))
        .collect()
}

fn stack_columns(cols: [&ScrewTwist; 3]) -> Mat63 {
    let mut x = Mat63::zeros();
    for (j, t) in cols.iter().enumerate() {
        x.fixed_view_mut::<6, 1>(0, j).copy_from(&t.to_vector());
    }
    x
}

/// Descriptor from the three world-frame twists of a segment.
pub fn descriptor_from_twists(
    minus: &ScrewTwist,
    center: &ScrewTwist,
    plus: &ScrewTwist,
    m: usize,
    ds: f64,
    reg: Option<&Regularization>,
    previous: Option<&Matrix3<f64>>,
) -> Result<ShapeDescriptor> {
    let diff = *plus - *minus;
    let x = stack_columns([center, &diff, minus]);
    let d = eqr_decompose(&x, reg, previous)?;
    Ok(ShapeDescriptor {
        y: d.r * a_inverse(),
        m,
        ds,
        frame: d.frame,
    })
}

/// Continuous descriptor `R * C(ds)` from a twist and its first two progress
/// derivatives.
pub fn continuous_descriptor(
    twist: &ScrewTwist,
    d_twist: &ScrewTwist,
    dd_twist: &ScrewTwist,
    ds: f64,
    reg: Option<&Regularization>,
) -> Result<(Mat63, FunctionalFrame)> {
    let x = stack_columns([twist, d_twist, dd_twist]);
    let d = eqr_decompose(&x, reg, None)?;
    Ok((d.r * c_matrix(ds), d.frame))
}

fn regularization(traj: &GeometricTrajectory, k: usize, l: f64) -> Regularization {
    Regularization {
        body: traj.poses[k],
        max_distance: l,
    }
}

fn check_scale(l: f64, regularize: bool) -> Result<()> {
    if regularize && (!(l >= 0.0) || !l.is_finite()) {
        return Err(BiltsError::invalid(format!("length scale must be non-negative, got {l}")));
    }
    Ok(())
}

/// Descriptor at pose `k` with half-width `m`, without frame continuity.
pub fn descriptor_at(traj: &GeometricTrajectory, k: usize, m: usize, l: f64, regularize: bool) -> Result<ShapeDescriptor> {
    check_scale(l, regularize)?;
    let range = valid_range(traj.len(), m);
    if m == 0 || !range.contains(&k) {
        return Err(BiltsError::IndexOutOfRange { index: k, start: range.start, end: range.end });
    }
    let tw = |i: usize| se3::se3_log_between(&traj.poses[i - 1], &traj.poses[i + 1], 2.0 * traj.ds);
    let reg = regularize.then(|| regularization(traj, k, l));
    descriptor_from_twists(&tw(k - m)?, &tw(k)?, &tw(k + m)?, m, traj.ds, reg.as_ref(), None)
}

/// Descriptors for every admissible pose, each regularized frame continuing
/// from its predecessor.
pub fn descriptor_sequence(traj: &GeometricTrajectory, params: &DescriptorParams) -> Result<DescriptorSequence> {
    check_scale(params.l, params.regularize)?;
    if !(params.xi > 0.0) || !params.xi.is_finite() {
        return Err(BiltsError::invalid(format!("progress window must be positive, got {}", params.xi)));
    }
    let m = window_half_width(params.xi, traj.ds);
    let range = valid_range(traj.len(), m);
    if range.is_empty() {
        return Err(BiltsError::TooShort { needed: 2 * m + 3, got: traj.len() });
    }
    let twists = central_twists(traj)?;
    let mut descriptors = Vec::with_capacity(range.len());
    let mut previous: Option<Matrix3<f64>> = None;
    for k in range.clone() {
        let reg = params.regularize.then(|| regularization(traj, k, params.l));
        let d = descriptor_from_twists(
            &twists[k - m - 1],
            &twists[k - 1],
            &twists[k + m - 1],
            m,
            traj.ds,
            reg.as_ref(),
            previous.as_ref(),
        )?;
        previous = Some(d.frame.pose.rotation);
        descriptors.push(d);
    }
    Ok(DescriptorSequence {
        descriptors,
        indices: range.collect(),
        m,
        ds: traj.ds,
    })
}

/// Screw-axis invariants estimated from each descriptor of a sequence.
pub fn isa_sequence(seq: &DescriptorSequence) -> Result<Vec<IsaInvariants>> {
    seq.descriptors.iter().map(|d| isa_from_r(&d.continuous_r())).collect()
}
