//! Descriptor distances, singular-value summaries, dynamic time warping and
//! trajectory-level distances.

use nalgebra::{Matrix3, SVD};
use serde::{Deserialize, Serialize};

use crate::descriptor::{self, DescriptorParams, DescriptorSequence, IsaInvariants, Mat63, ShapeDescriptor};
use crate::error::{BiltsError, Result};
use crate::reparam::GeometricTrajectory;

/// Minimum descriptor count for a trajectory comparison.
pub const MIN_SEQUENCE: usize = 3;

fn rot(y: &Mat63) -> Matrix3<f64> {
    y.fixed_view::<3, 3>(0, 0).into_owned()
}

fn trans(y: &Mat63) -> Matrix3<f64> {
    y.fixed_view::<3, 3>(3, 0).into_owned()
}

/// Weighted Frobenius norm with rotational rows scaled by `l`.
pub fn weighted_norm(y: &Mat63, l: f64) -> f64 {
    (l * l * rot(y).norm_squared() + trans(y).norm_squared()).sqrt()
}

/// Weighted distance between descriptor matrices.
pub fn matrix_distance(a: &Mat63, b: &Mat63, l: f64) -> f64 {
    weighted_norm(&(a - b), l)
}

/// Weighted distance after the rotation `blkdiag(R, R)` that best maps `a`
/// onto `b`, together with that rotation.
pub fn aligned_matrix_distance(a: &Mat63, b: &Mat63, l: f64) -> (f64, Matrix3<f64>) {
    let (ra, ta) = (rot(a), trans(a));
    let (rb, tb) = (rot(b), trans(b));
    let h = ra * rb.transpose() * (l * l) + ta * tb.transpose();
    let plain = matrix_distance(a, b, l);
    if h.norm() == 0.0 {
        return (plain, Matrix3::identity());
    }
    let svd = SVD::new(h, true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = (v_t.transpose() * u.transpose()).determinant().signum();
    let mut fix = Matrix3::identity();
    fix[(2, 2)] = d;
    let r = v_t.transpose() * fix * u.transpose();
    let aligned = (l * l * (r * ra - rb).norm_squared() + (r * ta - tb).norm_squared()).sqrt();
    if aligned <= plain { (aligned, r) } else { (plain, Matrix3::identity()) }
}

fn check_scales(a: &ShapeDescriptor, b: &ShapeDescriptor) -> Result<()> {
    let close = (a.ds - b.ds).abs() <= 1e-9 * a.ds.abs().max(b.ds.abs());
    if a.m != b.m || !close {
        return Err(BiltsError::MismatchedScale { m1: a.m, ds1: a.ds, m2: b.m, ds2: b.ds });
    }
    Ok(())
}

fn check_l(l: f64) -> Result<()> {
    if !(l >= 0.0) || !l.is_finite() {
        return Err(BiltsError::invalid(format!("length scale must be non-negative, got {l}")));
    }
    Ok(())
}

/// Weighted Frobenius distance between two descriptors of equal scale.
pub fn bilts_distance(a: &ShapeDescriptor, b: &ShapeDescriptor, l: f64) -> Result<f64> {
    check_l(l)?;
    check_scales(a, b)?;
    Ok(matrix_distance(&a.y, &b.y, l))
}

/// Distance minimized over a common rotation of all descriptor columns.
pub fn bilts_plus_distance(a: &ShapeDescriptor, b: &ShapeDescriptor, l: f64) -> Result<f64> {
    check_l(l)?;
    check_scales(a, b)?;
    Ok(aligned_matrix_distance(&a.y, &b.y, l).0)
}

/// Rotation-invariant summary: descending singular values of the rotational
/// and translational blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvSummary {
    pub upper: [f64; 3],
    pub lower: [f64; 3],
}

fn sorted_singular_values(m: Matrix3<f64>) -> [f64; 3] {
    let sv = m.singular_values();
    let mut out = [sv[0], sv[1], sv[2]];
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

pub fn sv_summary(y: &Mat63) -> SvSummary {
    SvSummary {
        upper: sorted_singular_values(rot(y)),
        lower: sorted_singular_values(trans(y)),
    }
}

fn summary_cost(a: &SvSummary, b: &SvSummary, l: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        acc += l * l * (a.upper[i] - b.upper[i]).powi(2) + (a.lower[i] - b.lower[i]).powi(2);
    }
    acc.sqrt()
}

/// Monotone alignment between two sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwPath {
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Dynamic time warping of two summary sequences, optionally restricted to a
/// Sakoe-Chiba band: cells whose Chebyshev distance from the straight line
/// joining the first and last cells is below `band + 1/2`. A zero band keeps
/// the rasterized diagonal, so some path always exists.
///
/// Backtracking prefers the diagonal step, then an advance of the first
/// sequence, then an advance of the second.
pub fn dtw_align(a: &[SvSummary], b: &[SvSummary], l: f64, band: Option<usize>) -> Result<DtwPath> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(BiltsError::TooShort { needed: 1, got: n.min(m) });
    }
    let (dn, dm) = ((n - 1) as i128, (m - 1) as i128);
    // Chebyshev distance to the diagonal below `w + 1/2`, in integers.
    let inside = |i: usize, j: usize| match band {
        None => true,
        Some(w) => {
            let cross = (i as i128 * dm - j as i128 * dn).abs();
            dn + dm == 0 || 2 * cross < (2 * w as i128 + 1) * (dn + dm)
        }
    };
    let mut acc = vec![f64::INFINITY; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            if !inside(i, j) {
                continue;
            }
            let c = summary_cost(&a[i], &b[j], l);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(acc[at(i - 1, j - 1)]);
                }
                if i > 0 {
                    best = best.min(acc[at(i - 1, j)]);
                }
                if j > 0 {
                    best = best.min(acc[at(i, j - 1)]);
                }
                best
            };
            acc[at(i, j)] = c + best;
        }
    }
    let cost = acc[at(n - 1, m - 1)];
    if !cost.is_finite() {
        return Err(BiltsError::invalid("band excludes every warping path"));
    }
    let (mut i, mut j) = (n - 1, m - 1);
    let mut pairs = vec![(i, j)];
    while i > 0 || j > 0 {
        let mut next = None;
        let mut best = f64::INFINITY;
        for (di, dj) in [(1usize, 1usize), (1, 0), (0, 1)] {
            if i < di || j < dj {
                continue;
            }
            let v = acc[at(i - di, j - dj)];
            if v < best {
                best = v;
                next = Some((i - di, j - dj));
            }
        }
        let (pi, pj) = next.expect("finite cell has a finite predecessor");
        i = pi;
        j = pj;
        pairs.push((i, j));
    }
    pairs.reverse();
    Ok(DtwPath { pairs, cost })
}

/// Descriptor sequence with its summaries, ready for repeated comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSequence {
    pub sequence: DescriptorSequence,
    pub summaries: Vec<SvSummary>,
}

impl PreparedSequence {
    pub fn new(sequence: DescriptorSequence) -> Self {
        let summaries = sequence.descriptors.iter().map(|d| sv_summary(&d.y)).collect();
        PreparedSequence { sequence, summaries }
    }

    pub fn from_trajectory(traj: &GeometricTrajectory, params: &DescriptorParams) -> Result<Self> {
        Ok(PreparedSequence::new(descriptor::descriptor_sequence(traj, params)?))
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }
}

/// Settings of a trajectory-level comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDistanceParams {
    pub l: f64,
    pub xi: f64,
    pub regularize: bool,
    /// Minimize each descriptor distance over a common rotation.
    pub plus: bool,
    pub band: Option<usize>,
}

impl TrajectoryDistanceParams {
    pub fn bilts(l: f64, xi: f64) -> Self {
        TrajectoryDistanceParams { l, xi, regularize: false, plus: false, band: None }
    }

    pub fn bilts_plus(l: f64, xi: f64) -> Self {
        TrajectoryDistanceParams { l, xi, regularize: true, plus: true, band: None }
    }

    pub fn descriptor_params(&self) -> DescriptorParams {
        DescriptorParams { l: self.l, xi: self.xi, regularize: self.regularize }
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    let got = a.min(b);
    if got < MIN_SEQUENCE {
        return Err(BiltsError::TooShort { needed: MIN_SEQUENCE, got });
    }
    Ok(())
}

/// Mean descriptor distance along the summary-based warping path.
///
/// The descriptors of the two sequences share the progress window `xi` but
/// may come from different sample spacings.
pub fn prepared_distance(a: &PreparedSequence, b: &PreparedSequence, l: f64, plus: bool, band: Option<usize>) -> Result<f64> {
    check_l(l)?;
    check_lengths(a.len(), b.len())?;
    let path = dtw_align(&a.summaries, &b.summaries, l, band)?;
    let total: f64 = path
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (ya, yb) = (&a.sequence.descriptors[i].y, &b.sequence.descriptors[j].y);
            if plus { aligned_matrix_distance(ya, yb, l).0 } else { matrix_distance(ya, yb, l) }
        })
        .sum();
    Ok(total / path.pairs.len() as f64)
}

/// Distance between two geometric trajectories.
pub fn trajectory_distance(a: &GeometricTrajectory, b: &GeometricTrajectory, params: &TrajectoryDistanceParams) -> Result<f64> {
    check_l(params.l)?;
    let dp = params.descriptor_params();
    let pa = PreparedSequence::from_trajectory(a, &dp)?;
    let pb = PreparedSequence::from_trajectory(b, &dp)?;
    prepared_distance(&pa, &pb, params.l, params.plus, params.band)
}

/// Weighted Euclidean distance between invariant vectors with weights
/// `(l, l lambda, l lambda, 1, lambda, lambda)`.
pub fn isa_weighted_distance(a: &IsaInvariants, b: &IsaInvariants, l: f64, lambda: f64) -> f64 {
    let w = [l, l * lambda, l * lambda, 1.0, lambda, lambda];
    let (va, vb) = (a.to_vector(), b.to_vector());
    (0..6).map(|i| (w[i] * (va[i] - vb[i])).powi(2)).sum::<f64>().sqrt()
}

/// Mean invariant distance along the summary-based warping path.
pub fn isa_distance(
    a: &PreparedSequence,
    inv_a: &[IsaInvariants],
    b: &PreparedSequence,
    inv_b: &[IsaInvariants],
    l: f64,
    lambda: f64,
    band: Option<usize>,
) -> Result<f64> {
    check_l(l)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(BiltsError::invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    if inv_a.len() != a.len() || inv_b.len() != b.len() {
        return Err(BiltsError::invalid("invariant sequences must match their descriptor sequences"));
    }
    check_lengths(a.len(), b.len())?;
    let path = dtw_align(&a.summaries, &b.summaries, l, band)?;
    let total: f64 = path
        .pairs
        .iter()
        .map(|&(i, j)| isa_weighted_distance(&inv_a[i], &inv_b[j], l, lambda))
        .sum();
    Ok(total / path.pairs.len() as f64)
}
