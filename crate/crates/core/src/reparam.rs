//! Time-to-geometry reparameterization: progress rates, cumulative progress,
//! equidistant resampling by screw-linear interpolation, and Gaussian
//! smoothing of the resampled poses.

use nalgebra::{Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{BiltsError, Result};
use crate::se3::{self, Pose, ScrewTwist, EPS_OMEGA};

/// Total progress below which a trajectory is considered motionless.
pub const MIN_TOTAL_PROGRESS: f64 = 1e-9;
/// Default number of resampled poses.
pub const DEFAULT_N_OUT: usize = 50;
/// Default smoothing width in samples.
pub const DEFAULT_SIGMA: f64 = 2.0;

/// Poses sampled uniformly in time.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalTrajectory {
    pub poses: Vec<Pose>,
    pub dt: f64,
}

impl TemporalTrajectory {
    pub fn new(poses: Vec<Pose>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(BiltsError::invalid(format!("dt must be positive, got {dt}")));
        }
        if poses.len() < 2 {
            return Err(BiltsError::TooShort { needed: 2, got: poses.len() });
        }
        Ok(TemporalTrajectory { poses, dt })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Applies a world-frame change on the left and a body-frame change on
    /// the right of every pose.
    pub fn transformed(&self, world: &Pose, body: &Pose) -> Self {
        TemporalTrajectory {
            poses: self.poses.iter().map(|p| world * &(p * body)).collect(),
            dt: self.dt,
        }
    }
}

/// Geometric progress variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProgressType {
    /// Path length travelled by the body origin.
    Arclength,
    /// Accumulated rotation angle.
    Angle,
    /// Rotation angle plus axial translation scaled by `1 / l`.
    ScrewPath { l: f64 },
}

impl ProgressType {
    pub fn name(&self) -> &'static str {
        match self {
            ProgressType::Arclength => "arclength",
            ProgressType::Angle => "angle",
            ProgressType::ScrewPath { .. } => "screw_path",
        }
    }
}

/// Poses sampled uniformly in a geometric progress variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricTrajectory {
    pub poses: Vec<Pose>,
    pub ds: f64,
    pub progress: ProgressType,
}

impl GeometricTrajectory {
    pub fn new(poses: Vec<Pose>, ds: f64, progress: ProgressType) -> Result<Self> {
        if !(ds > 0.0) || !ds.is_finite() {
            return Err(BiltsError::invalid(format!("ds must be positive, got {ds}")));
        }
        Ok(GeometricTrajectory { poses, ds, progress })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn total_progress(&self) -> f64 {
        self.ds * (self.poses.len().saturating_sub(1)) as f64
    }

    pub fn transformed(&self, world: &Pose, body: &Pose) -> Self {
        GeometricTrajectory {
            poses: self.poses.iter().map(|p| world * &(p * body)).collect(),
            ds: self.ds,
            progress: self.progress,
        }
    }
}

/// Forward-difference spatial twists `log(T[j+1] * T[j]^-1) / dt`.
pub fn temporal_twists(traj: &TemporalTrajectory) -> Result<Vec<ScrewTwist>> {
    traj.poses
        .windows(2)
        .map(|w| se3::se3_log_between(&w[0], &w[1], traj.dt))
        .collect()
}

/// Translational velocity of the point of the (distance-limited) screw axis
/// nearest to `body_origin`.
///
/// The axis is moved towards `body_origin` until it lies within `l`, so the
/// result tends to the plain axial velocity when the axis passes near the
/// body and to the body-point velocity when the axis recedes to infinity.
pub fn regulated_axial_velocity(twist: &ScrewTwist, body_origin: &Vector3<f64>, l: f64) -> Vector3<f64> {
    let n = twist.omega.norm();
    if n <= EPS_OMEGA {
        return twist.vel + twist.omega.cross(body_origin);
    }
    let dir = twist.omega / n;
    let foot = twist.omega.cross(&twist.vel) / (n * n);
    let rel = foot - body_origin;
    let offset = rel - dir * dir.dot(&rel);
    let dist = offset.norm();
    let clamped = if dist > l { offset * (l / dist) } else { offset };
    let q = body_origin + clamped;
    twist.vel + twist.omega.cross(&q)
}

/// Progress rate per interval; one value per forward-difference twist.
pub fn progress_rates(traj: &TemporalTrajectory, progress: ProgressType) -> Result<Vec<f64>> {
    match progress {
        ProgressType::Arclength => Ok(traj
            .poses
            .windows(2)
            .map(|w| (w[1].translation - w[0].translation).norm() / traj.dt)
            .collect()),
        ProgressType::Angle => Ok(temporal_twists(traj)?.iter().map(|t| t.omega.norm()).collect()),
        ProgressType::ScrewPath { l } => {
            if !(l > 0.0) || !l.is_finite() {
                return Err(BiltsError::invalid(format!("screw-path length scale must be positive, got {l}")));
            }
            let twists = temporal_twists(traj)?;
            Ok(twists
                .iter()
                .zip(&traj.poses)
                .map(|(t, p)| t.omega.norm() + regulated_axial_velocity(t, &p.translation, l).norm() / l)
                .collect())
        }
    }
}

/// Cumulative progress `s[0] = 0`, `s[k] = sum_{j<k} rate[j] * dt`.
pub fn cumulative_progress(rates: &[f64], dt: f64) -> Result<Vec<f64>> {
    let mut s = Vec::with_capacity(rates.len() + 1);
    let mut acc = 0.0;
    s.push(acc);
    for &r in rates {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(BiltsError::invalid(format!("progress rate must be finite and non-negative, got {r}")));
        }
        acc += r * dt;
        s.push(acc);
    }
    if !(acc >= MIN_TOTAL_PROGRESS) {
        return Err(BiltsError::DegenerateProgress { total: acc });
    }
    Ok(s)
}

/// Resamples `poses` at `n_out` equidistant progress values over `[0, s_end]`.
///
/// Samples where progress stalls are dropped, keeping the first of each run.
pub fn resample_equidistant(
    poses: &[Pose],
    s: &[f64],
    n_out: usize,
    progress: ProgressType,
) -> Result<GeometricTrajectory> {
    if poses.len() != s.len() {
        return Err(BiltsError::invalid(format!(
            "{} poses but {} progress values",
            poses.len(),
            s.len()
        )));
    }
    if n_out < 2 {
        return Err(BiltsError::invalid(format!("n_out must be at least 2, got {n_out}")));
    }
    let total = *s.last().ok_or(BiltsError::TooShort { needed: 2, got: 0 })?;
    if !(total >= MIN_TOTAL_PROGRESS) {
        return Err(BiltsError::DegenerateProgress { total });
    }
    let tol = 1e-12 * total;
    let mut keep: Vec<usize> = vec![0];
    for k in 1..s.len() {
        if s[k] > s[*keep.last().unwrap()] + tol {
            keep.push(k);
        }
    }
    let ds = total / (n_out - 1) as f64;
    let mut out = Vec::with_capacity(n_out);
    let mut seg = 0usize;
    for i in 0..n_out {
        if i == 0 {
            out.push(poses[keep[0]]);
            continue;
        }
        if i == n_out - 1 {
            out.push(poses[*keep.last().unwrap()]);
            continue;
        }
        let target = ds * i as f64;
        while seg + 2 < keep.len() && s[keep[seg + 1]] < target {
            seg += 1;
        }
        let (a, b) = (keep[seg], keep[seg + 1]);
        let u = ((target - s[a]) / (s[b] - s[a])).clamp(0.0, 1.0);
        out.push(se3::sclerp(&poses[a], &poses[b], u)?);
    }
    GeometricTrajectory::new(out, ds, progress)
}

/// Progress computation followed by equidistant resampling.
pub fn reparameterize(traj: &TemporalTrajectory, progress: ProgressType, n_out: usize) -> Result<GeometricTrajectory> {
    let rates = progress_rates(traj, progress)?;
    let s = cumulative_progress(&rates, traj.dt)?;
    resample_equidistant(&traj.poses, &s, n_out, progress)
}

/// Gaussian smoothing of positions and sign-continuous quaternions with a
/// kernel of width `sigma` samples truncated at `3 sigma`.
pub fn gaussian_smooth(traj: &GeometricTrajectory, sigma: f64) -> Result<GeometricTrajectory> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(BiltsError::invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 || traj.poses.len() < 2 {
        return Ok(traj.clone());
    }
    let half = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();

    let n = traj.poses.len();
    let mut quats: Vec<Vector4<f64>> = Vec::with_capacity(n);
    for p in &traj.poses {
        let q = p.quaternion().into_inner().coords;
        let q = match quats.last() {
            Some(prev) if prev.dot(&q) < 0.0 => -q,
            _ => q,
        };
        quats.push(q);
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n as isize {
        let mut wsum = 0.0;
        let mut pos = Vector3::zeros();
        let mut quat = Vector4::zeros();
        for (ki, k) in (-half..=half).enumerate() {
            let j = i + k;
            if j < 0 || j >= n as isize {
                continue;
            }
            let w = kernel[ki];
            wsum += w;
            pos += traj.poses[j as usize].translation * w;
            quat += quats[j as usize] * w;
        }
        let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(quat / wsum));
        out.push(Pose::from_quaternion(&q, pos / wsum));
    }
    GeometricTrajectory::new(out, traj.ds, traj.progress)
}

/// Preprocessing settings shared by the recognition and comparison tools.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReparamConfig {
    pub progress: ProgressType,
    pub n_out: usize,
    pub sigma: f64,
}

impl ReparamConfig {
    pub fn new(progress: ProgressType) -> Self {
        ReparamConfig {
            progress,
            n_out: DEFAULT_N_OUT,
            sigma: DEFAULT_SIGMA,
        }
    }
}

/// Reparameterization followed by smoothing.
pub fn preprocess(traj: &TemporalTrajectory, cfg: &ReparamConfig) -> Result<GeometricTrajectory> {
    let g = reparameterize(traj, cfg.progress, cfg.n_out)?;
    gaussian_smooth(&g, cfg.sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::rotation_about;
    use approx::assert_relative_eq;

    fn constant_speed_line(n: usize, dt: f64, speed: f64) -> TemporalTrajectory {
        let poses = (0..n)
            .map(|k| Pose::from_translation(Vector3::new(speed * k as f64 * dt, 0.0, 0.0)))
            .collect();
        TemporalTrajectory::new(poses, dt).unwrap()
    }

    #[test]
    fn constant_speed_gives_equidistant_arclength() {
        let t = constant_speed_line(101, 0.01, 0.2);
        let rates = progress_rates(&t, ProgressType::Arclength).unwrap();
        let s = cumulative_progress(&rates, t.dt).unwrap();
        for (k, v) in s.iter().enumerate() {
            assert_relative_eq!(*v, 0.002 * k as f64, epsilon = 1e-12);
        }
        let g = resample_equidistant(&t.poses, &s, 11, ProgressType::Arclength).unwrap();
        assert_relative_eq!(g.ds, 0.02, epsilon = 1e-12);
        for (i, p) in g.poses.iter().enumerate() {
            assert_relative_eq!(p.translation.x, 0.02 * i as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_trajectory_is_degenerate() {
        let poses = vec![Pose::identity(); 10];
        let t = TemporalTrajectory::new(poses, 0.1).unwrap();
        assert!(matches!(
            reparameterize(&t, ProgressType::Angle, 5),
            Err(BiltsError::DegenerateProgress { .. })
        ));
    }

    #[test]
    fn screw_rate_with_axis_through_body() {
        // 1 rad/s about z through the origin with 0.1 m/s along z
        let twist = ScrewTwist::new(Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, 0.1));
        let v = regulated_axial_velocity(&twist, &Vector3::zeros(), 0.5);
        let rate = twist.omega.norm() + v.norm() / 0.5;
        assert_relative_eq!(rate, 1.2, epsilon = 1e-15);
    }

    #[test]
    fn distant_axis_is_pulled_to_the_limit() {
        // axis 2 m from the body point, limit 0.5 m: the point 0.5 m towards
        // the axis moves at 1.5 m/s
        let omega = Vector3::new(0.0, 0.0, 1.0);
        let axis_point = Vector3::new(2.0, 0.0, 0.0);
        let twist = ScrewTwist::new(omega, -omega.cross(&axis_point));
        let v = regulated_axial_velocity(&twist, &Vector3::zeros(), 0.5);
        assert_relative_eq!(v.norm(), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn stalls_keep_first_sample() {
        let poses: Vec<Pose> = (0..5).map(|k| Pose::from_translation(Vector3::new(k as f64, 0.0, 0.0))).collect();
        let s = vec![0.0, 1.0, 1.0, 2.0, 3.0];
        let g = resample_equidistant(&poses, &s, 4, ProgressType::Arclength).unwrap();
        assert_relative_eq!(g.poses[1].translation.x, 1.0, epsilon = 1e-14);
        assert_relative_eq!(g.poses[2].translation.x, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_sigma_is_identity() {
        let poses: Vec<Pose> = (0..7)
            .map(|k| Pose::new(rotation_about(&Vector3::y(), 0.1 * k as f64), Vector3::new(0.0, k as f64, 0.0)))
            .collect();
        let g = GeometricTrajectory::new(poses, 0.1, ProgressType::Angle).unwrap();
        assert_eq!(gaussian_smooth(&g, 0.0).unwrap(), g);
    }

    #[test]
    fn smoothing_preserves_straight_uniform_motion() {
        let poses: Vec<Pose> = (0..30)
            .map(|k| Pose::new(rotation_about(&Vector3::z(), 0.05 * k as f64), Vector3::new(0.1 * k as f64, 0.0, 0.0)))
            .collect();
        let g = GeometricTrajectory::new(poses.clone(), 0.1, ProgressType::Angle).unwrap();
        let sm = gaussian_smooth(&g, 2.0).unwrap();
        // interior samples have symmetric support, so linear motion is preserved
        for (a, b) in sm.poses.iter().zip(&poses).take(24).skip(6) {
            assert_relative_eq!(a.translation, b.translation, epsilon = 1e-12);
            assert_relative_eq!(a.rotation, b.rotation, epsilon = 1e-12);
        }
    }
}
