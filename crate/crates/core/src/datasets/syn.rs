//! Seeded synthetic benchmark: seven motion classes observed under several
//! world/body reference changes, with low-frequency velocity noise.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3, Vector6};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TrajectoryRecord;
use crate::error::{BiltsError, Result};
use crate::se3::{rotation_about, se3_exp, Pose, ScrewTwist};

pub const ORIGINAL_CONTEXT: &str = "original";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionClass {
    Linear,
    Circular,
    Helical,
    FixedAxisRotation,
    PrecessionRotation,
    ScrewPosPitch,
    ScrewNegPitch,
}

impl MotionClass {
    pub const ALL: [MotionClass; 7] = [
        MotionClass::Linear,
        MotionClass::Circular,
        MotionClass::Helical,
        MotionClass::FixedAxisRotation,
        MotionClass::PrecessionRotation,
        MotionClass::ScrewPosPitch,
        MotionClass::ScrewNegPitch,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MotionClass::Linear => "linear",
            MotionClass::Circular => "circular",
            MotionClass::Helical => "helical",
            MotionClass::FixedAxisRotation => "fixed_axis_rotation",
            MotionClass::PrecessionRotation => "precession_rotation",
            MotionClass::ScrewPosPitch => "screw_pos_pitch",
            MotionClass::ScrewNegPitch => "screw_neg_pitch",
        }
    }
}

/// Generator settings. Omitted fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynConfig {
    pub classes: Vec<MotionClass>,
    /// Number of reference contexts, the first being the unmodified one.
    pub contexts: usize,
    pub trials_per_context: usize,
    /// Seconds.
    pub duration: f64,
    /// Seconds.
    pub dt: f64,
    /// Metres.
    pub radius: f64,
    /// Radians per second.
    pub angular_rate: f64,
    /// Metres per second.
    pub linear_rate: f64,
    /// Metres per radian.
    pub pitch: f64,
    /// Half-angle of the precession cone in radians.
    pub cone_angle: f64,
    /// Velocity noise intensity `[rotational rad/s, translational m/s]` per
    /// square-root second.
    pub noise_std: [f64; 2],
    /// Edge length in metres of the cube from which context offsets are drawn.
    pub box_size: f64,
    pub seed: u64,
}

impl Default for SynConfig {
    fn default() -> Self {
        SynConfig {
            classes: MotionClass::ALL.to_vec(),
            contexts: 3,
            trials_per_context: 4,
            duration: 5.0,
            dt: 0.01,
            radius: 0.25,
            angular_rate: 1.0,
            linear_rate: 0.2,
            pitch: 0.05,
            cone_angle: 0.5,
            noise_std: [0.02, 0.005],
            box_size: 1.0,
            seed: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(BiltsError::invalid(format!("{name}: must be positive and finite, got {v}")));
    }
    Ok(())
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(BiltsError::invalid(format!("{name}: must be non-negative and finite, got {v}")));
    }
    Ok(())
}

impl SynConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(BiltsError::invalid("classes: must not be empty"));
        }
        if self.contexts == 0 {
            return Err(BiltsError::invalid("contexts: must be at least 1"));
        }
        if self.trials_per_context == 0 {
            return Err(BiltsError::invalid("trials_per_context: must be at least 1"));
        }
        positive("dt", self.dt)?;
        positive("duration", self.duration)?;
        if self.duration < 2.0 * self.dt {
            return Err(BiltsError::invalid(format!(
                "duration: must cover at least two samples of dt = {}, got {}",
                self.dt, self.duration
            )));
        }
        positive("radius", self.radius)?;
        positive("angular_rate", self.angular_rate)?;
        positive("linear_rate", self.linear_rate)?;
        non_negative("pitch", self.pitch)?;
        non_negative("cone_angle", self.cone_angle)?;
        non_negative("noise_std[0]", self.noise_std[0])?;
        non_negative("noise_std[1]", self.noise_std[1])?;
        non_negative("box_size", self.box_size)?;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }
}

/// World change applied on the left and body change applied on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub name: String,
    pub world: Pose,
    pub body: Pose,
}

fn uniform_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let q = UnitQuaternion::from_quaternion(Quaternion::new(v[0], v[1], v[2], v[3]));
    q.to_rotation_matrix().into_inner()
}

fn uniform_pose(rng: &mut ChaCha8Rng, box_size: f64) -> Pose {
    let r = uniform_rotation(rng);
    let p = Vector3::from_fn(|_, _| (rng.random::<f64>() - 0.5) * box_size);
    Pose::new(r, p)
}

/// Reference contexts; the first is the identity.
pub fn contexts(cfg: &SynConfig) -> Vec<Context> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_c0de_0000_0001);
    let mut out = vec![Context {
        name: ORIGINAL_CONTEXT.into(),
        world: Pose::identity(),
        body: Pose::identity(),
    }];
    for i in 1..cfg.contexts {
        let world = uniform_pose(&mut rng, cfg.box_size);
        let body = uniform_pose(&mut rng, cfg.box_size);
        out.push(Context {
            name: format!("changed_references_{i}"),
            world,
            body,
        });
    }
    out
}

/// Noise-free poses of a motion class in its canonical frame.
pub fn clean_trajectory(class: MotionClass, cfg: &SynConfig) -> Vec<Pose> {
    let n = cfg.samples();
    let (r, w, v) = (cfg.radius, cfg.angular_rate, cfg.linear_rate);
    (0..n)
        .map(|k| {
            let t = k as f64 * cfg.dt;
            let (s, c) = (w * t).sin_cos();
            match class {
                MotionClass::Linear => Pose::from_translation(Vector3::new(v * t, 0.0, 0.0)),
                MotionClass::Circular => Pose::from_translation(Vector3::new(r * c, r * s, 0.0)),
                MotionClass::Helical => Pose::from_translation(Vector3::new(r * c, r * s, v * t)),
                MotionClass::FixedAxisRotation => Pose::from_rotation(rotation_about(&Vector3::z(), w * t)),
                MotionClass::PrecessionRotation => {
                    let spin = rotation_about(&Vector3::z(), w * t);
                    Pose::from_rotation(spin * rotation_about(&Vector3::x(), cfg.cone_angle) * spin)
                }
                MotionClass::ScrewPosPitch | MotionClass::ScrewNegPitch => {
                    let sign = if class == MotionClass::ScrewPosPitch { 1.0 } else { -1.0 };
                    Pose::new(rotation_about(&Vector3::z(), w * t), Vector3::new(0.0, 0.0, sign * cfg.pitch * w * t))
                }
            }
        })
        .collect()
}

/// Right-multiplies body-frame perturbations driven by a random-walk twist
/// whose increments have standard deviation `noise_std * sqrt(dt)`.
pub fn add_velocity_noise(poses: &[Pose], dt: f64, noise_std: [f64; 2], rng: &mut ChaCha8Rng) -> Vec<Pose> {
    if noise_std == [0.0, 0.0] {
        return poses.to_vec();
    }
    let scale = dt.sqrt();
    let mut vel = Vector6::<f64>::zeros();
    let mut drift = Pose::identity();
    let mut out = Vec::with_capacity(poses.len());
    for (k, p) in poses.iter().enumerate() {
        if k > 0 {
            for i in 0..6 {
                let z: f64 = StandardNormal.sample(rng);
                vel[i] += noise_std[i / 3] * scale * z;
            }
            drift = drift * se3_exp(&ScrewTwist::from_vector(&vel).scale(dt));
        }
        out.push(p * &drift);
    }
    out
}

fn record_seed(seed: u64, class: usize, context: usize, trial: usize) -> u64 {
    let key = ((class as u64) << 40) ^ ((context as u64) << 20) ^ trial as u64;
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ key.wrapping_mul(0xBF58_476D_1CE4_E5B9).rotate_left(17)
}

/// Generates every class x context x trial record.
pub fn generate_syn(cfg: &SynConfig) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    let ctxs = contexts(cfg);
    let mut out = Vec::with_capacity(cfg.classes.len() * ctxs.len() * cfg.trials_per_context);
    for (ci, class) in cfg.classes.iter().enumerate() {
        let clean = clean_trajectory(*class, cfg);
        for (xi, ctx) in ctxs.iter().enumerate() {
            for trial in 1..=cfg.trials_per_context {
                let mut rng = ChaCha8Rng::seed_from_u64(record_seed(cfg.seed, ci, xi, trial));
                let noisy = add_velocity_noise(&clean, cfg.dt, cfg.noise_std, &mut rng);
                let poses = noisy.iter().map(|p| ctx.world * (p * &ctx.body)).collect();
                out.push(TrajectoryRecord {
                    class: class.name().into(),
                    context: ctx.name.clone(),
                    trial,
                    dt: cfg.dt,
                    seed: cfg.seed,
                    poses,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dataset_shape() {
        let recs = generate_syn(&SynConfig::default()).unwrap();
        assert_eq!(recs.len(), 84);
        assert!(recs.iter().all(|r| r.poses.len() == 501));
    }

    #[test]
    fn original_context_is_identity() {
        let c = contexts(&SynConfig::default());
        assert_eq!(c[0].world, Pose::identity());
        assert_eq!(c[0].body, Pose::identity());
        assert_ne!(c[1].world, Pose::identity());
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SynConfig { trials_per_context: 1, ..SynConfig::default() };
        assert_eq!(generate_syn(&cfg).unwrap(), generate_syn(&cfg).unwrap());
        let other = SynConfig { seed: 1, ..cfg.clone() };
        assert_ne!(generate_syn(&cfg).unwrap(), generate_syn(&other).unwrap());
    }

    #[test]
    fn invalid_field_is_named() {
        let cfg = SynConfig { dt: -0.01, ..SynConfig::default() };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("dt"));
    }

    #[test]
    fn noiseless_screw_has_requested_pitch() {
        let cfg = SynConfig { noise_std: [0.0, 0.0], ..SynConfig::default() };
        let poses = clean_trajectory(MotionClass::ScrewNegPitch, &cfg);
        let last = poses.last().unwrap();
        assert!((last.translation.z + cfg.pitch * cfg.angular_rate * cfg.duration).abs() < 1e-12);
    }
}
