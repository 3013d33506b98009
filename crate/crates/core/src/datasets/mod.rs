//! Labelled trajectory records, the synthetic benchmark generator and the
//! on-disk dataset format.

pub mod io;
pub mod syn;

pub use io::{load_dataset, read_record, write_dataset, write_record, Manifest, Sidecar};
pub use syn::{generate_syn, Context, MotionClass, SynConfig};

use crate::error::Result;
use crate::reparam::TemporalTrajectory;
use crate::se3::Pose;

/// Time-sampled trajectory with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub class: String,
    pub context: String,
    pub trial: usize,
    pub dt: f64,
    pub seed: u64,
    pub poses: Vec<Pose>,
}

impl TrajectoryRecord {
    pub fn temporal(&self) -> Result<TemporalTrajectory> {
        TemporalTrajectory::new(self.poses.clone(), self.dt)
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            class: self.class.clone(),
            context: self.context.clone(),
            trial: self.trial,
            dt: self.dt,
            seed: self.seed,
        }
    }

    /// Identifier of the form `class/context/trial_n`.
    pub fn id(&self) -> String {
        format!("{}/{}/trial_{}", self.class, self.context, self.trial)
    }
}
