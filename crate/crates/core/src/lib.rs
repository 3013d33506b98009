#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Bi-invariant local trajectory-shape descriptors and similarity measures
//! for rigid-body motion.
//!
//! The pipeline runs from time-sampled poses to geometric reparameterization,
//! local shape descriptors, descriptor distances, DTW-aligned trajectory
//! distances, nearest-neighbour recognition and shape-change segmentation.

pub mod datasets;
pub mod descriptor;
pub mod error;
pub mod recognition;
pub mod reparam;
pub mod se3;
pub mod segmentation;
pub mod similarity;

pub use error::{BiltsError, Result};

/// Library version reported by the CLI and the C interface.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
