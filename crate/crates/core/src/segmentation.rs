//! Shape-change signal between consecutive descriptors and breakpoint
//! detection on its peaks.

use serde::{Deserialize, Serialize};

use crate::descriptor::{descriptor_sequence, DescriptorParams};
use crate::error::{BiltsError, Result};
use crate::reparam::GeometricTrajectory;
use crate::similarity::{aligned_matrix_distance, matrix_distance};

/// Smallest default threshold, so that round-off on a constant shape does not
/// produce peaks.
pub const THRESHOLD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub l: f64,
    pub xi: f64,
    /// Regularize the frames and align consecutive descriptors.
    pub plus: bool,
}

/// Distance between consecutive descriptors; `d[i]` compares descriptor `i`
/// with descriptor `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeChangeSignal {
    /// Progress of the first descriptor of each pair.
    pub s: Vec<f64>,
    pub d: Vec<f64>,
    /// Descriptor half-width in samples.
    pub m: usize,
}

impl ShapeChangeSignal {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,d\n");
        for (s, d) in self.s.iter().zip(&self.d) {
            out.push_str(&format!("{s:e},{d:e}\n"));
        }
        out
    }

    pub fn default_threshold(&self) -> f64 {
        let n = self.d.len() as f64;
        if n == 0.0 {
            return THRESHOLD_FLOOR;
        }
        let mean = self.d.iter().sum::<f64>() / n;
        let var = self.d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean + 3.0 * var.sqrt()).max(THRESHOLD_FLOOR)
    }
}

pub fn shape_change_signal(traj: &GeometricTrajectory, params: &SegmentationParams) -> Result<ShapeChangeSignal> {
    if !(params.l > 0.0) || !params.l.is_finite() {
        return Err(BiltsError::invalid(format!("length scale must be positive, got {}", params.l)));
    }
    let seq = descriptor_sequence(traj, &DescriptorParams { l: params.l, xi: params.xi, regularize: params.plus })?;
    let progress = seq.progress();
    let d = seq
        .descriptors
        .windows(2)
        .map(|w| {
            if params.plus {
                aligned_matrix_distance(&w[0].y, &w[1].y, params.l).0
            } else {
                matrix_distance(&w[0].y, &w[1].y, params.l)
            }
        })
        .collect::<Vec<_>>();
    Ok(ShapeChangeSignal { s: progress[..d.len()].to_vec(), d, m: seq.m })
}

/// Indices of interior local maxima above `threshold`. Maxima within
/// `min_gap` samples of a larger accepted one are suppressed, so accepted
/// indices lie more than `min_gap` apart.
pub fn segment(signal: &[f64], threshold: f64, min_gap: usize) -> Vec<usize> {
    let n = signal.len();
    let mut peaks: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| {
            let v = signal[i];
            v > threshold && v >= signal[i - 1] && v > signal[i + 1]
        })
        .collect();
    peaks.sort_by(|&a, &b| signal[b].total_cmp(&signal[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for p in peaks {
        if kept.iter().all(|&k| k.abs_diff(p) > min_gap) {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    kept
}

/// Signal and breakpoints with the default threshold and gap when omitted.
pub fn detect_breakpoints(
    traj: &GeometricTrajectory,
    params: &SegmentationParams,
    threshold: Option<f64>,
    min_gap: Option<usize>,
) -> Result<(ShapeChangeSignal, Vec<usize>)> {
    let sig = shape_change_signal(traj, params)?;
    let th = threshold.unwrap_or_else(|| sig.default_threshold());
    let gap = min_gap.unwrap_or(sig.m);
    let bps = segment(&sig.d, th, gap);
    Ok((sig, bps))
}
