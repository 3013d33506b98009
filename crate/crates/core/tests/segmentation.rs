mod common;

use nalgebra::Vector3;
use proptest::prelude::*;

use bilts::reparam::GeometricTrajectory;
use bilts::se3::{se3_exp, Pose, ScrewTwist};
use bilts::segmentation::{detect_breakpoints, segment, shape_change_signal, SegmentationParams};
use common::{geometric, pose};

fn screw(point: Vector3<f64>, dir: Vector3<f64>, pitch: f64) -> ScrewTwist {
    let w = dir.normalize();
    ScrewTwist::new(w, -w.cross(&point) + w * pitch)
}

/// Constant screw `first` up to `junction`, then `second`, sampled at `ds`.
fn two_segments(first: &ScrewTwist, second: &ScrewTwist, junction: f64, n: usize, ds: f64) -> GeometricTrajectory {
    let at_junction = se3_exp(&first.scale(junction));
    let poses = (0..n)
        .map(|k| {
            let s = k as f64 * ds;
            if s <= junction { se3_exp(&first.scale(s)) } else { se3_exp(&second.scale(s - junction)) * at_junction }
        })
        .collect();
    geometric(poses, ds)
}

fn example() -> GeometricTrajectory {
    let a = screw(Vector3::new(0.1, 0.0, 0.0), Vector3::z(), 0.05);
    let b = screw(Vector3::new(0.0, 0.2, 0.0), Vector3::new(1.0, 0.0, 1.0), -0.02);
    two_segments(&a, &b, 1.5, 121, 0.025)
}

#[test]
fn constant_screw_has_flat_signal() {
    let t = screw(Vector3::new(0.3, -0.1, 0.0), Vector3::new(0.2, 0.1, 1.0), 0.07);
    let traj = geometric((0..100).map(|k| se3_exp(&t.scale(0.02 * k as f64))).collect(), 0.02);
    let params = SegmentationParams { l: 0.5, xi: 0.1, plus: true };
    let (signal, breaks) = detect_breakpoints(&traj, &params, None, None).unwrap();
    assert!(signal.d.iter().all(|v| *v < 1e-8), "{:?}", signal.d);
    assert!(breaks.is_empty());
}

#[test]
fn signal_peaks_at_the_junction() {
    let traj = example();
    let params = SegmentationParams { l: 0.6, xi: 0.125, plus: true };
    let sig = shape_change_signal(&traj, &params).unwrap();
    let argmax = (0..sig.d.len()).max_by(|&i, &j| sig.d[i].total_cmp(&sig.d[j])).unwrap();
    // Entry k compares descriptors at s and s + ds; the window spans m samples.
    let window = sig.m as f64 * traj.ds;
    assert!((sig.s[argmax] - 1.5).abs() <= window + traj.ds, "peak at {}", sig.s[argmax]);
    let (_, breaks) = detect_breakpoints(&traj, &params, None, None).unwrap();
    assert_eq!(breaks.len(), 1, "{breaks:?}");
    assert!((sig.s[breaks[0]] - 1.5).abs() <= window + traj.ds);
}

#[test]
fn signal_is_far_from_zero_only_near_the_junction() {
    let traj = example();
    let params = SegmentationParams { l: 0.6, xi: 0.125, plus: true };
    let sig = shape_change_signal(&traj, &params).unwrap();
    let reach = (2 * sig.m + 2) as f64 * traj.ds;
    for (s, d) in sig.s.iter().zip(&sig.d) {
        if (s - 1.5).abs() > reach {
            assert!(*d < 1e-8, "s = {s}, d = {d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn regularized_signal_ignores_nearby_body_points(w in pose(2.0), body in pose(0.1)) {
        // Both screw axes stay within 0.5 of every such body point, below l.
        let traj = example();
        let params = SegmentationParams { l: 0.6, xi: 0.125, plus: true };
        let a = shape_change_signal(&traj, &params).unwrap();
        let b = shape_change_signal(&traj.transformed(&w, &body), &params).unwrap();
        for (x, y) in a.d.iter().zip(&b.d) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn regularized_signal_ignores_world_frame(w in pose(2.0)) {
        let traj = example();
        let params = SegmentationParams { l: 0.6, xi: 0.125, plus: true };
        let a = shape_change_signal(&traj, &params).unwrap();
        let b = shape_change_signal(&traj.transformed(&w, &Pose::identity()), &params).unwrap();
        for (x, y) in a.d.iter().zip(&b.d) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn breakpoints_are_separated_local_maxima(
        signal in prop::collection::vec(0.0..1.0f64, 0..80),
        threshold in 0.0..1.0f64,
        gap in 0usize..6,
    ) {
        let found = segment(&signal, threshold, gap);
        for w in found.windows(2) {
            prop_assert!(w[1] - w[0] > gap);
        }
        for &i in &found {
            prop_assert!(i > 0 && i + 1 < signal.len());
            prop_assert!(signal[i] > threshold);
            prop_assert!(signal[i] >= signal[i - 1] && signal[i] > signal[i + 1]);
        }
        // The largest interior maximum above threshold is always kept.
        let top = (1..signal.len().saturating_sub(1))
            .filter(|&i| signal[i] > threshold && signal[i] >= signal[i - 1] && signal[i] > signal[i + 1])
            .max_by(|&i, &j| signal[i].total_cmp(&signal[j]).then(j.cmp(&i)));
        if let Some(t) = top {
            prop_assert!(found.contains(&t));
        }
    }
}
