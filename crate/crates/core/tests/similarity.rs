mod common;

use nalgebra::Matrix3;
use proptest::prelude::*;

use bilts::datasets::{generate_syn, MotionClass, SynConfig, TrajectoryRecord};
use bilts::descriptor::{FunctionalFrame, Mat63, ShapeDescriptor};
use bilts::reparam::{preprocess, ProgressType, ReparamConfig};
use bilts::se3::Pose;
use bilts::similarity::{
    aligned_matrix_distance, bilts_distance, bilts_plus_distance, dtw_align, matrix_distance, sv_summary,
    trajectory_distance, SvSummary, TrajectoryDistanceParams,
};
use bilts::BiltsError;
use common::rotation;

fn mat63() -> impl Strategy<Value = Mat63> {
    prop::array::uniform18(-2.0..2.0f64).prop_map(|v| Mat63::from_column_slice(&v))
}

fn rotate(y: &Mat63, r: &Matrix3<f64>) -> Mat63 {
    let mut out = *y;
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(r * y.fixed_view::<3, 3>(0, 0)));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(r * y.fixed_view::<3, 3>(3, 0)));
    out
}

fn descriptor(y: Mat63, m: usize, ds: f64) -> ShapeDescriptor {
    let frame = FunctionalFrame { pose: Pose::identity(), regularized: false, distance_clamped: false, singularity: None };
    ShapeDescriptor { y, m, ds, frame }
}

fn summaries() -> impl Strategy<Value = Vec<SvSummary>> {
    prop::collection::vec(mat63(), 1..25).prop_map(|v| v.iter().map(sv_summary).collect())
}

proptest! {
    #[test]
    fn injected_rotation_is_removed(y in mat63(), r in rotation(), l in 0.0..2.0f64) {
        let (d, found) = aligned_matrix_distance(&y, &rotate(&y, &r), l);
        prop_assert!(d < 1e-9 * y.amax().max(1.0), "{d}");
        if l > 0.1 {
            prop_assert!((found - r).amax() < 1e-6);
        }
    }

    #[test]
    fn alignment_never_increases_distance(a in mat63(), b in mat63(), l in 0.0..2.0f64) {
        let plain = matrix_distance(&a, &b, l);
        let (aligned, r) = aligned_matrix_distance(&a, &b, l);
        prop_assert!(aligned <= plain);
        prop_assert!(aligned >= 0.0);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        prop_assert!((r * r.transpose() - Matrix3::identity()).amax() < 1e-9);
    }

    #[test]
    fn distances_are_symmetric(a in mat63(), b in mat63(), l in 0.0..2.0f64) {
        let (da, db) = (descriptor(a, 3, 0.02), descriptor(b, 3, 0.02));
        prop_assert_eq!(bilts_distance(&da, &db, l).unwrap(), bilts_distance(&db, &da, l).unwrap());
        let (p, q) = (bilts_plus_distance(&da, &db, l).unwrap(), bilts_plus_distance(&db, &da, l).unwrap());
        prop_assert!((p - q).abs() <= 1e-12 * p.max(1.0));
    }

    #[test]
    fn plain_distance_obeys_triangle_inequality(a in mat63(), b in mat63(), c in mat63(), l in 0.0..2.0f64) {
        let ab = matrix_distance(&a, &b, l);
        let bc = matrix_distance(&b, &c, l);
        prop_assert!(matrix_distance(&a, &c, l) <= ab + bc + 1e-12);
    }

    #[test]
    fn zero_scale_ignores_rotational_rows(a in mat63(), b in mat63()) {
        let mut b2 = b;
        b2.fixed_view_mut::<3, 3>(0, 0).copy_from(&a.fixed_view::<3, 3>(0, 0));
        prop_assert_eq!(matrix_distance(&a, &b, 0.0), matrix_distance(&a, &b2, 0.0));
        prop_assert_eq!(matrix_distance(&a, &b, 0.0), (a.fixed_view::<3, 3>(3, 0) - b.fixed_view::<3, 3>(3, 0)).norm());
    }

    #[test]
    fn summaries_ignore_common_rotation(y in mat63(), r in rotation()) {
        let (s, t) = (sv_summary(&y), sv_summary(&rotate(&y, &r)));
        for (x, z) in s.upper.iter().chain(&s.lower).zip(t.upper.iter().chain(&t.lower)) {
            prop_assert!((x - z).abs() < 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn warping_path_is_monotone_and_complete(a in summaries(), b in summaries(), band in prop::option::of(0usize..6)) {
        let path = dtw_align(&a, &b, 0.5, band).unwrap();
        prop_assert_eq!(path.pairs[0], (0, 0));
        prop_assert_eq!(*path.pairs.last().unwrap(), (a.len() - 1, b.len() - 1));
        for w in path.pairs.windows(2) {
            let step = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            prop_assert!(matches!(step, (1, 1) | (1, 0) | (0, 1)), "{:?}", step);
        }
        prop_assert!(path.cost >= 0.0);
    }

    #[test]
    fn warping_a_sequence_onto_itself_is_diagonal(a in summaries()) {
        let path = dtw_align(&a, &a, 0.5, None).unwrap();
        prop_assert!(path.pairs.iter().all(|&(i, j)| i == j));
        prop_assert_eq!(path.cost, 0.0);
    }
}

#[test]
fn repeated_element_costs_one_extra_step() {
    let s = |v: f64| SvSummary { upper: [v, 0.0, 0.0], lower: [0.0; 3] };
    let a: Vec<SvSummary> = [0.0, 1.0, 2.0, 3.0].map(s).to_vec();
    let b: Vec<SvSummary> = [0.0, 1.0, 1.0, 2.0, 3.0].map(s).to_vec();
    let path = dtw_align(&a, &b, 1.0, None).unwrap();
    assert_eq!(path.cost, 0.0);
    let second_only = path.pairs.windows(2).filter(|w| w[1].0 == w[0].0).count();
    assert_eq!(second_only, 1);
    assert_eq!(path.pairs.len(), 5);
}

#[test]
fn descriptors_of_different_scale_are_rejected() {
    let y = Mat63::identity();
    let r = bilts_distance(&descriptor(y, 3, 0.02), &descriptor(y, 4, 0.02), 0.5);
    assert!(matches!(r, Err(BiltsError::MismatchedScale { .. })));
    let r = bilts_plus_distance(&descriptor(y, 3, 0.02), &descriptor(y, 3, 0.03), 0.5);
    assert!(matches!(r, Err(BiltsError::MismatchedScale { .. })));
    assert!(bilts_distance(&descriptor(y, 3, 0.02), &descriptor(y, 3, 0.02), -1.0).is_err());
}

fn find<'a>(recs: &'a [TrajectoryRecord], class: MotionClass, context: &str) -> &'a TrajectoryRecord {
    recs.iter().find(|r| r.class == class.name() && r.context == context && r.trial == 1).unwrap()
}

#[test]
fn circles_are_closer_to_circles_than_to_lines() {
    let cfg = SynConfig {
        classes: vec![MotionClass::Linear, MotionClass::Circular],
        trials_per_context: 1,
        noise_std: [0.0, 0.0],
        ..SynConfig::default()
    };
    let recs = generate_syn(&cfg).unwrap();
    let rc = ReparamConfig { progress: ProgressType::ScrewPath { l: 0.5 }, n_out: 50, sigma: 2.0 };
    let geo = |r: &TrajectoryRecord| preprocess(&r.temporal().unwrap(), &rc).unwrap();
    let params = TrajectoryDistanceParams::bilts_plus(0.5, 0.06);
    let circle = geo(find(&recs, MotionClass::Circular, "original"));
    let moved_circle = geo(find(&recs, MotionClass::Circular, "changed_references_1"));
    let line = geo(find(&recs, MotionClass::Linear, "changed_references_2"));

    let same = trajectory_distance(&circle, &moved_circle, &params).unwrap();
    let other = trajectory_distance(&circle, &line, &params).unwrap();
    assert!(same < 1e-6, "{same}");
    // A circle of radius r has curvature 1 / r; a line has none. The
    // descriptor's translational block carries the change of direction of
    // the unit-speed velocity over the window, which is bounded below by
    // the curvature times the window.
    assert!(other > 0.01, "{other}");
}
