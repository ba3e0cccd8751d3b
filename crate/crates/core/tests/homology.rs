mod common;

use hodge_core::chains::{boundary_at_scale, build_ambient, compute_thresholds, PointCloudSeries};
use hodge_core::datasets::{
    gen_double_circles, gen_dumbbell, gen_size_only, DumbbellVariant, GeneratorConfig,
    GeneratorKind,
};
use hodge_core::laplacian::extended_hodge;
use hodge_core::persistence::{alive_count, compute_h1_persistence};
use hodge_core::spectral::{zero_modes, ZeroTol};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(kind: GeneratorKind) -> PointCloudSeries {
    let mut cfg = GeneratorConfig::new(kind);
    cfg.n_points_per_feature = 6;
    cfg.middle_points = 5;
    cfg.n_times = 10;
    match kind {
        GeneratorKind::DoubleCirclesApproach => gen_double_circles(&cfg).unwrap(),
        GeneratorKind::SizeOnlyControl => gen_size_only(&cfg).unwrap(),
        GeneratorKind::DumbbellDeform => gen_dumbbell(&cfg, DumbbellVariant::Deform).unwrap(),
        _ => gen_dumbbell(&cfg, DumbbellVariant::Rotate).unwrap(),
    }
}

fn kernel_dim(points: &[[f64; 2]], d: f64) -> usize {
    let amb = build_ambient(points.len()).unwrap();
    let th = compute_thresholds(points, 0, &amb).unwrap();
    let l = extended_hodge(&boundary_at_scale(&th, &amb, d).unwrap());
    zero_modes(&l, ZeroTol::default()).unwrap().0.zero_dim
}

#[test]
fn hodge_kernel_matches_rank_nullity_on_generated_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in [
        GeneratorKind::DoubleCirclesApproach,
        GeneratorKind::SizeOnlyControl,
        GeneratorKind::DumbbellDeform,
        GeneratorKind::DumbbellRotate,
    ] {
        let series = small(kind);
        for _ in 0..15 {
            let j = rng.random_range(0..series.n_times());
            let d = rng.random_range(0.2..3.0);
            let pts = &series.frames()[j].points;
            assert_eq!(
                kernel_dim(pts, d),
                common::betti1(pts, d),
                "{kind:?} t#{j} d={d}"
            );
        }
    }
}

#[test]
fn alive_persistence_classes_match_rank_nullity() {
    let series = small(GeneratorKind::DoubleCirclesApproach);
    let amb = build_ambient(series.n_points()).unwrap();
    for (j, f) in series.frames().iter().enumerate().step_by(3) {
        let th = compute_thresholds(&f.points, j, &amb).unwrap();
        let dg = compute_h1_persistence(&th, &amb);
        for k in 0..25 {
            let d = 0.1 + 0.12 * k as f64;
            assert_eq!(
                alive_count(&dg, d),
                common::betti1(&f.points, d),
                "t#{j} d={d}"
            );
        }
    }
}

#[test]
fn square_and_hexagon_loops() {
    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    assert_eq!(common::betti1(&square, 1.0), 1);
    assert_eq!(kernel_dim(&square, 1.0), 1);
    // The diagonals fill the square.
    assert_eq!(kernel_dim(&square, 1.5), 0);
    let hex: Vec<[f64; 2]> = (0..6)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / 3.0;
            [a.cos(), a.sin()]
        })
        .collect();
    assert_eq!(kernel_dim(&hex, 1.05), 1);
    assert_eq!(kernel_dim(&hex, 0.9), 0);
}

#[test]
fn representatives_are_signed_cycles() {
    let series = small(GeneratorKind::DoubleCirclesApproach);
    let amb = build_ambient(series.n_points()).unwrap();
    let th = compute_thresholds(&series.frames()[0].points, 0, &amb).unwrap();
    let dg = compute_h1_persistence(&th, &amb);
    let b1 = amb.b1_full();
    for p in &dg.points {
        assert!((&b1 * &p.rep_cycle).norm() < 1e-12);
        assert!(p.rep_cycle.iter().all(|c| *c == 0.0 || c.abs() == 1.0));
    }
}

fn cloud() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5).prop_map(|(x, y)| [x, y]), 4..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_dimension_is_betti_number(pts in cloud(), d in 0.2f64..2.5) {
        prop_assert_eq!(kernel_dim(&pts, d), common::betti1(&pts, d));
    }

    #[test]
    fn persistence_counts_agree_with_betti(pts in cloud(), d in 0.2f64..2.5) {
        let amb = build_ambient(pts.len()).unwrap();
        let th = compute_thresholds(&pts, 0, &amb).unwrap();
        prop_assert_eq!(alive_count(&compute_h1_persistence(&th, &amb), d), common::betti1(&pts, d));
    }

    #[test]
    fn boundary_of_boundary_vanishes(pts in cloud(), d in 0.0f64..3.0) {
        let amb = build_ambient(pts.len()).unwrap();
        let th = compute_thresholds(&pts, 0, &amb).unwrap();
        let b = boundary_at_scale(&th, &amb, d).unwrap();
        prop_assert_eq!(b.chain_defect(), 0);
        prop_assert!((b.b1() * b.b2()).amax() == 0.0);
    }
}
