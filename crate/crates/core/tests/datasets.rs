mod common;

use hodge_core::chains::PointCloudSeries;
use hodge_core::datasets::{
    add_noise, gen_double_circles, gen_dumbbell, gen_size_only, gen_vineyard_like, DumbbellVariant,
    GeneratorConfig, GeneratorKind,
};

fn generate(kind: GeneratorKind) -> PointCloudSeries {
    let cfg = GeneratorConfig::new(kind);
    match kind {
        GeneratorKind::DoubleCirclesApproach => gen_double_circles(&cfg),
        GeneratorKind::SizeOnlyControl => gen_size_only(&cfg),
        GeneratorKind::DumbbellDeform => gen_dumbbell(&cfg, DumbbellVariant::Deform),
        GeneratorKind::DumbbellRotate => gen_dumbbell(&cfg, DumbbellVariant::Rotate),
        GeneratorKind::VineyardLike => unreachable!(),
    }
    .unwrap()
}

const KINDS: [GeneratorKind; 4] = [
    GeneratorKind::DoubleCirclesApproach,
    GeneratorKind::SizeOnlyControl,
    GeneratorKind::DumbbellDeform,
    GeneratorKind::DumbbellRotate,
];

#[test]
fn series_close_the_period() {
    for kind in KINDS {
        let s = generate(kind);
        let (first, last) = (&s.frames()[0], s.frames().last().unwrap());
        assert_eq!(first.time, 0.0);
        assert!((last.time - 1.0).abs() < 1e-15);
        for (p, q) in first.points.iter().zip(&last.points) {
            assert!(
                (p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12,
                "{kind:?}"
            );
        }
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    for kind in KINDS {
        assert_eq!(generate(kind), generate(kind));
    }
    let mut cfg = GeneratorConfig::new(GeneratorKind::DoubleCirclesApproach);
    let a = gen_double_circles(&cfg).unwrap();
    cfg.seed += 1;
    assert_ne!(a, gen_double_circles(&cfg).unwrap());
    let s = generate(GeneratorKind::DoubleCirclesApproach);
    assert_eq!(
        add_noise(&s, 0.01, 3).unwrap(),
        add_noise(&s, 0.01, 3).unwrap()
    );
    assert_ne!(
        add_noise(&s, 0.01, 3).unwrap(),
        add_noise(&s, 0.01, 4).unwrap()
    );
    assert_eq!(add_noise(&s, 0.0, 3).unwrap(), s);
}

#[test]
fn loops_are_visible_at_moderate_scale() {
    // Two circles, or three loops for the dumbbell, at the start of the period.
    for (kind, d, b1) in [
        (GeneratorKind::DoubleCirclesApproach, 0.7, 2),
        (GeneratorKind::SizeOnlyControl, 0.7, 2),
        (GeneratorKind::DumbbellDeform, 0.45, 3),
        (GeneratorKind::DumbbellRotate, 0.45, 3),
    ] {
        assert_eq!(
            common::betti1(&generate(kind).frames()[0].points, d),
            b1,
            "{kind:?}"
        );
    }
}

#[test]
fn csv_round_trips() {
    let s = generate(GeneratorKind::DumbbellDeform);
    let text = s.to_csv();
    assert!(text.starts_with("t,x,y\n"));
    assert_eq!(PointCloudSeries::from_csv(text.as_bytes()).unwrap(), s);
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut cfg = GeneratorConfig::new(GeneratorKind::DoubleCirclesApproach);
    cfg.n_times = 4;
    assert!(gen_double_circles(&cfg).is_err());
    let mut cfg = GeneratorConfig::new(GeneratorKind::DumbbellDeform);
    cfg.outer_offset = 1.0;
    assert!(gen_dumbbell(&cfg, DumbbellVariant::Deform).is_err());
    let mut cfg = GeneratorConfig::new(GeneratorKind::SizeOnlyControl);
    cfg.size_amplitude = 0.5;
    assert!(gen_size_only(&cfg).is_err());
}

#[test]
fn vineyard_vines_are_periodic_and_cross() {
    let mut cfg = GeneratorConfig::new(GeneratorKind::VineyardLike);
    cfg.n_times = 41;
    let v = gen_vineyard_like(&cfg).unwrap();
    for vine in &v.vines {
        assert_eq!(vine.len(), 41);
        assert!(vine.iter().all(|p| p[1] > p[0]));
    }
    // The three vines return to each other's starting points.
    let starts: Vec<[f64; 2]> = v.vines.iter().map(|x| x[0]).collect();
    for vine in &v.vines {
        let end = *vine.last().unwrap();
        assert!(starts
            .iter()
            .any(|s| (s[0] - end[0]).abs() < 1e-12 && (s[1] - end[1]).abs() < 1e-12));
    }
    assert!(v
        .frames
        .iter()
        .all(|f| (f.transpose() * f - nalgebra::DMatrix::identity(3, 3)).norm() < 1e-12));
}
