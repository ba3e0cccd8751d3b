use hodge_core::persistence::{PersistenceDiagram, PersistencePoint};
use hodge_core::tracking::{holonomy_guided_match, pair_drift, pd_drift, successive_match};
use hodge_core::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn point(b: f64, d: f64) -> PersistencePoint {
    PersistencePoint {
        birth: b,
        death: d,
        rep_cycle: DVector::zeros(1),
        birth_edge: 0,
        death_triangle: None,
    }
}

/// Diagram with points sorted the way persistence returns them.
fn diagram(j: usize, pts: &[[f64; 2]]) -> PersistenceDiagram {
    let mut points: Vec<PersistencePoint> = pts.iter().map(|p| point(p[0], p[1])).collect();
    points.sort_by(|a, b| {
        b.lifetime()
            .total_cmp(&a.lifetime())
            .then(a.birth.total_cmp(&b.birth))
    });
    PersistenceDiagram {
        time_index: j,
        points,
    }
}

#[test]
fn stationary_diagrams_never_swap() {
    let dgs: Vec<_> = (0..6)
        .map(|j| diagram(j, &[[0.1, 2.0], [0.3, 1.0]]))
        .collect();
    let t = successive_match(&dgs).unwrap();
    assert_eq!(t.swap_count(), 0);
    assert!(t.margins.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn points_passing_through_each_other_bounce() {
    // a runs from A to B and b from B to A. Straight-line trajectories meeting
    // between samples always make the identity cheaper, so nearest matching
    // relabels by lifetime instead of following the points.
    let (a, b) = ([0.0, 2.0], [0.4, 1.0]);
    let n = 11;
    let dgs: Vec<_> = (0..n)
        .map(|j| {
            let s = j as f64 / (n - 1) as f64 + 0.013;
            let pa = [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s];
            let pb = [b[0] + (a[0] - b[0]) * s, b[1] + (a[1] - b[1]) * s];
            diagram(j, &[pa, pb])
        })
        .collect();
    assert_eq!(successive_match(&dgs).unwrap().swap_count(), 0);
}

#[test]
fn lifetime_crossing_flags_every_later_step() {
    // Births stay apart while the deaths exchange order halfway. After the
    // crossing the raw lifetime order stays reversed against the tracked
    // labels, so the flag recurs on every later step.
    let n = 11;
    let dgs: Vec<_> = (0..n)
        .map(|j| {
            let s = j as f64 / (n - 1) as f64 + 0.013;
            diagram(j, &[[0.0, 2.0 - s], [0.4, 1.4 + s]])
        })
        .collect();
    let t = successive_match(&dgs).unwrap();
    let first = t.swap_flags.iter().position(|&s| s).unwrap();
    assert_eq!(first, 4, "flag on the transition into sample 5");
    assert!(t.swap_flags[first..].iter().all(|&s| s));
    assert_eq!(t.swap_count(), n - 1 - first);
    // The margin bottoms out on the step into the closest approach, which
    // here precedes the lifetime crossing.
    let argmin = |v: &[f64]| (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    assert_eq!(argmin(&t.margins) + 1, argmin(&t.separations));
    assert!(argmin(&t.separations) < first + 1);
    // Labels keep following the physical points.
    let last = t.labeled.last().unwrap();
    assert_eq!(last[0][0], 0.0);
}

#[test]
fn single_sample_inversion_is_one_swap() {
    // The lifetime order is reversed at exactly one sample.
    let n = 9;
    let dgs: Vec<_> = (0..n)
        .map(|j| {
            let death = if j == 4 { 1.52 } else { 1.45 };
            diagram(j, &[[0.0, 1.0], [0.5, death]])
        })
        .collect();
    let t = successive_match(&dgs).unwrap();
    assert_eq!(t.swap_count(), 1);
    assert!(t.swap_flags[3]);
    assert_eq!(t.labeled[4][0], [0.0, 1.0]);
}

#[test]
fn short_diagrams_are_rejected() {
    let dgs = vec![
        diagram(0, &[[0.0, 1.0], [0.0, 2.0]]),
        diagram(1, &[[0.0, 1.0]]),
    ];
    assert!(matches!(
        successive_match(&dgs),
        Err(Error::ShortDiagram {
            time_index: 1,
            found: 1
        })
    ));
    let inf = vec![diagram(0, &[[0.0, f64::INFINITY], [0.0, 2.0]])];
    assert!(matches!(
        successive_match(&inf),
        Err(Error::ShortDiagram {
            time_index: 0,
            found: 1
        })
    ));
}

#[test]
fn guided_match_follows_the_transport() {
    let dgs: Vec<_> = (0..5)
        .map(|j| diagram(j, &[[0.1, 2.0], [0.3, 1.0]]))
        .collect();
    let id = vec![DMatrix::identity(2, 2); 4];
    let g = holonomy_guided_match(&dgs, &id).unwrap();
    assert_eq!(g.track_error, 0.0);
    let mut steps = id.clone();
    steps[1] = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let g = holonomy_guided_match(&dgs, &steps).unwrap();
    assert_eq!(g.relabeled[1], g.relabeled[0]);
    assert!(g.relabeled[2..].iter().all(|p| p[0] == [0.3, 1.0]));
    assert!(g.swap_likeness[1] > 0.0 && g.track_error > 0.0);
    assert!(matches!(
        holonomy_guided_match(&dgs, &[DMatrix::identity(3, 3)]),
        Err(Error::UnsupportedRank(3))
    ));
}

#[test]
fn drift_examples() {
    let base: Vec<_> = (0..4)
        .map(|j| diagram(j, &[[0.1, 2.0], [0.3, 1.0]]))
        .collect();
    assert_eq!(pd_drift(&base, &base).unwrap().mean, 0.0);
    let shifted: Vec<_> = (0..4)
        .map(|j| diagram(j, &[[0.35, 2.0], [0.55, 1.0]]))
        .collect();
    assert!((pd_drift(&base, &shifted).unwrap().mean - 0.25).abs() < 1e-12);
    let p = [[0.1, 2.0], [0.3, 1.0]];
    assert_eq!(pair_drift(&p, &[p[1], p[0]]), 0.0);
}

fn pair() -> impl Strategy<Value = [[f64; 2]; 2]> {
    ((-2.0f64..2.0, -2.0f64..2.0), (-2.0f64..2.0, -2.0f64..2.0))
        .prop_map(|(a, b)| [[a.0, a.1], [b.0, b.1]])
}

proptest! {
    #[test]
    fn drift_is_a_pseudometric(p in pair(), q in pair(), r in pair()) {
        prop_assert!((pair_drift(&p, &q) - pair_drift(&q, &p)).abs() < 1e-12);
        prop_assert_eq!(pair_drift(&p, &p), 0.0);
        prop_assert!(pair_drift(&p, &r) <= pair_drift(&p, &q) + pair_drift(&q, &r) + 1e-12);
    }

    #[test]
    fn labels_are_permutations_and_margins_nonnegative(path in prop::collection::vec(pair(), 2..12)) {
        let dgs: Vec<_> = path.iter().enumerate().map(|(j, p)| {
            let fix = |x: [f64; 2]| [x[0].min(x[1]), x[0].max(x[1]) + 0.01];
            diagram(j, &[fix(p[0]), fix(p[1])])
        }).collect();
        let t = successive_match(&dgs).unwrap();
        for (lab, dg) in t.labeled.iter().zip(&dgs) {
            let raw = [[dg.points[0].birth, dg.points[0].death], [dg.points[1].birth, dg.points[1].death]];
            prop_assert!(*lab == raw || *lab == [raw[1], raw[0]]);
        }
        prop_assert!(t.margins.iter().all(|&m| m >= 0.0));
    }
}
