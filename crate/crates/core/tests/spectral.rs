mod common;

use hodge_core::chains::{boundary_at_scale, build_ambient, compute_thresholds};
use hodge_core::datasets::{add_noise, gen_double_circles, GeneratorConfig, GeneratorKind};
use hodge_core::laplacian::{extended_hodge, HodgeOperator, OperatorKind};
use hodge_core::linalg::{spectral_norm, sym_eigenvalues, sym_spectral_norm};
use hodge_core::spectral::{
    projection_from_basis, projection_perturbation, riesz_projection, stability_ratios, zero_modes,
    ZeroTol, DEFAULT_CONTOUR_NODES,
};
use hodge_core::Grid;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sym(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| vals[(i * n + j) % vals.len()]);
    (&a + a.transpose()) * 0.5
}

#[test]
fn riesz_agrees_with_eigenprojection_on_double_circles() {
    let mut cfg = GeneratorConfig::new(GeneratorKind::DoubleCirclesApproach);
    cfg.n_points_per_feature = 7;
    cfg.n_times = 8;
    let series = gen_double_circles(&cfg).unwrap();
    let amb = build_ambient(series.n_points()).unwrap();
    let mut checked = 0;
    for (j, f) in series.frames().iter().enumerate() {
        let th = compute_thresholds(&f.points, j, &amb).unwrap();
        for k in 0..6 {
            let d = 0.5 + 0.3 * k as f64;
            let l = extended_hodge(&boundary_at_scale(&th, &amb, d).unwrap());
            let Ok((s, basis)) = zero_modes(&l, ZeroTol::default()) else {
                continue;
            };
            let p = projection_from_basis(&basis).unwrap();
            let r = riesz_projection(&l, s.gap, DEFAULT_CONTOUR_NODES).unwrap();
            assert!(sym_spectral_norm(&(&p.p - &r.p)) < 1e-6, "t#{j} d={d}");
            assert_eq!(r.rank, s.zero_dim);
            let oracle = common::dense_kernel_projection(&l.matrix, 1e-8);
            assert!((&p.p - oracle).norm() < 1e-8);
            checked += 1;
        }
    }
    assert!(checked >= 40);
}

#[test]
fn spectral_norm_matches_power_iteration() {
    for seed in 0..5u64 {
        let vals: Vec<f64> = (0..17)
            .map(|i| ((i as f64 + 1.3) * (seed as f64 + 2.1)).sin())
            .collect();
        let a = DMatrix::from_fn(9, 6, |i, j| vals[(i * 6 + j) % 17]);
        assert!((spectral_norm(&a) - common::power_norm(&a, 2000)).abs() < 1e-8);
        let s = sym(8, &vals);
        assert!((sym_spectral_norm(&s) - common::power_norm(&s, 2000)).abs() < 1e-8);
    }
}

#[test]
fn perturbation_of_a_known_rotation() {
    // Kernel spanned by e1 against the same line rotated by θ: ‖P − P̃‖ = sin θ.
    let theta = 0.1f64;
    let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let (c, s) = (theta.cos(), theta.sin());
    let pt = DMatrix::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]);
    let r = projection_perturbation(&p, &pt, 0.5, 1.0);
    assert!((r.proj_diff - s).abs() < 1e-14);
    assert!(r.holds);
}

#[test]
fn unperturbed_family_has_zero_ratios() {
    let mut cfg = GeneratorConfig::new(GeneratorKind::DoubleCirclesApproach);
    cfg.n_points_per_feature = 6;
    cfg.n_times = 8;
    let series = gen_double_circles(&cfg).unwrap();
    let same = add_noise(&series, 0.0, 1).unwrap();
    assert_eq!(series, same);
    let amb = build_ambient(series.n_points()).unwrap();
    let th: Vec<_> = series
        .frames()
        .iter()
        .enumerate()
        .map(|(j, f)| compute_thresholds(&f.points, j, &amb).unwrap())
        .collect();
    let ds = [0.8, 0.9, 1.0, 1.1];
    let g = Grid::from_fn(ds.len(), th.len(), |i, j| {
        extended_hodge(&boundary_at_scale(&th[j], &amb, ds[i]).unwrap())
    });
    let rep = stability_ratios(&g, &g, ZeroTol::default(), 1e-4, 0.1, 1.0 / 7.0).unwrap();
    for p in rep.points.values() {
        if let Some(pp) = &p.pointwise {
            assert_eq!((pp.op_diff, pp.proj_diff), (0.0, 0.0));
        }
        if let Some(f) = p.curvature_diff {
            assert_eq!(f, 0.0);
        }
    }
}

#[test]
fn invariant_subspace_perturbation_leaves_kernel() {
    // δ vvᵀ with v orthogonal to the kernel and δ below half the gap.
    let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 2.0, 3.0]));
    let mut v = nalgebra::DVector::zeros(4);
    v[2] = 0.6;
    v[3] = 0.8;
    let lt = &l + &v * v.transpose() * 0.5;
    let op = |m: DMatrix<f64>| HodgeOperator {
        matrix: m,
        kind: OperatorKind::Extended,
    };
    let (_, k0) = zero_modes(&op(l.clone()), ZeroTol::default()).unwrap();
    let (_, k1) = zero_modes(&op(lt.clone()), ZeroTol::default()).unwrap();
    let p0 = &k0 * k0.transpose();
    let p1 = &k1 * k1.transpose();
    let r = projection_perturbation(&p0, &p1, sym_spectral_norm(&(&l - &lt)), 2.0);
    assert!(r.proj_diff < 1e-14 && r.ratio() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eigenvalues_are_sorted_and_sum_to_trace(vals in prop::collection::vec(-2.0f64..2.0, 5..30)) {
        let m = sym(6, &vals);
        let ev = sym_eigenvalues(&m);
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((ev.iter().sum::<f64>() - m.trace()).abs() < 1e-10);
    }

    #[test]
    fn projection_bound_holds_for_random_perturbations(vals in prop::collection::vec(-1.0f64..1.0, 16), scale in 1e-4f64..0.2) {
        // Kernel of dimension two, gap one.
        let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0, 2.0]));
        let e = sym(4, &vals) * scale;
        let lt = &l + &e;
        let op = |m: DMatrix<f64>| HodgeOperator { matrix: m, kind: OperatorKind::Extended };
        let (_, k0) = zero_modes(&op(l.clone()), ZeroTol::Absolute(1e-8)).unwrap();
        let ev = sym_eigenvalues(&lt);
        prop_assume!(ev[1] < 0.3 && ev[2] > 0.7);
        // Spectral projection of the two smallest eigenvalues of the perturbed operator.
        let eig = nalgebra::SymmetricEigen::new(lt.clone());
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut p1 = DMatrix::zeros(4, 4);
        for &k in &idx[..2] {
            let u = eig.eigenvectors.column(k);
            p1 += &u * u.transpose();
        }
        let r = projection_perturbation(&(&k0 * k0.transpose()), &p1, sym_spectral_norm(&e), 1.0);
        prop_assert!(r.holds, "{r:?}");
    }
}
