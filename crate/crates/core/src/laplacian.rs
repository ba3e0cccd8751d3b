//! Degree-one Hodge operators on the ambient edge space.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chains::{AmbientChainSpace, BoundaryMatrices, FiltrationFrame, TRIANGLE_FACE_SIGNS};
use crate::error::{invalid, Error, Result};
use crate::linalg::sym_spectral_norm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OperatorKind {
    Extended,
    Smooth { epsilon: f64, mu: f64 },
}

/// Symmetric positive-semidefinite operator on the ambient edge space.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeOperator {
    pub matrix: DMatrix<f64>,
    pub kind: OperatorKind,
}

impl HodgeOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Activation strengths of every simplex at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub w_vertices: Vec<f64>,
    pub w_edges: Vec<f64>,
    pub w_triangles: Vec<f64>,
}

/// Natural Laplacian on active edges, identity on inactive ones.
pub fn extended_hodge(bnd: &BoundaryMatrices<'_>) -> HodgeOperator {
    let amb = bnd.ambient();
    let m = amb.n_edges();
    let mut l = DMatrix::zeros(m, m);
    let mut incident: Vec<Vec<(usize, f64)>> = vec![Vec::new(); amb.vertex_count()];
    for (e, &(i, j)) in amb.edges().iter().enumerate() {
        if bnd.active_edges[e] {
            incident[i].push((e, -1.0));
            incident[j].push((e, 1.0));
        } else {
            l[(e, e)] = 1.0;
        }
    }
    for star in &incident {
        for &(e, se) in star {
            for &(f, sf) in star {
                l[(e, f)] += se * sf;
            }
        }
    }
    for (t, faces) in amb.triangle_faces().iter().enumerate() {
        if !bnd.active_triangles[t] {
            continue;
        }
        for (a, sa) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
            for (b, sb) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
                l[(*a, *b)] += sa * sb;
            }
        }
    }
    HodgeOperator {
        matrix: l,
        kind: OperatorKind::Extended,
    }
}

/// `1 / (1 + exp(-s/ε))`, evaluated without overflow.
pub fn sigmoid_weight(s: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!(
            "sigmoid width must be positive, got {epsilon}"
        )));
    }
    Ok(sigmoid(s / epsilon))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn weights(
    thresh: &FiltrationFrame,
    n_vertices: usize,
    d: f64,
    epsilon: f64,
) -> Result<WeightVector> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!(
            "sigmoid width must be positive, got {epsilon}"
        )));
    }
    Ok(WeightVector {
        w_vertices: vec![1.0; n_vertices],
        w_edges: thresh
            .edge_thresholds
            .iter()
            .map(|r| sigmoid((d - r) / epsilon))
            .collect(),
        w_triangles: thresh
            .triangle_thresholds
            .iter()
            .map(|r| sigmoid((d - r) / epsilon))
            .collect(),
    })
}

/// One-thousandth of the median pairwise distance.
pub fn default_epsilon(thresh: &FiltrationFrame) -> f64 {
    let mut r = thresh.edge_thresholds.clone();
    r.sort_by(f64::total_cmp);
    let n = r.len();
    let med = if n % 2 == 1 {
        r[n / 2]
    } else {
        0.5 * (r[n / 2 - 1] + r[n / 2])
    };
    1e-3 * med
}

fn check_smooth_params(
    thresh: &FiltrationFrame,
    amb: &AmbientChainSpace,
    epsilon: f64,
    mu: f64,
) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid(format!("mu must be positive, got {mu}")));
    }
    if thresh.edge_thresholds.len() != amb.n_edges()
        || thresh.triangle_thresholds.len() != amb.n_triangles()
    {
        return Err(Error::ShapeMismatch {
            expected: format!("{} edge thresholds", amb.n_edges()),
            found: format!("{}", thresh.edge_thresholds.len()),
        });
    }
    Ok(())
}

/// Sigmoid-weighted Hodge operator
/// `∂₁ᵀ∂₁ + ∂₂∂₂ᵀ + μ(I − W₁)` with `∂₁ = B1 W₁^{1/2}` and
/// `∂₂ = W₁^{1/2} B2 W₂^{1/2}` on the full complex.
pub fn smooth_hodge(
    thresh: &FiltrationFrame,
    amb: &AmbientChainSpace,
    d: f64,
    epsilon: f64,
    mu: f64,
) -> Result<HodgeOperator> {
    check_smooth_params(thresh, amb, epsilon, mu)?;
    let s_e: Vec<f64> = thresh
        .edge_thresholds
        .iter()
        .map(|r| (d - r) / epsilon)
        .collect();
    let a: Vec<f64> = s_e.iter().map(|&s| sigmoid(s).sqrt()).collect();
    let w_t: Vec<f64> = thresh
        .triangle_thresholds
        .iter()
        .map(|r| sigmoid((d - r) / epsilon))
        .collect();
    let m = amb.n_edges();
    let mut l = DMatrix::zeros(m, m);
    for (star, sign) in vertex_stars(amb) {
        for (x, &e) in star.iter().enumerate() {
            for (y, &f) in star.iter().enumerate() {
                l[(e, f)] += sign[x] * sign[y] * a[e] * a[f];
            }
        }
    }
    for (t, faces) in amb.triangle_faces().iter().enumerate() {
        if w_t[t] == 0.0 {
            continue;
        }
        for (&p, sp) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
            for (&q, sq) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
                l[(p, q)] += sp * sq * a[p] * a[q] * w_t[t];
            }
        }
    }
    for e in 0..m {
        // 1 − ρ(s) = ρ(−s) keeps full relative precision for nearly active edges.
        l[(e, e)] += mu * sigmoid(-s_e[e]);
    }
    let sym = (&l + l.transpose()) * 0.5;
    Ok(HodgeOperator {
        matrix: sym,
        kind: OperatorKind::Smooth { epsilon, mu },
    })
}

/// Exact derivative of [`smooth_hodge`] with respect to the scale `d`.
pub fn smooth_hodge_d_derivative(
    thresh: &FiltrationFrame,
    amb: &AmbientChainSpace,
    d: f64,
    epsilon: f64,
    mu: f64,
) -> Result<DMatrix<f64>> {
    check_smooth_params(thresh, amb, epsilon, mu)?;
    let s_e: Vec<f64> = thresh
        .edge_thresholds
        .iter()
        .map(|r| (d - r) / epsilon)
        .collect();
    let a: Vec<f64> = s_e.iter().map(|&s| sigmoid(s).sqrt()).collect();
    // d√ρ/dd = √ρ · ρ(−s) / (2ε)
    let da: Vec<f64> = s_e
        .iter()
        .map(|&s| sigmoid(s).sqrt() * sigmoid(-s) / (2.0 * epsilon))
        .collect();
    let s_t: Vec<f64> = thresh
        .triangle_thresholds
        .iter()
        .map(|r| (d - r) / epsilon)
        .collect();
    let w_t: Vec<f64> = s_t.iter().map(|&s| sigmoid(s)).collect();
    let dw_t: Vec<f64> = s_t
        .iter()
        .map(|&s| sigmoid(s) * sigmoid(-s) / epsilon)
        .collect();
    let m = amb.n_edges();
    let mut dl = DMatrix::zeros(m, m);
    for (star, sign) in vertex_stars(amb) {
        for (x, &e) in star.iter().enumerate() {
            for (y, &f) in star.iter().enumerate() {
                dl[(e, f)] += sign[x] * sign[y] * (da[e] * a[f] + a[e] * da[f]);
            }
        }
    }
    for (t, faces) in amb.triangle_faces().iter().enumerate() {
        for (&p, sp) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
            for (&q, sq) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
                dl[(p, q)] +=
                    sp * sq * ((da[p] * a[q] + a[p] * da[q]) * w_t[t] + a[p] * a[q] * dw_t[t]);
            }
        }
    }
    for e in 0..m {
        dl[(e, e)] -= mu * sigmoid(s_e[e]) * sigmoid(-s_e[e]) / epsilon;
    }
    Ok((&dl + dl.transpose()) * 0.5)
}

/// Edges incident to each vertex with their incidence signs.
fn vertex_stars(amb: &AmbientChainSpace) -> Vec<(Vec<usize>, Vec<f64>)> {
    let mut stars = vec![(Vec::new(), Vec::new()); amb.vertex_count()];
    for (e, &(i, j)) in amb.edges().iter().enumerate() {
        stars[i].0.push(e);
        stars[i].1.push(-1.0);
        stars[j].0.push(e);
        stars[j].1.push(1.0);
    }
    stars
}

/// Spectral norm `‖L − L̃‖`.
pub fn perturb_operator(l: &HodgeOperator, lt: &HodgeOperator) -> Result<f64> {
    if l.matrix.shape() != lt.matrix.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", l.matrix.shape()),
            found: format!("{:?}", lt.matrix.shape()),
        });
    }
    Ok(sym_spectral_norm(&(&l.matrix - &lt.matrix)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{boundary_at_scale, build_ambient, compute_thresholds};

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid_weight(0.0, 0.1).unwrap(), 0.5);
        assert!((sigmoid_weight(0.1, 0.1).unwrap() - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(sigmoid_weight(1e6, 1.0).unwrap(), 1.0);
        assert_eq!(sigmoid_weight(-1e6, 1.0).unwrap(), 0.0);
        assert!(sigmoid_weight(1.0, 0.0).is_err());
        assert!(sigmoid_weight(1.0, -1.0).is_err());
    }

    #[test]
    fn filled_triangle_operator_is_three_times_identity() {
        let amb = build_ambient(3).unwrap();
        let f = compute_thresholds(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]], 0, &amb).unwrap();
        let bnd = boundary_at_scale(&f, &amb, 2.0).unwrap();
        let l = extended_hodge(&bnd);
        // B1ᵀB1 + B2B2ᵀ = 3I on a filled triangle.
        assert!((l.matrix - DMatrix::identity(3, 3) * 3.0).norm() < 1e-15);
    }

    #[test]
    fn inactive_edges_are_identity_rows() {
        let amb = build_ambient(4).unwrap();
        let f =
            compute_thresholds(&[[0.0, 0.0], [1.0, 0.0], [5.0, 0.0], [5.0, 1.0]], 0, &amb).unwrap();
        let bnd = boundary_at_scale(&f, &amb, 1.0).unwrap();
        let l = extended_hodge(&bnd);
        for (e, &act) in bnd.active_edges.iter().enumerate() {
            if !act {
                for c in 0..amb.n_edges() {
                    assert_eq!(l.matrix[(e, c)], if c == e { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn shift_perturbation_norm() {
        let l = HodgeOperator {
            matrix: DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]),
            kind: OperatorKind::Extended,
        };
        let lt = HodgeOperator {
            matrix: &l.matrix + DMatrix::identity(2, 2) * 0.1,
            kind: OperatorKind::Extended,
        };
        assert!((perturb_operator(&l, &lt).unwrap() - 0.1).abs() < 1e-14);
        assert_eq!(perturb_operator(&l, &l).unwrap(), 0.0);
    }
}
