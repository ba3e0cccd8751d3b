//! Small dense linear-algebra helpers shared by the spectral and transport code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Spectral norm of a symmetric matrix: the largest absolute eigenvalue.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    sym_eigenvalues(m)
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest singular value of an arbitrary matrix, from the smaller Gram
/// matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.ncols() <= m.nrows() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    sym_spectral_norm(&gram).sqrt()
}

/// Ascending eigenvalues of a symmetric matrix, computed block by block.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = Vec::with_capacity(m.nrows());
    for block in sparsity_blocks(m) {
        if block.len() == 1 {
            vals.push(m[(block[0], block[0])]);
        } else {
            let sub = principal_submatrix(m, &block);
            vals.extend(sub.symmetric_eigenvalues().iter().copied());
        }
    }
    vals.sort_by(f64::total_cmp);
    vals
}

/// Connected components of the graph whose edges are the exactly nonzero
/// off-diagonal entries. A symmetric matrix is block diagonal along these
/// index sets, so each block can be diagonalized on its own.
///
/// Components are listed by smallest index, and indices inside a component are
/// ascending.
pub fn sparsity_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in (j + 1)..n {
            if m[(i, j)] != 0.0 || m[(j, i)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

pub fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Full symmetric eigendecomposition assembled from independent blocks.
///
/// Eigenpairs are returned sorted by eigenvalue; ties keep block order, which
/// makes the output deterministic.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(n);
    for block in sparsity_blocks(m) {
        if block.len() == 1 {
            let mut v = DVector::zeros(n);
            v[block[0]] = 1.0;
            pairs.push((m[(block[0], block[0])], v));
            continue;
        }
        let eig = SymmetricEigen::new(principal_submatrix(m, &block));
        for c in 0..block.len() {
            let mut v = DVector::zeros(n);
            for (a, &row) in block.iter().enumerate() {
                v[row] = eig.eigenvectors[(a, c)];
            }
            pairs.push((eig.eigenvalues[c], v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vals = pairs.iter().map(|p| p.0).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| pairs[c].1[r]);
    (vals, vecs)
}

/// `‖ΨᵀΨ − I‖_F`.
pub fn orthonormality_defect(psi: &DMatrix<f64>) -> f64 {
    let g = psi.transpose() * psi;
    (g - DMatrix::identity(psi.ncols(), psi.ncols())).norm()
}

/// Orthogonal polar factor `Q` of a square `M = QH`, with the smallest
/// singular value of `M`.
///
/// Uses the scaled Newton iteration `X ← (γX + X⁻ᵀ/γ)/2`, which is
/// self-correcting and converges quadratically. The dynamic-size SVD in
/// nalgebra 0.35 returns factors that do not reconstruct some well-conditioned
/// 3×3 inputs, so it is avoided here.
pub fn polar_factor(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square overlap matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if m.is_empty() {
        return Ok((DMatrix::zeros(0, 0), f64::INFINITY));
    }
    let gram_min = (m.transpose() * m)
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(*v));
    let sigma_min = gram_min.max(0.0).sqrt();
    let mut x = m.clone();
    for _ in 0..POLAR_MAX_ITERATIONS {
        let inv = x
            .clone()
            .try_inverse()
            .ok_or(Error::TransportBreakdown { sigma_min })?;
        let gamma = (inv.norm() / x.norm()).sqrt();
        let next = (&x * gamma + inv.transpose() / gamma) * 0.5;
        let delta = (&next - &x).norm();
        x = next;
        if delta <= 4.0 * f64::EPSILON * (m.nrows() as f64).sqrt() {
            return Ok((x, sigma_min));
        }
    }
    if orthonormality_defect(&x) > 1e-12 {
        return Err(Error::TransportBreakdown { sigma_min });
    }
    Ok((x, sigma_min))
}

const POLAR_MAX_ITERATIONS: usize = 100;

/// Modified Gram–Schmidt in column order. Returns `Err(index, residual norm)`
/// for the first column whose residual falls below `tol`.
pub fn gram_schmidt(
    cols: &[DVector<f64>],
    tol: f64,
) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let n = cols.first().map_or(0, |c| c.len());
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
    for (idx, c) in cols.iter().enumerate() {
        let mut v = c.clone();
        // Two passes keep the result orthonormal to roundoff.
        for _ in 0..2 {
            for q in &out {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let nv = v.norm();
        if nv < tol {
            return Err((idx, nv));
        }
        out.push(v / nv);
    }
    Ok(DMatrix::from_fn(n, out.len(), |r, c| out[c][r]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_split_disjoint_supports() {
        let mut m = DMatrix::<f64>::zeros(5, 5);
        m[(0, 3)] = 1.0;
        m[(3, 0)] = 1.0;
        m[(1, 2)] = -1.0;
        m[(2, 1)] = -1.0;
        assert_eq!(sparsity_blocks(&m), vec![vec![0, 3], vec![1, 2], vec![4]]);
    }

    #[test]
    fn block_eigen_matches_full_solver() {
        let mut m = DMatrix::<f64>::zeros(6, 6);
        let entries = [
            (0, 0, 2.0),
            (0, 4, 1.0),
            (4, 4, 3.0),
            (1, 1, 1.0),
            (2, 2, 5.0),
            (2, 5, -2.0),
            (5, 5, 1.0),
        ];
        for &(i, j, v) in &entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        let (vals, vecs) = sym_eigen(&m);
        let mut full: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        full.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&full) {
            assert!((a - b).abs() < 1e-12);
        }
        let recon =
            &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals.clone())) * vecs.transpose();
        assert!((recon - &m).norm() < 1e-12);
        assert!(orthonormality_defect(&vecs) < 1e-12);
    }

    #[test]
    fn polar_factor_of_an_overlap_nalgebra_svd_misses() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                -0.10135010317658712,
                -0.7682994155161668,
                0.5710710633364829,
                0.8951246247941863,
                0.07258703554944149,
                0.36960089035361576,
                0.4266575676598707,
                -0.42397341992892307,
                -0.6875595496609161,
            ],
        );
        let (q, s) = polar_factor(&m).unwrap();
        assert!(orthonormality_defect(&q) < 1e-14);
        // `H = QᵀM` is symmetric positive definite.
        let h = q.transpose() * &m;
        assert!((&h - h.transpose()).norm() < 1e-14);
        assert!(h.symmetric_eigenvalues().min() > 0.0);
        assert!((s - 0.8392425511419259).abs() < 1e-12);
    }

    #[test]
    fn polar_of_positive_diagonal_is_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let (q, s) = polar_factor(&m).unwrap();
        assert!((q - DMatrix::identity(2, 2)).norm() < 1e-14);
        assert!((s - 0.5).abs() < 1e-14);
    }
}
