//! Independent oracles shared by the integration tests. Nothing here calls
//! the boundary, Laplacian or eigen code under test.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

pub const PRIME: i64 = 1_000_000_007;

fn pow_mod(mut b: i64, mut e: i64) -> i64 {
    let mut r = 1;
    b = b.rem_euclid(PRIME);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

/// Rank over GF(p) by Gaussian elimination.
pub fn rank_mod_p(mut rows: Vec<Vec<i64>>) -> usize {
    let n_cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..n_cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][c].rem_euclid(PRIME) != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = pow_mod(rows[rank][c], PRIME - 2);
        for x in rows[rank].iter_mut() {
            *x = x.rem_euclid(PRIME) * inv % PRIME;
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][c].rem_euclid(PRIME) != 0 {
                let f = rows[r][c].rem_euclid(PRIME);
                for k in c..n_cols {
                    rows[r][k] = (rows[r][k] - f * rows[rank][k]).rem_euclid(PRIME);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// First Betti number of the Rips complex at scale `d` by rank–nullity:
/// `β1 = #edges − rank ∂1 − rank ∂2`.
pub fn betti1(points: &[[f64; 2]], d: f64) -> usize {
    let n = points.len();
    let mut edge_id = HashMap::new();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if dist(points[i], points[j]) <= d {
                edge_id.insert((i, j), edges.len());
                edges.push((i, j));
            }
        }
    }
    let mut d1 = vec![vec![0i64; edges.len()]; n];
    for (e, &(i, j)) in edges.iter().enumerate() {
        d1[i][e] = -1;
        d1[j][e] = 1;
    }
    let mut d2_cols = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if let (Some(&ij), Some(&ik), Some(&jk)) = (
                    edge_id.get(&(i, j)),
                    edge_id.get(&(i, k)),
                    edge_id.get(&(j, k)),
                ) {
                    d2_cols.push([(jk, 1), (ik, -1), (ij, 1)]);
                }
            }
        }
    }
    // Rank of ∂2 via its transpose: one row per triangle.
    let d2t: Vec<Vec<i64>> = d2_cols
        .iter()
        .map(|col| {
            let mut row = vec![0i64; edges.len()];
            for &(e, s) in col {
                row[e] = s;
            }
            row
        })
        .collect();
    edges.len() - rank_mod_p(d1) - rank_mod_p(d2t)
}

/// Kernel projection of a symmetric matrix from one dense eigensolve.
pub fn dense_kernel_projection(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let mut p = DMatrix::zeros(m.nrows(), m.nrows());
    for (k, &v) in e.eigenvalues.iter().enumerate() {
        if v.abs() <= tol {
            let u = e.eigenvectors.column(k);
            p += &u * u.transpose();
        }
    }
    p
}

/// Spectral norm by power iteration on `AᵀA`.
pub fn power_norm(a: &DMatrix<f64>, iters: usize) -> f64 {
    let n = a.ncols();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i * 7919) % 13) as f64);
    v /= v.norm();
    let ata = a.transpose() * a;
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = &ata * &v;
        lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = w / lambda;
    }
    lambda.sqrt()
}

/// Orthonormal basis of the plane orthogonal to a unit vector in ℝ³, rotated
/// within the plane by `angle`.
pub fn tangent_frame(n: [f64; 3], angle: f64) -> DMatrix<f64> {
    let nv = nalgebra::Vector3::from(n).normalize();
    let helper = if nv.x.abs() < 0.9 {
        nalgebra::Vector3::x()
    } else {
        nalgebra::Vector3::y()
    };
    let e1 = (helper - nv * nv.dot(&helper)).normalize();
    let e2 = nv.cross(&e1);
    let (c, s) = (angle.cos(), angle.sin());
    let a = e1 * c + e2 * s;
    let b = -e1 * s + e2 * c;
    DMatrix::from_fn(3, 2, |r, col| if col == 0 { a[r] } else { b[r] })
}

pub fn sphere(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Random orthogonal matrix from a seeded QR.
pub fn random_orthogonal(k: usize, seed: u64) -> DMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}
