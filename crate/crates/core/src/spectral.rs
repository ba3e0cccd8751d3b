//! Zero-mode extraction, regular-point certification, the contour-integral
//! projection oracle, and perturbation bounds for kernel projections.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::laplacian::HodgeOperator;
use crate::linalg::{
    orthonormality_defect, principal_submatrix, sparsity_blocks, sym_eigenvalues, sym_spectral_norm,
};

/// Eigenvalues within this factor above the zero tolerance are too close to
/// call, and the kernel is reported as ambiguous.
pub const AMBIGUITY_FACTOR: f64 = 10.0;

pub const DEFAULT_GAMMA_MIN: f64 = 1e-4;
pub const DEFAULT_CONTOUR_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ZeroTol {
    /// Fixed cutoff.
    Absolute(f64),
    /// Cutoff relative to `max(λ_max, 1)`.
    Relative(f64),
}

impl Default for ZeroTol {
    fn default() -> Self {
        ZeroTol::Relative(1e-8)
    }
}

impl ZeroTol {
    pub fn resolve(self, lambda_max: f64) -> f64 {
        match self {
            ZeroTol::Absolute(t) => t,
            ZeroTol::Relative(r) => r * lambda_max.max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub zero_dim: usize,
    /// Smallest eigenvalue above the tolerance; infinite when there is none.
    pub gap: f64,
    pub zero_tol: f64,
}

/// Eigen-decomposes `L` and returns its kernel as an orthonormal `m×k` basis.
///
/// The decomposition runs independently on every block of the sparsity
/// pattern, so identity rows of inactive edges cost nothing.
pub fn zero_modes(l: &HodgeOperator, tol: ZeroTol) -> Result<(SpectralSummary, DMatrix<f64>)> {
    let m = l.dim();
    let blocks = sparsity_blocks(&l.matrix);
    let mut eigen: Vec<(Vec<usize>, Vec<f64>, Option<DMatrix<f64>>)> =
        Vec::with_capacity(blocks.len());
    let mut all: Vec<f64> = Vec::with_capacity(m);
    for block in blocks {
        if block.len() == 1 {
            let v = l.matrix[(block[0], block[0])];
            all.push(v);
            eigen.push((block, vec![v], None));
        } else {
            let e = SymmetricEigen::new(principal_submatrix(&l.matrix, &block));
            let vals: Vec<f64> = e.eigenvalues.iter().copied().collect();
            all.extend(&vals);
            eigen.push((block, vals, Some(e.eigenvectors)));
        }
    }
    all.sort_by(f64::total_cmp);
    let lambda_max = all.last().copied().unwrap_or(0.0);
    let zero_tol = tol.resolve(lambda_max);
    if !(zero_tol > 0.0) {
        return Err(invalid(format!(
            "zero tolerance must be positive, got {zero_tol}"
        )));
    }
    let zero_dim = all.iter().take_while(|&&v| v <= zero_tol).count();
    let gap = all.get(zero_dim).copied().unwrap_or(f64::INFINITY);
    if gap <= AMBIGUITY_FACTOR * zero_tol {
        let below = if zero_dim > 0 { all[zero_dim - 1] } else { 0.0 };
        return Err(Error::GapFailure {
            below,
            above: gap,
            zero_tol,
        });
    }
    let mut basis = DMatrix::zeros(m, zero_dim);
    let mut col = 0;
    for (block, vals, vecs) in &eigen {
        for (c, &v) in vals.iter().enumerate() {
            if v > zero_tol {
                continue;
            }
            match vecs {
                None => basis[(block[0], col)] = 1.0,
                Some(vecs) => {
                    for (a, &row) in block.iter().enumerate() {
                        basis[(row, col)] = vecs[(a, c)];
                    }
                }
            }
            col += 1;
        }
    }
    Ok((
        SpectralSummary {
            eigenvalues: all,
            zero_dim,
            gap,
            zero_tol,
        },
        basis,
    ))
}

/// Orthogonal projection onto a subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub p: DMatrix<f64>,
    pub rank: usize,
}

pub fn projection_from_basis(basis: &DMatrix<f64>) -> Result<Projection> {
    let deviation = orthonormality_defect(basis);
    if deviation > 1e-8 {
        return Err(Error::InvalidFrame { deviation });
    }
    Ok(Projection {
        p: basis * basis.transpose(),
        rank: basis.ncols(),
    })
}

/// Kernel projection by the trapezoid rule for
/// `(1/2πi) ∮ (z − L)⁻¹ dz` on the circle of radius `γ/2`.
///
/// Uses LU solves only; no eigenvectors are involved. The spectrum is checked
/// against the annulus `(γ/4, γ)` first.
pub fn riesz_projection(l: &HodgeOperator, gamma: f64, n_nodes: usize) -> Result<Projection> {
    if n_nodes < 16 {
        return Err(invalid(format!(
            "need at least 16 contour nodes, got {n_nodes}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(invalid(format!("gap must be positive, got {gamma}")));
    }
    let (inner, outer) = (gamma / 4.0, gamma);
    if let Some(&v) = sym_eigenvalues(&l.matrix)
        .iter()
        .find(|&&v| v > inner && v < outer)
    {
        return Err(Error::ContourViolation {
            eigenvalue: v,
            inner,
            outer,
        });
    }
    let m = l.dim();
    let radius = gamma / 2.0;
    let nodes: Vec<Complex<f64>> = (0..n_nodes)
        .map(|j| {
            Complex::from_polar(
                radius,
                2.0 * std::f64::consts::PI * j as f64 / n_nodes as f64,
            )
        })
        .collect();
    let mut p = DMatrix::<f64>::zeros(m, m);
    let mut residue = 0.0_f64;
    for block in sparsity_blocks(&l.matrix) {
        let sub = principal_submatrix(&l.matrix, &block);
        let nb = block.len();
        let mut acc = DMatrix::<Complex<f64>>::zeros(nb, nb);
        for &z in &nodes {
            // With z on the circle, dz = i z dθ, so each node contributes z (z − L)⁻¹ / n.
            let shifted = DMatrix::from_fn(nb, nb, |r, c| {
                let v = Complex::new(-sub[(r, c)], 0.0);
                if r == c {
                    v + z
                } else {
                    v
                }
            });
            let rhs = DMatrix::<Complex<f64>>::identity(nb, nb) * z;
            let sol = shifted
                .lu()
                .solve(&rhs)
                .ok_or_else(|| invalid("singular resolvent on the contour"))?;
            acc += sol;
        }
        acc /= Complex::new(n_nodes as f64, 0.0);
        for (a, &r) in block.iter().enumerate() {
            for (b, &c) in block.iter().enumerate() {
                p[(r, c)] = acc[(a, b)].re;
                residue = residue.max(acc[(a, b)].im.abs());
            }
        }
    }
    if residue > 1e-8 {
        return Err(invalid(format!(
            "contour projection has imaginary residue {residue:e}"
        )));
    }
    let rank = p.trace().round().max(0.0) as usize;
    Ok(Projection { p, rank })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventReport {
    pub max_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Largest resolvent norm over the contour nodes against `2/γ`.
pub fn resolvent_bound_check(l: &HodgeOperator, gamma: f64, n_nodes: usize) -> ResolventReport {
    let eig = sym_eigenvalues(&l.matrix);
    let radius = gamma / 2.0;
    let mut max_norm = 0.0_f64;
    for j in 0..n_nodes.max(1) {
        let z = Complex::from_polar(
            radius,
            2.0 * std::f64::consts::PI * j as f64 / n_nodes.max(1) as f64,
        );
        // For a symmetric L the resolvent norm is the inverse distance to the spectrum.
        let dist = eig
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min((z - v).norm()));
        max_norm = max_norm.max(1.0 / dist);
    }
    let bound = 2.0 / gamma;
    ResolventReport {
        max_norm,
        bound,
        holds: max_norm <= bound * (1.0 + 1e-9),
    }
}

/// Pointwise regularity: kernel dimension constant over the 4-neighborhood and
/// gap at least `gamma_min`. Points whose decomposition failed are irregular.
pub fn regular_mask(summaries: &Grid<Option<SpectralSummary>>, gamma_min: f64) -> Grid<bool> {
    let (n_d, n_t) = (summaries.n_d(), summaries.n_t());
    Grid::from_fn(n_d, n_t, |i, j| {
        let Some(s) = summaries.get(i, j) else {
            return false;
        };
        if s.gap < gamma_min {
            return false;
        }
        neighbors(i, j, n_d, n_t).all(|(a, b)| {
            summaries
                .get(a, b)
                .as_ref()
                .is_some_and(|o| o.zero_dim == s.zero_dim)
        })
    })
}

pub(crate) fn neighbors(
    i: usize,
    j: usize,
    n_d: usize,
    n_t: usize,
) -> impl Iterator<Item = (usize, usize)> {
    let cand = [
        (i.wrapping_sub(1), j),
        (i + 1, j),
        (i, j.wrapping_sub(1)),
        (i, j + 1),
    ];
    cand.into_iter().filter(move |&(a, b)| a < n_d && b < n_t)
}

/// Perturbation of the kernel projection at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionPerturbation {
    pub op_diff: f64,
    pub proj_diff: f64,
    /// Gap used for the bound.
    pub gamma: f64,
    /// `2/γ`
    pub bound_constant: f64,
    pub holds: bool,
}

impl ProjectionPerturbation {
    pub fn ratio(&self) -> f64 {
        if self.op_diff == 0.0 {
            0.0
        } else {
            self.proj_diff / self.op_diff
        }
    }
}

pub fn projection_perturbation(
    p: &DMatrix<f64>,
    pt: &DMatrix<f64>,
    op_diff: f64,
    gamma: f64,
) -> ProjectionPerturbation {
    let proj_diff = sym_spectral_norm(&(p - pt));
    let bound_constant = 2.0 / gamma;
    ProjectionPerturbation {
        op_diff,
        proj_diff,
        gamma,
        bound_constant,
        holds: proj_diff <= bound_constant * op_diff * (1.0 + 1e-9) + 1e-12,
    }
}

/// Per-point comparison of two operator families on one grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityPoint {
    pub jointly_regular: bool,
    pub pointwise: Option<ProjectionPerturbation>,
    /// Bound re-checked with the smallest gap over the jointly regular region.
    pub uniform_holds: Option<bool>,
    /// `max(‖Δ∂_dP‖, ‖Δ∂_tP‖)` where the central-difference stencil is regular.
    pub dp_diff: Option<f64>,
    /// `‖F − F̃‖` of the ambient curvature sandwich.
    pub curvature_diff: Option<f64>,
    /// `max(‖ΔL‖, ‖∂ΔL‖)` over first differences.
    pub c1_size: Option<f64>,
    /// `c1_size` joined with all second differences.
    pub c2_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub points: Grid<StabilityPoint>,
    pub uniform_gamma: f64,
    pub n_jointly_regular: usize,
    pub n_bound_holds: usize,
}

/// Compares kernel projections, their derivatives and their curvature between
/// an operator family and a perturbed copy, sampled on the same grid with
/// spacings `dd` and `dt`.
pub fn stability_ratios(
    l: &Grid<HodgeOperator>,
    lt: &Grid<HodgeOperator>,
    tol: ZeroTol,
    gamma_min: f64,
    dd: f64,
    dt: f64,
) -> Result<StabilityReport> {
    if (l.n_d(), l.n_t()) != (lt.n_d(), lt.n_t()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} grid", l.n_d(), l.n_t()),
            found: format!("{}x{} grid", lt.n_d(), lt.n_t()),
        });
    }
    let (n_d, n_t) = (l.n_d(), l.n_t());
    let decompose =
        |g: &Grid<HodgeOperator>| -> (Grid<Option<SpectralSummary>>, Grid<Option<DMatrix<f64>>>) {
            let res: Vec<_> = g
                .values()
                .iter()
                .map(|op| zero_modes(op, tol).ok())
                .collect();
            let s = Grid::from_vec(
                n_d,
                n_t,
                res.iter()
                    .map(|r| r.as_ref().map(|x| x.0.clone()))
                    .collect(),
            );
            let p = Grid::from_vec(
                n_d,
                n_t,
                res.into_iter()
                    .map(|r| r.map(|x| &x.1 * x.1.transpose()))
                    .collect(),
            );
            (s, p)
        };
    let (s, p) = decompose(l);
    let (st, pt) = decompose(lt);
    let reg = regular_mask(&s, gamma_min);
    let regt = regular_mask(&st, gamma_min);
    let joint = Grid::from_fn(n_d, n_t, |i, j| {
        *reg.get(i, j)
            && *regt.get(i, j)
            && s.get(i, j).as_ref().map(|x| x.zero_dim) == st.get(i, j).as_ref().map(|x| x.zero_dim)
    });
    let local_gamma = |i: usize, j: usize| {
        s.get(i, j)
            .as_ref()
            .unwrap()
            .gap
            .min(st.get(i, j).as_ref().unwrap().gap)
    };
    let uniform_gamma = joint
        .iter()
        .filter(|(_, &ok)| ok)
        .fold(f64::INFINITY, |acc, ((i, j), _)| acc.min(local_gamma(i, j)));

    let diff = |i: usize, j: usize| &l.get(i, j).matrix - &lt.get(i, j).matrix;
    let stencil_ok = |i: usize, j: usize| {
        i > 0
            && j > 0
            && i + 1 < n_d
            && j + 1 < n_t
            && *joint.get(i, j)
            && neighbors(i, j, n_d, n_t).all(|(a, b)| *joint.get(a, b))
    };

    let mut n_joint = 0;
    let mut n_holds = 0;
    let mut points = Vec::with_capacity(n_d * n_t);
    for i in 0..n_d {
        for j in 0..n_t {
            if !*joint.get(i, j) {
                points.push(StabilityPoint {
                    jointly_regular: false,
                    pointwise: None,
                    uniform_holds: None,
                    dp_diff: None,
                    curvature_diff: None,
                    c1_size: None,
                    c2_size: None,
                });
                continue;
            }
            n_joint += 1;
            let op_diff = sym_spectral_norm(&diff(i, j));
            let pp = projection_perturbation(
                p.get(i, j).as_ref().unwrap(),
                pt.get(i, j).as_ref().unwrap(),
                op_diff,
                local_gamma(i, j),
            );
            let uniform = projection_perturbation(
                p.get(i, j).as_ref().unwrap(),
                pt.get(i, j).as_ref().unwrap(),
                op_diff,
                uniform_gamma,
            );
            if uniform.holds {
                n_holds += 1;
            }
            let (mut dp_diff, mut curvature_diff, mut c1_size, mut c2_size) =
                (None, None, None, None);
            if stencil_ok(i, j) {
                let proj = |g: &Grid<Option<DMatrix<f64>>>, a: usize, b: usize| {
                    g.get(a, b).clone().unwrap()
                };
                let deriv = |g: &Grid<Option<DMatrix<f64>>>| {
                    let pd = (proj(g, i + 1, j) - proj(g, i - 1, j)) / (2.0 * dd);
                    let ptt = (proj(g, i, j + 1) - proj(g, i, j - 1)) / (2.0 * dt);
                    (pd, ptt)
                };
                let (a_d, a_t) = deriv(&p);
                let (b_d, b_t) = deriv(&pt);
                dp_diff =
                    Some(sym_spectral_norm(&(&a_d - &b_d)).max(sym_spectral_norm(&(&a_t - &b_t))));
                let curv = |pc: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>| {
                    pc * (x * y - y * x) * pc
                };
                let fa = curv(&proj(&p, i, j), &a_d, &a_t);
                let fb = curv(&proj(&pt, i, j), &b_d, &b_t);
                curvature_diff = Some(crate::linalg::spectral_norm(&(fa - fb)));

                let e = |a: usize, b: usize| diff(a, b);
                let d1 = sym_spectral_norm(&((e(i + 1, j) - e(i - 1, j)) / (2.0 * dd)));
                let t1 = sym_spectral_norm(&((e(i, j + 1) - e(i, j - 1)) / (2.0 * dt)));
                let c1 = op_diff.max(d1).max(t1);
                c1_size = Some(c1);
                let e0 = e(i, j);
                let dd2 = sym_spectral_norm(&((e(i + 1, j) - &e0 * 2.0 + e(i - 1, j)) / (dd * dd)));
                let tt2 = sym_spectral_norm(&((e(i, j + 1) - &e0 * 2.0 + e(i, j - 1)) / (dt * dt)));
                let dt2 = sym_spectral_norm(
                    &((e(i + 1, j + 1) - e(i + 1, j - 1) - e(i - 1, j + 1) + e(i - 1, j - 1))
                        / (4.0 * dd * dt)),
                );
                c2_size = Some(c1.max(dd2).max(tt2).max(dt2));
            }
            points.push(StabilityPoint {
                jointly_regular: true,
                pointwise: Some(pp),
                uniform_holds: Some(uniform.holds),
                dp_diff,
                curvature_diff,
                c1_size,
                c2_size,
            });
        }
    }
    Ok(StabilityReport {
        points: Grid::from_vec(n_d, n_t, points),
        uniform_gamma,
        n_jointly_regular: n_joint,
        n_bound_holds: n_holds,
    })
}
