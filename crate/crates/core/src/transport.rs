//! Persistence-selected zero-mode frames, Berry curvature, polar parallel
//! transport and holonomy.
//!
//! Transport matrices map coefficients in one frame to coefficients in the
//! next: moving from `Ψ_a` to `Ψ_b` uses the polar factor of `Ψ_bᵀΨ_a`. A loop
//! is the ordered product with later steps on the left. Re-gauging a frame
//! `Ψ → ΨR` conjugates every loop based there by `R`, and a small loop
//! traversed scale-first satisfies `U_□ ≈ I − F·area`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::laplacian::HodgeOperator;
use crate::linalg::{gram_schmidt, orthonormality_defect, polar_factor};
use crate::persistence::{select_dominant_alive, PersistenceDiagram};
use crate::spectral::{zero_modes, ZeroTol};

/// Projected cycles shorter than this carry no kernel direction.
pub const SELECTION_TOL: f64 = 1e-8;
/// Overlaps with a smaller singular value are treated as a transport breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Selection {
    FullKernel,
    PersistenceSelected(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroModeFrame {
    pub grid_index: (usize, usize),
    pub psi: DMatrix<f64>,
    pub selection: Selection,
}

impl ZeroModeFrame {
    pub fn rank(&self) -> usize {
        self.psi.ncols()
    }
}

/// Frame spanned by the kernel projections of the `k` dominant alive
/// representative cycles, orthonormalized in lifetime order.
pub fn frame_from_kernel(
    kernel: &DMatrix<f64>,
    diagram: &PersistenceDiagram,
    d: f64,
    k: usize,
    grid_index: (usize, usize),
) -> Result<ZeroModeFrame> {
    let alive = select_dominant_alive(diagram, d, k);
    if alive.len() < k {
        return Err(Error::RankDeficit {
            requested: k,
            found: alive.len(),
        });
    }
    let projected: Vec<DVector<f64>> = alive
        .iter()
        .map(|p| kernel * (kernel.transpose() * &p.rep_cycle))
        .collect();
    for c in &projected {
        if c.norm() < SELECTION_TOL {
            return Err(Error::DegenerateSelection { norm: c.norm() });
        }
    }
    let psi = gram_schmidt(&projected, SELECTION_TOL)
        .map_err(|(_, norm)| Error::DegenerateSelection { norm })?;
    Ok(ZeroModeFrame {
        grid_index,
        psi,
        selection: Selection::PersistenceSelected(k),
    })
}

pub fn selected_frame(
    l: &HodgeOperator,
    diagram: &PersistenceDiagram,
    d: f64,
    k: usize,
    tol: ZeroTol,
    grid_index: (usize, usize),
) -> Result<ZeroModeFrame> {
    let (_, kernel) = zero_modes(l, tol)?;
    frame_from_kernel(&kernel, diagram, d, k, grid_index)
}

pub fn full_kernel_frame(kernel: DMatrix<f64>, grid_index: (usize, usize)) -> ZeroModeFrame {
    ZeroModeFrame {
        grid_index,
        psi: kernel,
        selection: Selection::FullKernel,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureField {
    /// `Ψᵀ F_dt Ψ` in the local frame where the stencil is certified.
    #[serde(skip)]
    pub f: Grid<Option<DMatrix<f64>>>,
    pub norm: Grid<Option<f64>>,
    /// True where the curvature is defined.
    pub mask: Grid<bool>,
}

impl CurvatureField {
    pub fn max_norm(&self) -> f64 {
        self.norm
            .values()
            .iter()
            .flatten()
            .fold(0.0, |a: f64, &b| a.max(b))
    }

    pub fn masked_fraction(&self) -> f64 {
        let n = self.mask.values().len();
        self.mask.values().iter().filter(|&&m| !m).count() as f64 / n as f64
    }
}

fn stencil<'a>(
    frames: &'a Grid<Option<ZeroModeFrame>>,
    regular: &Grid<bool>,
    i: usize,
    j: usize,
) -> Option<[&'a DMatrix<f64>; 5]> {
    let (n_d, n_t) = (frames.n_d(), frames.n_t());
    if i == 0 || j == 0 || i + 1 >= n_d || j + 1 >= n_t {
        return None;
    }
    let pts = [(i, j), (i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)];
    let mut out: [Option<&DMatrix<f64>>; 5] = [None; 5];
    for (slot, &(a, b)) in out.iter_mut().zip(&pts) {
        if !*regular.get(a, b) {
            return None;
        }
        *slot = Some(&frames.get(a, b).as_ref()?.psi);
    }
    let k = out[0]?.ncols();
    if out.iter().any(|f| f.map(|f| f.ncols()) != Some(k)) {
        return None;
    }
    Some(out.map(Option::unwrap))
}

/// Central-difference curvature `P[∂_dP, ∂_tP]P` in the local frame.
///
/// Works with the low-rank factors only; the `m×m` projections are never
/// formed. With `a = Ψᵀ∂_dP` and `b = ∂_tPΨ` the frame coefficient is
/// `ab − (ab)ᵀ`, which is exactly skew.
pub fn curvature_grid(
    frames: &Grid<Option<ZeroModeFrame>>,
    regular: &Grid<bool>,
    dd: f64,
    dt: f64,
) -> CurvatureField {
    let (n_d, n_t) = (frames.n_d(), frames.n_t());
    let mut f = Vec::with_capacity(n_d * n_t);
    for i in 0..n_d {
        for j in 0..n_t {
            f.push(stencil(frames, regular, i, j).map(|s| frame_curvature(s, dd, dt)));
        }
    }
    let f = Grid::from_vec(n_d, n_t, f);
    let norm = f.map(|x| x.as_ref().map(|m| m.norm()));
    let mask = f.map(|x| x.is_some());
    CurvatureField { f, norm, mask }
}

fn frame_curvature([psi, dp, dm, tp, tm]: [&DMatrix<f64>; 5], dd: f64, dt: f64) -> DMatrix<f64> {
    let a = ((psi.transpose() * dp) * dp.transpose() - (psi.transpose() * dm) * dm.transpose())
        / (2.0 * dd);
    let b = (tp * (tp.transpose() * psi) - tm * (tm.transpose() * psi)) / (2.0 * dt);
    let ab = a * b;
    &ab - ab.transpose()
}

/// Dense ambient curvature `P[∂_dP, ∂_tP]P` at one interior grid point.
pub fn ambient_curvature(
    frames: &Grid<Option<ZeroModeFrame>>,
    regular: &Grid<bool>,
    i: usize,
    j: usize,
    dd: f64,
    dt: f64,
) -> Option<DMatrix<f64>> {
    let [psi, dp, dm, tp, tm] = stencil(frames, regular, i, j)?;
    let proj = |x: &DMatrix<f64>| x * x.transpose();
    let x = (proj(dp) - proj(dm)) / (2.0 * dd);
    let y = (proj(tp) - proj(tm)) / (2.0 * dt);
    let p = proj(psi);
    Some(&p * (&x * &y - &y * &x) * &p)
}

/// Polar factor of `Ψ_aᵀΨ_b`. With `Ψ_b = Ψ_a R` this returns `R`.
pub fn one_step_transport(psi_a: &DMatrix<f64>, psi_b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if psi_a.shape() != psi_b.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", psi_a.shape()),
            found: format!("{:?}", psi_b.shape()),
        });
    }
    overlap_polar(&(psi_a.transpose() * psi_b))
}

/// Orthogonal polar factor of an overlap matrix, refusing near-singular input.
pub fn overlap_polar(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (q, sigma_min) = polar_factor(m)?;
    if sigma_min < BREAKDOWN_TOL {
        return Err(Error::TransportBreakdown { sigma_min });
    }
    Ok(q)
}

/// Coefficient map carrying frame `from` onto frame `to`.
pub fn transport_step(from: &DMatrix<f64>, to: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    one_step_transport(to, from)
}

/// Holonomy of the closed path through `frames`, returning to the first.
pub fn loop_holonomy(frames: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let k = frames.first().map_or(0, |f| f.ncols());
    let mut u = DMatrix::identity(k, k);
    for (idx, from) in frames.iter().enumerate() {
        let to = frames[(idx + 1) % frames.len()];
        u = transport_step(from, to)? * u;
    }
    Ok(u)
}

/// Grid points on the boundary of the rectangle with corners `(i0, j0)` and
/// `(i1, j1)`, traversed `(i0,j0) → (i1,j0) → (i1,j1) → (i0,j1)` and back.
pub fn rectangle_path(i0: usize, j0: usize, i1: usize, j1: usize) -> Vec<(usize, usize)> {
    fn walk(a: usize, b: usize) -> Vec<usize> {
        if a <= b {
            (a..b).collect()
        } else {
            ((b + 1)..=a).rev().collect()
        }
    }
    let mut path = Vec::new();
    path.extend(walk(i0, i1).into_iter().map(|i| (i, j0)));
    path.extend(walk(j0, j1).into_iter().map(|j| (i1, j)));
    path.extend(walk(i1, i0).into_iter().map(|i| (i, j1)));
    path.extend(walk(j1, j0).into_iter().map(|j| (i0, j)));
    if path.is_empty() {
        path.push((i0, j0));
    }
    path
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedPermutation {
    /// Row `a` of the matrix holds `signs[a]` in column `perm[a]`.
    pub perm: Vec<usize>,
    pub signs: Vec<f64>,
}

impl SignedPermutation {
    pub fn matrix(&self) -> DMatrix<f64> {
        let k = self.perm.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, (&p, &s)) in self.perm.iter().zip(&self.signs).enumerate() {
            m[(a, p)] = s;
        }
        m
    }
}

/// Signed permutation matrix closest to `u` in Frobenius norm.
///
/// For a fixed permutation the best signs follow the entries, so the search
/// runs over all `k!` permutations.
pub fn nearest_signed_permutation(u: &DMatrix<f64>) -> Result<SignedPermutation> {
    let k = u.nrows();
    if k != u.ncols() || k > 8 {
        return Err(Error::UnsupportedRank(k));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (f64::NEG_INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let score: f64 = p.iter().enumerate().map(|(a, &b)| u[(a, b)].abs()).sum();
        if score > best.0 {
            best = (score, p.to_vec());
        }
    });
    let perm = best.1;
    let signs = perm
        .iter()
        .enumerate()
        .map(|(a, &b)| if u[(a, b)] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    Ok(SignedPermutation { perm, signs })
}

/// Visits permutations in lexicographic order.
fn permute(p: &mut Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p[start..=i].rotate_right(1);
        permute(p, start + 1, visit);
        p[start..=i].rotate_left(1);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeInvariants {
    pub trace: f64,
    pub determinant: f64,
    /// `(re, im)` pairs, sorted.
    pub eigenvalues: Vec<(f64, f64)>,
}

pub fn gauge_invariants(u: &DMatrix<f64>) -> GaugeInvariants {
    let mut eigenvalues: Vec<(f64, f64)> = if u.is_empty() {
        Vec::new()
    } else {
        u.complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect()
    };
    eigenvalues.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    GaugeInvariants {
        trace: u.trace(),
        determinant: u.determinant(),
        eigenvalues,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportRecord {
    #[serde(skip)]
    pub steps: Vec<DMatrix<f64>>,
    /// `‖H_n − I‖_F` with `H_n` the product of the first `n` steps, `n = 1..=N`.
    pub cumulative: Vec<f64>,
    #[serde(skip)]
    pub cycle_holonomy: DMatrix<f64>,
    pub permutation: SignedPermutation,
    pub deviation: f64,
}

/// Transport once around the closed sequence of frames, with the wrap-around
/// step from the last frame back to the first.
pub fn cycle_holonomy(frames: &[&DMatrix<f64>]) -> Result<TransportRecord> {
    let n = frames.len();
    let k = frames.first().map_or(0, |f| f.ncols());
    let mut steps = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n);
    let mut h = DMatrix::identity(k, k);
    for j in 0..n {
        let q = transport_step(frames[j], frames[(j + 1) % n])?;
        h = &q * h;
        cumulative.push((&h - DMatrix::identity(k, k)).norm());
        steps.push(q);
    }
    let permutation = nearest_signed_permutation(&h)?;
    let deviation = (&h - DMatrix::identity(k, k)).norm();
    Ok(TransportRecord {
        steps,
        cumulative,
        cycle_holonomy: h,
        permutation,
        deviation,
    })
}

/// Orthonormal basis of the complement of `(1,1,1)` used to read off the
/// action of a 3×3 holonomy modulo the collective direction.
pub fn quotient_basis() -> DMatrix<f64> {
    let (a, b) = (1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt());
    DMatrix::from_row_slice(3, 2, &[a, b, -a, b, 0.0, -2.0 * b])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientAction {
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub angle_deg: f64,
    /// `‖R³ − I‖_F`
    pub cube_defect: f64,
    /// `‖U·1 − 1‖` for the normalized all-ones vector.
    pub axis_defect: f64,
}

pub fn quotient_action(u: &DMatrix<f64>) -> Result<QuotientAction> {
    if u.shape() != (3, 3) {
        return Err(Error::UnsupportedRank(u.nrows()));
    }
    let b = quotient_basis();
    let r = b.transpose() * u * &b;
    let angle_deg = r[(1, 0)].atan2(r[(0, 0)]).to_degrees();
    let cube_defect = (&r * &r * &r - DMatrix::identity(2, 2)).norm();
    let ones = DVector::from_element(3, 1.0 / 3f64.sqrt());
    let axis_defect = (u * &ones - &ones).norm();
    Ok(QuotientAction {
        matrix: r,
        angle_deg,
        cube_defect,
        axis_defect,
    })
}

/// Checks that a frame is orthonormal to `tol`.
pub fn validate_frame(psi: &DMatrix<f64>, tol: f64) -> Result<()> {
    let deviation = orthonormality_defect(psi);
    if deviation > tol {
        return Err(Error::InvalidFrame { deviation });
    }
    Ok(())
}
