//! The `(d, t)` grid sweep shared by the experiments: thresholds and diagrams
//! per time, operators, kernels and frames per grid point.

use hodge_core::chains::{
    boundary_at_scale, build_ambient, compute_thresholds, AmbientChainSpace, FiltrationFrame,
    PointCloudSeries,
};
use hodge_core::laplacian::{extended_hodge, smooth_hodge, HodgeOperator};
use hodge_core::persistence::{compute_h1_persistence, PersistenceDiagram};
use hodge_core::spectral::{regular_mask, zero_modes, SpectralSummary, ZeroTol};
use hodge_core::transport::{
    curvature_grid, frame_from_kernel, full_kernel_frame, CurvatureField, ZeroModeFrame,
};
use hodge_core::{Error, Grid, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorChoice {
    Extended,
    Smooth { epsilon: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub d_values: Vec<f64>,
    /// Number of persistence-selected modes; `None` keeps the full kernel.
    pub k: Option<usize>,
    pub zero_tol: ZeroTol,
    pub gamma_min: f64,
    pub operator: OperatorChoice,
}

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub summary: Option<SpectralSummary>,
    pub frame: Option<ZeroModeFrame>,
    pub error: Option<Error>,
}

pub struct Sweep {
    pub amb: AmbientChainSpace,
    pub thresholds: Vec<FiltrationFrame>,
    pub diagrams: Vec<PersistenceDiagram>,
    pub points: Grid<GridPoint>,
    /// Spectrally regular and carrying a frame.
    pub regular: Grid<bool>,
    pub d_values: Vec<f64>,
    pub times: Vec<f64>,
}

impl Sweep {
    pub fn gap_failures(&self) -> usize {
        self.points
            .values()
            .iter()
            .filter(|p| matches!(p.error, Some(Error::GapFailure { .. })))
            .count()
    }

    pub fn frames(&self) -> Grid<Option<ZeroModeFrame>> {
        self.points.map(|p| p.frame.clone())
    }

    pub fn spacing(&self) -> (f64, f64) {
        (spacing(&self.d_values), spacing(&self.times))
    }

    pub fn curvature(&self) -> CurvatureField {
        let (dd, dt) = self.spacing();
        curvature_grid(&self.frames(), &self.regular, dd, dt)
    }
}

fn spacing(v: &[f64]) -> f64 {
    if v.len() < 2 {
        1.0
    } else {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    }
}

pub fn operator_at(
    thresh: &FiltrationFrame,
    amb: &AmbientChainSpace,
    d: f64,
    op: OperatorChoice,
) -> Result<HodgeOperator> {
    match op {
        OperatorChoice::Extended => Ok(extended_hodge(&boundary_at_scale(thresh, amb, d)?)),
        OperatorChoice::Smooth { epsilon, mu } => smooth_hodge(thresh, amb, d, epsilon, mu),
    }
}

pub fn run_sweep(series: &PointCloudSeries, cfg: &SweepConfig) -> Result<Sweep> {
    let amb = build_ambient(series.n_points())?;
    let thresholds: Vec<FiltrationFrame> = series
        .frames()
        .iter()
        .enumerate()
        .map(|(j, f)| compute_thresholds(&f.points, j, &amb))
        .collect::<Result<_>>()?;
    let diagrams: Vec<PersistenceDiagram> = thresholds
        .par_iter()
        .map(|th| compute_h1_persistence(th, &amb))
        .collect();
    let (n_d, n_t) = (cfg.d_values.len(), series.n_times());
    let cells: Vec<(usize, usize)> = (0..n_d)
        .flat_map(|i| (0..n_t).map(move |j| (i, j)))
        .collect();
    let points: Vec<GridPoint> = cells
        .par_iter()
        .map(|&(i, j)| {
            let d = cfg.d_values[i];
            let res = operator_at(&thresholds[j], &amb, d, cfg.operator)
                .and_then(|l| zero_modes(&l, cfg.zero_tol));
            match res {
                Err(e) => GridPoint {
                    summary: None,
                    frame: None,
                    error: Some(e),
                },
                Ok((summary, kernel)) => {
                    let frame = match cfg.k {
                        None => Ok(full_kernel_frame(kernel, (i, j))),
                        Some(k) => frame_from_kernel(&kernel, &diagrams[j], d, k, (i, j)),
                    };
                    match frame {
                        Ok(f) => GridPoint {
                            summary: Some(summary),
                            frame: Some(f),
                            error: None,
                        },
                        Err(e) => GridPoint {
                            summary: Some(summary),
                            frame: None,
                            error: Some(e),
                        },
                    }
                }
            }
        })
        .collect();
    let points = Grid::from_vec(n_d, n_t, points);
    let spectral_ok = regular_mask(&points.map(|p| p.summary.clone()), cfg.gamma_min);
    let regular = Grid::from_fn(n_d, n_t, |i, j| {
        *spectral_ok.get(i, j) && points.get(i, j).frame.is_some()
    });
    Ok(Sweep {
        amb,
        thresholds,
        diagrams,
        points,
        regular,
        d_values: cfg.d_values.clone(),
        times: series.times(),
    })
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
