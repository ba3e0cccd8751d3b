//! The five experiments and the `generate` command. Each run returns its
//! output files and acceptance checks without touching the filesystem.

use std::fmt::Write;

use hodge_core::chains::{build_ambient, compute_thresholds, FiltrationFrame, PointCloudSeries};
use hodge_core::datasets::{
    add_noise, gen_double_circles, gen_dumbbell, gen_size_only, gen_vineyard_like, DumbbellVariant,
    GeneratorKind,
};
use hodge_core::laplacian::HodgeOperator;
use hodge_core::persistence::{compute_h1_persistence, PersistenceDiagram};
use hodge_core::spectral::stability_ratios;
use hodge_core::tracking::{pd_drift, successive_match, TrackState};
use hodge_core::transport::{
    cycle_holonomy, gauge_invariants, quotient_action, quotient_basis, GaugeInvariants,
    QuotientAction, SignedPermutation,
};
use hodge_core::{Error, Grid};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, Experiment, Format, RunConfig};
use crate::report::{
    diagram_csv, heatmap_csv, json_report, rows, spearman, spectral_csv, tracking_csv, Check,
    Outcome,
};
use crate::svg::heatmap;
use crate::sweep::{operator_at, run_sweep, Sweep, SweepConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
}

impl RunError {
    /// Invalid generator parameters count as a configuration error.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            RunError::Config(_) | RunError::Core(Error::InvalidInput(_))
        )
    }
}

pub type RunResult = std::result::Result<Outcome, RunError>;

pub fn run(cfg: &RunConfig) -> RunResult {
    match cfg.experiment {
        Experiment::Generate => run_generate(cfg),
        Experiment::Exp1 => run_exp1(cfg),
        Experiment::Exp2 => run_exp2(cfg),
        Experiment::Exp3 => run_exp3(cfg),
        Experiment::Exp4 => run_exp4(cfg),
        Experiment::Exp5 => run_exp5(cfg),
    }
}

fn sweep_config(cfg: &RunConfig) -> SweepConfig {
    SweepConfig {
        d_values: cfg.d_values(),
        k: cfg.frame_rank(),
        zero_tol: cfg.zero_tol(),
        gamma_min: cfg.gamma_min,
        operator: cfg.operator(),
    }
}

fn gap_fraction(sweep: &Sweep) -> f64 {
    sweep.gap_failures() as f64 / sweep.points.values().len() as f64
}

fn point_cloud(cfg: &RunConfig, kind: GeneratorKind) -> Result<PointCloudSeries, Error> {
    let mut g = cfg.generator.clone();
    g.kind = kind;
    match kind {
        GeneratorKind::DoubleCirclesApproach => gen_double_circles(&g),
        GeneratorKind::SizeOnlyControl => gen_size_only(&g),
        GeneratorKind::DumbbellDeform => gen_dumbbell(&g, DumbbellVariant::Deform),
        GeneratorKind::DumbbellRotate => gen_dumbbell(&g, DumbbellVariant::Rotate),
        GeneratorKind::VineyardLike => Err(Error::InvalidInput(
            "the vineyard-like family has no point cloud".into(),
        )),
    }
}

fn svg(out: &mut Outcome, cfg: &RunConfig, name: &str, title: &str, norms: &Grid<Option<f64>>) {
    if cfg.wants(Format::Svg) {
        out.add(name, Format::Svg, heatmap(title, norms));
    }
}

/// Point clouds of the configured generator, or vine trajectories for the
/// vineyard-like family.
pub fn run_generate(cfg: &RunConfig) -> RunResult {
    let mut out = Outcome::default();
    if cfg.generator.kind == GeneratorKind::VineyardLike {
        let data = gen_vineyard_like(&cfg.generator)?;
        out.add(
            "vines.csv",
            Format::Csv,
            vines_csv(&data.times, &data.vines, &data.elder),
        );
        return Ok(out);
    }
    let series = point_cloud(cfg, cfg.generator.kind)?;
    let series = add_noise(&series, cfg.noise, cfg.seed)?;
    out.add("points.csv", Format::Csv, series.to_csv());
    Ok(out)
}

fn vines_csv(times: &[f64], vines: &[Vec<[f64; 2]>; 3], elder: &[[f64; 2]]) -> String {
    let mut s = String::from("t,vine,birth,death,lifetime\n");
    for (j, t) in times.iter().enumerate() {
        for (a, v) in vines.iter().enumerate() {
            let [b, d] = v[j];
            let _ = writeln!(s, "{t},{a},{b},{d},{}", d - b);
        }
        let [b, d] = elder[j];
        let _ = writeln!(s, "{t},elder,{b},{d},{}", d - b);
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct HolonomySummary {
    pub steps: Vec<Vec<Vec<f64>>>,
    pub cumulative_deviation: Vec<f64>,
    pub u_cycle: Vec<Vec<f64>>,
    pub invariants: GaugeInvariants,
    pub nearest_permutation: SignedPermutation,
    /// `‖U − I‖_F`
    pub deviation: f64,
    /// `‖UᵀU − I‖_F`
    pub orthogonality_defect: f64,
}

fn holonomy_summary(frames: &[&DMatrix<f64>]) -> Result<(HolonomySummary, DMatrix<f64>), Error> {
    let rec = cycle_holonomy(frames)?;
    let u = rec.cycle_holonomy.clone();
    let k = u.nrows();
    let summary = HolonomySummary {
        steps: rec.steps.iter().map(rows).collect(),
        cumulative_deviation: rec.cumulative,
        u_cycle: rows(&u),
        invariants: gauge_invariants(&u),
        nearest_permutation: rec.permutation,
        deviation: rec.deviation,
        orthogonality_defect: (u.transpose() * &u - DMatrix::identity(k, k)).norm(),
    };
    Ok((summary, u))
}

#[derive(Debug, Clone, Serialize)]
pub struct QuotientSummary {
    /// Columns span the complement of `(1,1,1)` in frame coefficients under
    /// the Euclidean inner product; `matrix` is `BᵀUB`.
    pub basis: Vec<Vec<f64>>,
    pub inner_product: &'static str,
    pub matrix: Vec<Vec<f64>>,
    pub angle_deg: f64,
    pub cube_defect: f64,
    pub axis_defect: f64,
}

impl From<&QuotientAction> for QuotientSummary {
    fn from(q: &QuotientAction) -> Self {
        QuotientSummary {
            basis: rows(&quotient_basis()),
            inner_product: "euclidean frame coefficients, complement of (1,1,1)",
            matrix: rows(&q.matrix),
            angle_deg: q.angle_deg,
            cube_defect: q.cube_defect,
            axis_defect: q.axis_defect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Exp1Results {
    pub holonomy: HolonomySummary,
    pub quotient: QuotientSummary,
    pub crossings: Vec<hodge_core::datasets::Crossing>,
}

/// Monodromy of the vineyard-like family: the vines come back cyclically
/// relabeled and the zero-mode frame comes back permuted.
pub fn run_exp1(cfg: &RunConfig) -> RunResult {
    let data = gen_vineyard_like(&cfg.generator)?;
    let frames: Vec<&DMatrix<f64>> = data.frames.iter().collect();
    let (holonomy, u) = holonomy_summary(&frames)?;
    let q = quotient_action(&u)?;
    let res = Exp1Results {
        holonomy,
        quotient: (&q).into(),
        crossings: data.crossings.clone(),
    };

    let mut out = Outcome::default();
    out.add(
        "vines.csv",
        Format::Csv,
        vines_csv(&data.times, &data.vines, &data.elder),
    );
    out.add(
        "holonomy.json",
        Format::Json,
        json_report("exp1_holonomy", cfg, &res),
    );
    let perm = &res.holonomy.nearest_permutation.perm;
    out.checks.push(Check::new(
        "permutation",
        perm == &[1, 2, 0],
        format!("nearest permutation {perm:?}"),
    ));
    out.checks.push(Check::new(
        "quotient_angle",
        (q.angle_deg + 120.0).abs() <= 1.0,
        format!("quotient rotation {:.6} deg", q.angle_deg),
    ));
    out.checks.push(Check::new(
        "quotient_order_three",
        q.cube_defect <= 1e-6,
        format!("|R^3 - I| = {:.3e}", q.cube_defect),
    ));
    out.checks.push(Check::new(
        "orthogonal",
        res.holonomy.orthogonality_defect <= 1e-9,
        format!("|U^T U - I| = {:.3e}", res.holonomy.orthogonality_defect),
    ));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Exp2Results {
    pub swap_count: usize,
    /// Time indices of flagged transitions, `j` for `j-1 → j`.
    pub swap_indices: Vec<usize>,
    pub curvature_argmax: usize,
    pub separation_argmin: usize,
    pub margin_argmin: usize,
    pub window: (usize, usize),
    /// Window width as a fraction of the period.
    pub window_fraction: f64,
    pub max_curvature: f64,
    pub masked_fraction: f64,
    pub gap_failures: usize,
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x < v[best] { i } else { best })
}

/// Largest curvature norm over scales at each time.
fn curvature_over_time(norms: &Grid<Option<f64>>) -> Vec<f64> {
    (0..norms.n_t())
        .map(|j| {
            (0..norms.n_d())
                .filter_map(|i| *norms.get(i, j))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Double circles on a close pass: diagram tracking and curvature against time.
pub fn run_exp2(cfg: &RunConfig) -> RunResult {
    let series = point_cloud(cfg, GeneratorKind::DoubleCirclesApproach)?;
    let sweep = run_sweep(&series, &sweep_config(cfg))?;
    let curv = sweep.curvature();
    let track = successive_match(&sweep.diagrams)?;
    let per_time = curvature_over_time(&curv.norm);

    let j_curv = argmax(&per_time);
    let j_sep = argmin(&track.separations);
    let j_margin = argmin(&track.margins) + 1;
    let lo = j_curv.min(j_sep).min(j_margin);
    let hi = j_curv.max(j_sep).max(j_margin);
    let n_t = sweep.times.len();
    let window_fraction = (hi - lo) as f64 / (n_t - 1) as f64;
    let swap_indices: Vec<usize> = swap_indices(&track);
    let res = Exp2Results {
        swap_count: swap_indices.len(),
        swap_indices: swap_indices.clone(),
        curvature_argmax: j_curv,
        separation_argmin: j_sep,
        margin_argmin: j_margin,
        window: (lo, hi),
        window_fraction,
        max_curvature: curv.max_norm(),
        masked_fraction: curv.masked_fraction(),
        gap_failures: sweep.gap_failures(),
    };

    let mut out = Outcome {
        gap_failure_fraction: gap_fraction(&sweep),
        ..Outcome::default()
    };
    out.add("points.csv", Format::Csv, series.to_csv());
    out.add("spectral.csv", Format::Csv, spectral_csv(&sweep));
    out.add(
        "heatmap.csv",
        Format::Csv,
        heatmap_csv(&sweep.d_values, &sweep.times, &curv),
    );
    out.add(
        "diagrams.csv",
        Format::Csv,
        diagram_csv(&sweep.diagrams, &sweep.times),
    );
    out.add(
        "tracking.csv",
        Format::Csv,
        tracking_csv(&track, &sweep.times),
    );
    let mut s = String::from("t,max_curv_frobenius\n");
    for (t, c) in sweep.times.iter().zip(&per_time) {
        let _ = writeln!(s, "{t},{c}");
    }
    out.add("curvature_time.csv", Format::Csv, s);
    out.add("report.json", Format::Json, json_report("exp2", cfg, &res));
    svg(
        &mut out,
        cfg,
        "heatmap.svg",
        "curvature |F|, double circles",
        &curv.norm,
    );

    out.checks.push(Check::new(
        "coincidence_window",
        window_fraction <= 0.1,
        format!(
            "curvature argmax {j_curv}, separation argmin {j_sep}, margin argmin {j_margin}: window {:.1}% of the period",
            100.0 * window_fraction
        ),
    ));
    out.checks.push(Check::new(
        "single_swap_in_window",
        swap_indices.len() == 1 && (lo..=hi).contains(&swap_indices[0]),
        format!("swaps at {swap_indices:?}, window [{lo}, {hi}]"),
    ));
    Ok(out)
}

fn swap_indices(track: &TrackState) -> Vec<usize> {
    track
        .swap_flags
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(k, _)| k + 1)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Exp3Results {
    pub approach_max: f64,
    pub size_only_max: f64,
    /// Infinite when the control is exactly flat.
    pub ratio: f64,
    pub approach_masked_fraction: f64,
    pub size_only_masked_fraction: f64,
}

/// Curvature of the approaching circles against the uniformly rescaled control.
pub fn run_exp3(cfg: &RunConfig) -> RunResult {
    let sc = sweep_config(cfg);
    let approach = run_sweep(
        &point_cloud(cfg, GeneratorKind::DoubleCirclesApproach)?,
        &sc,
    )?;
    let control = run_sweep(&point_cloud(cfg, GeneratorKind::SizeOnlyControl)?, &sc)?;
    let (ca, cc) = (approach.curvature(), control.curvature());
    let (a, c) = (ca.max_norm(), cc.max_norm());
    let ratio = if c > 0.0 {
        a / c
    } else if a > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let res = Exp3Results {
        approach_max: a,
        size_only_max: c,
        ratio,
        approach_masked_fraction: ca.masked_fraction(),
        size_only_masked_fraction: cc.masked_fraction(),
    };

    let mut out = Outcome {
        gap_failure_fraction: gap_fraction(&approach).max(gap_fraction(&control)),
        ..Outcome::default()
    };
    for (tag, sweep, curv) in [("approach", &approach, &ca), ("size_only", &control, &cc)] {
        out.add(
            format!("spectral_{tag}.csv"),
            Format::Csv,
            spectral_csv(sweep),
        );
        out.add(
            format!("heatmap_{tag}.csv"),
            Format::Csv,
            heatmap_csv(&sweep.d_values, &sweep.times, curv),
        );
        out.add(
            format!("diagrams_{tag}.csv"),
            Format::Csv,
            diagram_csv(&sweep.diagrams, &sweep.times),
        );
        svg(
            &mut out,
            cfg,
            &format!("heatmap_{tag}.svg"),
            &format!("curvature |F|, {tag}"),
            &curv.norm,
        );
    }
    out.add("report.json", Format::Json, json_report("exp3", cfg, &res));
    out.checks.push(Check::new(
        "contrast",
        ratio >= 100.0,
        format!("max |F| {a:.4e} against {c:.4e}, ratio {ratio:.3e}"),
    ));
    out.checks.push(Check::new(
        "control_flat",
        c <= 1e-4,
        format!("control max |F| {c:.3e}"),
    ));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantResult {
    pub swap_count: usize,
    pub holonomy: HolonomySummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Exp4Results {
    pub deform: VariantResult,
    pub rotate: VariantResult,
    /// `‖U_deform − U_rotate‖_F`
    pub pairwise_difference: f64,
    /// Infinite when the rotation holonomy is exactly trivial.
    pub deviation_ratio: f64,
}

/// Dumbbells whose middle loop deforms or rotates: equal diagram tracking,
/// different holonomy around the period at a fixed scale.
pub fn run_exp4(cfg: &RunConfig) -> RunResult {
    let mut sc = sweep_config(cfg);
    sc.d_values = vec![cfg.d_ref];
    let mut out = Outcome::default();
    let mut variants = Vec::new();
    for (tag, kind) in [
        ("deform", GeneratorKind::DumbbellDeform),
        ("rotate", GeneratorKind::DumbbellRotate),
    ] {
        let series = point_cloud(cfg, kind)?;
        let sweep = run_sweep(&series, &sc)?;
        out.gap_failure_fraction = out.gap_failure_fraction.max(gap_fraction(&sweep));
        let track = successive_match(&sweep.diagrams)?;
        let mut frames = Vec::with_capacity(sweep.times.len());
        for j in 0..sweep.times.len() {
            let p = sweep.points.get(0, j);
            match (&p.frame, &p.error) {
                (Some(f), _) => frames.push(&f.psi),
                (None, Some(e)) => return Err(e.clone().into()),
                (None, None) => unreachable!("a grid point without a frame carries its error"),
            }
        }
        let (holonomy, u) = holonomy_summary(&frames)?;
        out.add(
            format!("tracking_{tag}.csv"),
            Format::Csv,
            tracking_csv(&track, &sweep.times),
        );
        out.add(
            format!("diagrams_{tag}.csv"),
            Format::Csv,
            diagram_csv(&sweep.diagrams, &sweep.times),
        );
        variants.push((
            VariantResult {
                swap_count: track.swap_count(),
                holonomy,
            },
            u,
        ));
    }
    let (rotate, u_rot) = variants.pop().unwrap();
    let (deform, u_def) = variants.pop().unwrap();
    let (dd, dr) = (deform.holonomy.deviation, rotate.holonomy.deviation);
    let deviation_ratio = if dr > 0.0 {
        dd / dr
    } else if dd > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let res = Exp4Results {
        pairwise_difference: (&u_def - &u_rot).norm(),
        deviation_ratio,
        deform,
        rotate,
    };
    out.add(
        "holonomy.json",
        Format::Json,
        json_report("exp4_holonomy", cfg, &res),
    );

    out.checks.push(Check::new(
        "no_swaps",
        res.deform.swap_count == 0 && res.rotate.swap_count == 0,
        format!(
            "swaps deform {} rotate {}",
            res.deform.swap_count, res.rotate.swap_count
        ),
    ));
    out.checks.push(Check::new(
        "deviation_ratio",
        deviation_ratio >= 3.0,
        format!("|U - I| deform {dd:.4e} rotate {dr:.4e}, ratio {deviation_ratio:.3e}"),
    ));
    let orth = res
        .deform
        .holonomy
        .orthogonality_defect
        .max(res.rotate.holonomy.orthogonality_defect);
    out.checks.push(Check::new(
        "orthogonal",
        orth <= 1e-9,
        format!("largest |U^T U - I| {orth:.3e}"),
    ));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Realization {
    pub sigma: f64,
    pub seed: u64,
    pub n_jointly_regular: usize,
    pub n_bound_holds: usize,
    /// Jointly regular points with a full difference stencil.
    pub n_stencil: usize,
    pub max_op_diff: f64,
    pub max_proj_diff: f64,
    pub max_curvature_diff: f64,
    pub max_c1_size: f64,
    pub max_c2_size: f64,
    pub mean_pd_drift: f64,
    pub swap_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Exp5Results {
    /// Largest curvature norm of the noiseless grid.
    pub base_max_curvature: f64,
    /// Median over correlated realizations of `max_curvature_diff`.
    pub median_curvature_diff: Option<f64>,
    pub n_jointly_regular: usize,
    pub n_bound_holds: usize,
    /// Realizations with at least one stencil point; only these enter the
    /// curvature correlations.
    pub n_correlated: usize,
    pub spearman_curvature_c2: Option<f64>,
    pub spearman_curvature_op: Option<f64>,
    pub spearman_drift_sigma: Option<f64>,
    pub mean_drift_per_sigma: Vec<(f64, f64)>,
    pub spearman_mean_drift_sigma: Option<f64>,
    pub realizations: Vec<Realization>,
}

fn thresholds(series: &PointCloudSeries) -> Result<Vec<FiltrationFrame>, Error> {
    let amb = build_ambient(series.n_points())?;
    series
        .frames()
        .iter()
        .enumerate()
        .map(|(j, f)| compute_thresholds(&f.points, j, &amb))
        .collect()
}

/// Curvature norms below this are treated as rounding noise.
pub const NONTRIVIAL_CURVATURE: f64 = 1e-6;

/// Noise sweep: projection bound, curvature stability and diagram drift.
pub fn run_exp5(cfg: &RunConfig) -> RunResult {
    let base = point_cloud(cfg, GeneratorKind::DoubleCirclesApproach)?;
    let amb = build_ambient(base.n_points())?;
    let d_values = cfg.d_values();
    let times = base.times();
    let (dd, dt) = (d_values[1] - d_values[0], times[1] - times[0]);
    let operators = |th: &[FiltrationFrame]| -> Result<Grid<HodgeOperator>, Error> {
        let ops: Vec<HodgeOperator> = d_values
            .iter()
            .flat_map(|&d| th.iter().map(move |t| (d, t)))
            .map(|(d, t)| operator_at(t, &amb, d, cfg.operator()))
            .collect::<Result<_, _>>()?;
        Ok(Grid::from_vec(d_values.len(), times.len(), ops))
    };
    let base_th = thresholds(&base)?;
    let base_ops = operators(&base_th)?;
    let base_diagrams: Vec<PersistenceDiagram> = base_th
        .iter()
        .map(|t| compute_h1_persistence(t, &amb))
        .collect();
    let base_sweep = run_sweep(&base, &sweep_config(cfg))?;

    let jobs: Vec<(f64, u64)> = cfg
        .sigmas
        .iter()
        .flat_map(|&s| (0..cfg.n_seeds).map(move |k| (s, k)))
        .collect();
    let per: Vec<(Realization, String)> = jobs
        .par_iter()
        .map(|&(sigma, seed)| -> Result<(Realization, String), Error> {
            let noisy = add_noise(&base, sigma, cfg.seed.wrapping_mul(1000).wrapping_add(seed))?;
            let th = thresholds(&noisy)?;
            let rep = stability_ratios(
                &base_ops,
                &operators(&th)?,
                cfg.zero_tol(),
                cfg.gamma_min,
                dd,
                dt,
            )?;
            let diagrams: Vec<PersistenceDiagram> =
                th.iter().map(|t| compute_h1_persistence(t, &amb)).collect();
            let drift = pd_drift(&base_diagrams, &diagrams)?;
            let swaps = successive_match(&diagrams)?.swap_count();
            let mut r = Realization {
                sigma,
                seed,
                n_jointly_regular: rep.n_jointly_regular,
                n_bound_holds: rep.n_bound_holds,
                n_stencil: 0,
                max_op_diff: 0.0,
                max_proj_diff: 0.0,
                max_curvature_diff: 0.0,
                max_c1_size: 0.0,
                max_c2_size: 0.0,
                mean_pd_drift: drift.mean,
                swap_count: swaps,
            };
            let mut rows = String::new();
            for ((i, j), p) in rep.points.iter() {
                let Some(pp) = &p.pointwise else { continue };
                r.max_op_diff = r.max_op_diff.max(pp.op_diff);
                r.max_proj_diff = r.max_proj_diff.max(pp.proj_diff);
                if let (Some(f), Some(c1), Some(c2)) = (p.curvature_diff, p.c1_size, p.c2_size) {
                    r.n_stencil += 1;
                    r.max_curvature_diff = r.max_curvature_diff.max(f);
                    r.max_c1_size = r.max_c1_size.max(c1);
                    r.max_c2_size = r.max_c2_size.max(c2);
                }
                let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(
                    rows,
                    "{sigma},{seed},{},{},{},{},{},{},{},{},{},{},{}",
                    d_values[i],
                    times[j],
                    pp.op_diff,
                    pp.proj_diff,
                    pp.gamma,
                    u8::from(pp.holds),
                    u8::from(p.uniform_holds == Some(true)),
                    o(p.dp_diff),
                    o(p.curvature_diff),
                    o(p.c1_size),
                    o(p.c2_size),
                );
            }
            Ok((r, rows))
        })
        .collect::<Result<_, _>>()?;

    let realizations: Vec<Realization> = per.iter().map(|p| p.0.clone()).collect();
    let used: Vec<&Realization> = realizations.iter().filter(|r| r.n_stencil > 0).collect();
    let col = |f: fn(&Realization) -> f64, v: &[&Realization]| {
        v.iter().map(|r| f(r)).collect::<Vec<f64>>()
    };
    let spearman_curvature_c2 = spearman(
        &col(|r| r.max_curvature_diff, &used),
        &col(|r| r.max_c2_size, &used),
    );
    let spearman_curvature_op = spearman(
        &col(|r| r.max_curvature_diff, &used),
        &col(|r| r.max_op_diff, &used),
    );
    let all: Vec<&Realization> = realizations.iter().collect();
    let spearman_drift_sigma = spearman(&col(|r| r.sigma, &all), &col(|r| r.mean_pd_drift, &all));
    let mean_drift_per_sigma: Vec<(f64, f64)> = cfg
        .sigmas
        .iter()
        .map(|&s| {
            let v: Vec<f64> = realizations
                .iter()
                .filter(|r| r.sigma == s)
                .map(|r| r.mean_pd_drift)
                .collect();
            (s, v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    let spearman_mean_drift_sigma = spearman(
        &mean_drift_per_sigma.iter().map(|x| x.0).collect::<Vec<_>>(),
        &mean_drift_per_sigma.iter().map(|x| x.1).collect::<Vec<_>>(),
    );
    let n_jointly_regular = realizations.iter().map(|r| r.n_jointly_regular).sum();
    let n_bound_holds = realizations.iter().map(|r| r.n_bound_holds).sum();
    let mut diffs = col(|r| r.max_curvature_diff, &used);
    diffs.sort_by(f64::total_cmp);
    let median_curvature_diff = (!diffs.is_empty()).then(|| diffs[diffs.len() / 2]);
    let res = Exp5Results {
        base_max_curvature: base_sweep.curvature().max_norm(),
        median_curvature_diff,
        n_jointly_regular,
        n_bound_holds,
        n_correlated: used.len(),
        spearman_curvature_c2,
        spearman_curvature_op,
        spearman_drift_sigma,
        mean_drift_per_sigma,
        spearman_mean_drift_sigma,
        realizations,
    };

    let mut out = Outcome {
        gap_failure_fraction: gap_fraction(&base_sweep),
        ..Outcome::default()
    };
    let mut drift = String::from("sigma,seed,mean_pd_drift,swap_count\n");
    for r in &res.realizations {
        let _ = writeln!(
            drift,
            "{},{},{},{}",
            r.sigma, r.seed, r.mean_pd_drift, r.swap_count
        );
    }
    out.add("drift.csv", Format::Csv, drift);
    let mut scatter = String::from(
        "sigma,seed,d,t,op_diff,proj_diff,gamma,bound_holds,uniform_bound_holds,dp_diff,curv_diff,c1_size,c2_size\n",
    );
    for (_, rows) in &per {
        scatter.push_str(rows);
    }
    out.add("stability.csv", Format::Csv, scatter);
    out.add("spectral_base.csv", Format::Csv, spectral_csv(&base_sweep));
    out.add("report.json", Format::Json, json_report("exp5", cfg, &res));

    let show = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.3}"));
    out.checks.push(Check::new(
        "projection_bound",
        n_jointly_regular > 0 && n_bound_holds == n_jointly_regular,
        format!("bound holds at {n_bound_holds} of {n_jointly_regular} jointly regular points"),
    ));
    // A flat base leaves only rounding noise in the curvature differences,
    // and a rank correlation of rounding noise means nothing.
    let nontrivial = res.base_max_curvature >= NONTRIVIAL_CURVATURE
        && median_curvature_diff.is_some_and(|m| m >= NONTRIVIAL_CURVATURE);
    out.checks.push(Check::new(
        "curvature_correlation",
        nontrivial && spearman_curvature_c2.is_some_and(|r| r > 0.8),
        format!(
            "Spearman(max |dF|, max C2 size) = {} over {} realizations; base max |F| {:.3e}, median max |dF| {}",
            show(spearman_curvature_c2),
            res.n_correlated,
            res.base_max_curvature,
            median_curvature_diff.map_or("undefined".to_string(), |m| format!("{m:.3e}"))
        ),
    ));
    out.checks.push(Check::new(
        "drift_trend",
        res.spearman_mean_drift_sigma.is_some_and(|r| r > 0.9),
        format!(
            "Spearman(sigma, mean drift) = {}, per realization {}",
            show(res.spearman_mean_drift_sigma),
            show(res.spearman_drift_sigma)
        ),
    ));
    Ok(out)
}
