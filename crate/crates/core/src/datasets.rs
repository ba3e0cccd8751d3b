//! Seeded synthetic point-cloud series and the vineyard-like frame family.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::chains::{Frame, Point, PointCloudSeries};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    #[serde(rename = "double_circles")]
    DoubleCirclesApproach,
    #[serde(rename = "size_only")]
    SizeOnlyControl,
    DumbbellDeform,
    DumbbellRotate,
    VineyardLike,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub n_points_per_feature: usize,
    pub n_times: usize,
    pub period: f64,
    pub seed: u64,
    /// Circle radius of the double-circle systems.
    pub radius: f64,
    /// Size contrast `κ`: the circles have radii `r(1 ± κ|cos(πt/T)|)`, equal
    /// only at closest approach.
    pub size_contrast: f64,
    /// Vertical sweep `H`: the right circle sits `H sin(2πt/T)` below the left
    /// one, so the circles slide past each other at closest approach.
    pub fly_by: f64,
    /// Center distance at closest approach.
    pub s_min: f64,
    /// Center distance at the start and end of the period.
    pub s_max: f64,
    /// Angular jitter amplitude as a fraction of the angular spacing.
    pub jitter: f64,
    /// Amplitude `a` of the size-only scale factor `1 + a sin(2πt/T)`.
    pub size_amplitude: f64,
    pub outer_radius_left: f64,
    pub outer_radius_right: f64,
    /// Distance of each outer center from the origin.
    pub outer_offset: f64,
    pub middle_radius: f64,
    pub middle_points: usize,
    /// Relative modulation of the middle loop's semi-axes.
    pub deform_amplitude: f64,
}

impl GeneratorConfig {
    /// Defaults per kind. The dumbbell loops sit close enough that the middle
    /// loop's deformation couples to the outer circles at moderate scales.
    pub fn new(kind: GeneratorKind) -> Self {
        let base = GeneratorConfig {
            kind,
            n_points_per_feature: 12,
            n_times: 40,
            period: 1.0,
            seed: 7,
            radius: 1.0,
            size_contrast: 0.0,
            fly_by: 0.0,
            s_min: 2.05,
            s_max: 3.5,
            jitter: 0.02,
            size_amplitude: 0.2,
            outer_radius_left: 1.0,
            outer_radius_right: 1.0,
            outer_offset: 3.0,
            middle_radius: 0.8,
            middle_points: 10,
            deform_amplitude: 0.3,
        };
        match kind {
            GeneratorKind::DumbbellDeform | GeneratorKind::DumbbellRotate => GeneratorConfig {
                n_points_per_feature: 20,
                middle_points: 20,
                outer_offset: 2.04,
                outer_radius_right: 1.05,
                middle_radius: 0.6,
                deform_amplitude: 0.6,
                ..base
            },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_times < 8 {
            return Err(invalid(format!(
                "need at least 8 time samples, got {}",
                self.n_times
            )));
        }
        if self.n_points_per_feature < 3 || self.middle_points < 3 {
            return Err(invalid("each loop needs at least 3 points"));
        }
        if !(self.period > 0.0) {
            return Err(invalid("period must be positive"));
        }
        for (name, r) in [
            ("radius", self.radius),
            ("outer_radius_left", self.outer_radius_left),
            ("outer_radius_right", self.outer_radius_right),
            ("middle_radius", self.middle_radius),
        ] {
            if !(r > 0.0) {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.size_contrast) {
            return Err(invalid("size contrast must lie in [0, 1)"));
        }
        if !self.fly_by.is_finite() {
            return Err(invalid("fly-by amplitude must be finite"));
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(invalid("jitter must lie in [0, 0.5)"));
        }
        Ok(())
    }

    /// Sample times `jT/(n−1)`, both ends included, so the last frame closes
    /// the period.
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_times;
        (0..n)
            .map(|j| self.period * j as f64 / (n - 1) as f64)
            .collect()
    }

    fn phase(&self, t: f64) -> f64 {
        2.0 * PI * t / self.period
    }
}

/// Equi-angular offsets with a frozen uniform jitter.
fn jittered_angles(n: usize, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let step = 2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let u: f64 = if jitter > 0.0 {
                rng.random_range(-jitter..=jitter)
            } else {
                0.0
            };
            step * (k as f64 + u)
        })
        .collect()
}

fn series(
    cfg: &GeneratorConfig,
    mut frame: impl FnMut(f64) -> Vec<Point>,
) -> Result<PointCloudSeries> {
    PointCloudSeries::new(
        cfg.times()
            .into_iter()
            .map(|t| Frame {
                time: t,
                points: frame(t),
            })
            .collect(),
    )
}

/// Two circles whose horizontal center distance runs from `s_max` down to
/// `s_min` at half period and back. With the default zero `size_contrast` and
/// `fly_by` both circles have radius `r` and stay on the x-axis.
pub fn gen_double_circles(cfg: &GeneratorConfig) -> Result<PointCloudSeries> {
    cfg.validate()?;
    if !(cfg.s_min > 0.0) || cfg.s_max < cfg.s_min {
        return Err(invalid(format!(
            "need 0 < s_min <= s_max, got {} and {}",
            cfg.s_min, cfg.s_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_points_per_feature;
    let left = jittered_angles(n, cfg.jitter, &mut rng);
    let right = jittered_angles(n, cfg.jitter, &mut rng);
    series(cfg, |t| {
        let phi = cfg.phase(t);
        let s = cfg.s_min + (cfg.s_max - cfg.s_min) * (1.0 + phi.cos()) / 2.0;
        let v = cfg.fly_by * phi.sin() / 2.0;
        let g = cfg.size_contrast * (phi / 2.0).cos().abs();
        circle_points(&left, cfg.radius * (1.0 + g), [-s / 2.0, v])
            .chain(circle_points(&right, cfg.radius * (1.0 - g), [s / 2.0, -v]))
            .collect()
    })
}

fn circle_points(angles: &[f64], r: f64, c: [f64; 2]) -> impl Iterator<Item = Point> + '_ {
    angles
        .iter()
        .map(move |&a| [c[0] + r * a.cos(), c[1] + r * a.sin()])
}

/// The first double-circle frame scaled by `1 + a sin(2πt/T)`.
pub fn gen_size_only(cfg: &GeneratorConfig) -> Result<PointCloudSeries> {
    cfg.validate()?;
    if !(0.0..0.3).contains(&cfg.size_amplitude.abs()) {
        return Err(invalid(format!(
            "size amplitude must be below 0.3, got {}",
            cfg.size_amplitude
        )));
    }
    let base = gen_double_circles(cfg)?.frames()[0].points.clone();
    series(cfg, |t| {
        let c = 1.0 + cfg.size_amplitude * cfg.phase(t).sin();
        base.iter().map(|p| [c * p[0], c * p[1]]).collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DumbbellVariant {
    Deform,
    Rotate,
}

/// Two fixed outer circles at `(∓offset, 0)` and a middle loop at the
/// origin that starts as a circle of radius `r`.
///
/// Under deformation the middle loop is an ellipse with semi-axes
/// `r(1 + A(1 − cos φ)/2)` and `r(1 + (A/2) sin φ)`, `φ = 2πt/T`, so its shape
/// runs around a closed curve in shape space instead of retracing itself, and
/// at half period it is widest and closest to the outer circles. Under rotation the
/// circle keeps its shape and the points slide along it by `φ`.
pub fn gen_dumbbell(cfg: &GeneratorConfig, variant: DumbbellVariant) -> Result<PointCloudSeries> {
    cfg.validate()?;
    let a = cfg.deform_amplitude;
    if !(0.0..1.0).contains(&a) {
        return Err(invalid(format!(
            "deform amplitude must lie in [0, 1), got {a}"
        )));
    }
    let reach = cfg.middle_radius * (1.0 + a); // widest horizontal semi-axis
    if cfg.outer_offset <= reach + cfg.outer_radius_left.max(cfg.outer_radius_right) {
        return Err(invalid("dumbbell loops overlap"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_points_per_feature;
    let left = jittered_angles(n, cfg.jitter, &mut rng);
    let right = jittered_angles(n, cfg.jitter, &mut rng);
    let middle = jittered_angles(cfg.middle_points, cfg.jitter, &mut rng);
    series(cfg, |t| {
        let phi = cfg.phase(t);
        let (ax, ay, shift) = match variant {
            DumbbellVariant::Deform => (
                cfg.middle_radius * (1.0 + 0.5 * a * (1.0 - phi.cos())),
                cfg.middle_radius * (1.0 + 0.5 * a * phi.sin()),
                0.0,
            ),
            DumbbellVariant::Rotate => (cfg.middle_radius, cfg.middle_radius, phi),
        };
        let mut pts: Vec<Point> =
            circle_points(&left, cfg.outer_radius_left, [-cfg.outer_offset, 0.0]).collect();
        pts.extend(circle_points(
            &right,
            cfg.outer_radius_right,
            [cfg.outer_offset, 0.0],
        ));
        pts.extend(
            middle
                .iter()
                .map(|&th| [ax * (th + shift).cos(), ay * (th + shift).sin()]),
        );
        pts
    })
}

/// Gaussian displacement with standard deviation `sigma` per coordinate.
pub fn add_noise(series: &PointCloudSeries, sigma: f64, seed: u64) -> Result<PointCloudSeries> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid(format!(
            "noise level must be a finite non-negative number, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(series.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = series
        .frames()
        .iter()
        .map(|f| Frame {
            time: f.time,
            points: f
                .points
                .iter()
                .map(|p| {
                    [
                        p[0] + normal.sample(&mut rng),
                        p[1] + normal.sample(&mut rng),
                    ]
                })
                .collect(),
        })
        .collect();
    PointCloudSeries::new(frames)
}

/// Birth/death trajectories and frames of the monodromy example.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VineyardData {
    pub times: Vec<f64>,
    /// Three non-elder vines; vine `a` ends where vine `a+1` starts.
    pub vines: [Vec<[f64; 2]>; 3],
    pub elder: Vec<[f64; 2]>,
    /// Unit normals in ℝ⁴; the frame at time `t` spans their complement.
    #[serde(skip)]
    pub normals: Vec<DVector<f64>>,
    /// Parallel orthonormal 4×3 frames.
    #[serde(skip)]
    pub frames: Vec<DMatrix<f64>>,
    /// Sample intervals `(j, j+1)` across which two vines exchange lifetime order.
    pub crossings: Vec<Crossing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub start: usize,
    pub end: usize,
    pub vines: (usize, usize),
}

/// Vines rotate about a common center by a third of a turn per period. The
/// frames follow normals around a geodesic triangle with two right angles on
/// the sphere orthogonal to `(1,1,1,0)`. Legs are covered at equal speed in
/// the ratio 3:4:3, so with `n_times − 1` a multiple of 10 the corners are
/// sampled and every step between samples follows a single great circle.
/// The enclosed angle of −120° turns the complement of the collective mode.
/// The endpoint frame is `Ψ(0)Π`, where `Π` has ones at `(0,1), (1,2), (2,0)`.
pub fn gen_vineyard_like(cfg: &GeneratorConfig) -> Result<VineyardData> {
    cfg.validate()?;
    let times = cfg.times();
    let (center, rho) = ([1.0, 3.0], 0.5);
    let vines = [0usize, 1, 2].map(|a| {
        times
            .iter()
            .map(|&t| {
                let ang = 2.0 * PI * a as f64 / 3.0 + cfg.phase(t) / 3.0;
                [center[0] + rho * ang.cos(), center[1] + rho * ang.sin()]
            })
            .collect::<Vec<_>>()
    });
    let elder = times
        .iter()
        .map(|&t| [0.1, 6.0 + 0.1 * cfg.phase(t).sin()])
        .collect();

    let mut crossings = Vec::new();
    let life = |a: usize, j: usize| vines[a][j][1] - vines[a][j][0];
    for j in 0..times.len() - 1 {
        for a in 0..3 {
            for b in (a + 1)..3 {
                let (x, y) = (life(a, j) - life(b, j), life(a, j + 1) - life(b, j + 1));
                if x == 0.0 || x.signum() != y.signum() {
                    crossings.push(Crossing {
                        start: j,
                        end: j + 1,
                        vines: (a, b),
                    });
                }
            }
        }
    }

    let e = |k: usize| DVector::from_fn(4, |r, _| if r == k { 1.0 } else { 0.0 });
    let u1 = (e(0) - e(1)) / 2f64.sqrt();
    let u2 = (e(0) + e(1) - e(2) * 2.0) / 6f64.sqrt();
    let beta = -2.0 * PI / 3.0;
    let corners = [e(3), u1.clone(), &u1 * beta.cos() + &u2 * beta.sin()];
    let legs = [(0.0, 0.3), (0.3, 0.7), (0.7, 1.0)];
    let psi0 = DMatrix::from_fn(4, 3, |r, c| if r == c { 1.0 } else { 0.0 });

    let mut normals = Vec::with_capacity(times.len());
    let mut frames = Vec::with_capacity(times.len());
    for &t in &times {
        let s = (t / cfg.period).clamp(0.0, 1.0);
        let mut psi = psi0.clone();
        let mut n = corners[0].clone();
        for (leg, &(lo, hi)) in legs.iter().enumerate() {
            if s <= lo {
                break;
            }
            let frac = ((s - lo) / (hi - lo)).min(1.0);
            let from = &corners[leg];
            let to = &corners[(leg + 1) % 3];
            let full = from.dot(to).clamp(-1.0, 1.0).acos();
            let rot = plane_rotation(from, to, frac * full);
            psi = &rot * psi;
            n = &rot * n;
        }
        normals.push(n);
        frames.push(psi);
    }
    Ok(VineyardData {
        times,
        vines,
        elder,
        normals,
        frames,
        crossings,
    })
}

/// Rotation by `angle` in the plane of two unit vectors, turning `from`
/// toward `to` and fixing the orthogonal complement.
fn plane_rotation(from: &DVector<f64>, to: &DVector<f64>, angle: f64) -> DMatrix<f64> {
    let n = from.len();
    let mut v = to - from * from.dot(to);
    let nv = v.norm();
    if nv < 1e-15 {
        return DMatrix::identity(n, n);
    }
    v /= nv;
    let (c, s) = (angle.cos(), angle.sin());
    DMatrix::identity(n, n)
        + (from * from.transpose() + &v * v.transpose()) * (c - 1.0)
        + (&v * from.transpose() - from * v.transpose()) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_rotation_moves_from_to_to() {
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let r = plane_rotation(&a, &b, PI / 2.0);
        assert!((&r * &a - &b).norm() < 1e-15);
        assert!((r.transpose() * &r - DMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn noise_is_reproducible() {
        let cfg = GeneratorConfig::new(GeneratorKind::DoubleCirclesApproach);
        let s = gen_double_circles(&cfg).unwrap();
        assert_eq!(add_noise(&s, 0.0, 3).unwrap(), s);
        assert_eq!(
            add_noise(&s, 0.05, 3).unwrap(),
            add_noise(&s, 0.05, 3).unwrap()
        );
        assert_ne!(
            add_noise(&s, 0.05, 3).unwrap(),
            add_noise(&s, 0.05, 4).unwrap()
        );
    }
}
