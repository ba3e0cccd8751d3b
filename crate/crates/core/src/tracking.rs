//! Persistence-diagram baselines: successive matching of the two dominant
//! points, holonomy-guided relabeling, and diagram drift under noise.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::persistence::{top2_points, PersistenceDiagram};

pub type Pair = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackState {
    /// Tracked labeled points per time.
    pub labeled: Vec<Pair>,
    /// One entry per transition `j-1 → j`, `j = 1..N`.
    pub swap_flags: Vec<bool>,
    pub margins: Vec<f64>,
    /// `‖p₁ − p₂‖` of the raw dominant points per time.
    pub separations: Vec<f64>,
}

impl TrackState {
    pub fn swap_count(&self) -> usize {
        self.swap_flags.iter().filter(|&&s| s).count()
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    dist2(a, b).sqrt()
}

/// Nearest-assignment tracking of the two longest-lived points.
///
/// At each step the tracked pair is compared with the new dominant pair under
/// the identity and the exchange assignment. A swap is flagged when the
/// exchange is strictly cheaper.
pub fn successive_match(diagrams: &[PersistenceDiagram]) -> Result<TrackState> {
    let raw: Vec<Pair> = diagrams.iter().map(top2_points).collect::<Result<_>>()?;
    let Some(&first) = raw.first() else {
        return Err(Error::InvalidInput("no diagrams to track".into()));
    };
    let mut labeled = vec![first];
    let mut swap_flags = Vec::with_capacity(raw.len().saturating_sub(1));
    let mut margins = Vec::with_capacity(raw.len().saturating_sub(1));
    for p in &raw[1..] {
        let prev = *labeled.last().unwrap();
        let c_id = dist2(prev[0], p[0]) + dist2(prev[1], p[1]);
        let c_swap = dist2(prev[0], p[1]) + dist2(prev[1], p[0]);
        let swap = c_swap < c_id;
        swap_flags.push(swap);
        margins.push((c_id - c_swap).abs());
        labeled.push(if swap { [p[1], p[0]] } else { *p });
    }
    let separations = raw.iter().map(|p| dist(p[0], p[1])).collect();
    Ok(TrackState {
        labeled,
        swap_flags,
        margins,
        separations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuidedTrack {
    pub relabeled: Vec<Pair>,
    /// `s_off − s_diag` per transition.
    pub swap_likeness: Vec<f64>,
    /// Mean over time of the label-wise distance to the successive-matching track.
    pub track_error: f64,
}

/// Relabels the dominant pair by following the transport steps: a step whose
/// off-diagonal mass exceeds its diagonal mass exchanges the labels, and the
/// exchange persists for all later times.
pub fn holonomy_guided_match(
    diagrams: &[PersistenceDiagram],
    steps: &[DMatrix<f64>],
) -> Result<GuidedTrack> {
    if let Some(q) = steps.iter().find(|q| q.shape() != (2, 2)) {
        return Err(Error::UnsupportedRank(q.nrows()));
    }
    let n = diagrams.len();
    if steps.len() + 1 < n {
        return Err(Error::ShapeMismatch {
            expected: format!("at least {} transport steps", n.saturating_sub(1)),
            found: format!("{}", steps.len()),
        });
    }
    let reference = successive_match(diagrams)?;
    let raw: Vec<Pair> = diagrams.iter().map(top2_points).collect::<Result<_>>()?;
    let mut exchanged = false;
    let mut relabeled = vec![raw[0]];
    let mut swap_likeness = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..n {
        let q = &steps[j - 1];
        let s = (q[(0, 1)].abs() + q[(1, 0)].abs()) - (q[(0, 0)].abs() + q[(1, 1)].abs());
        swap_likeness.push(s);
        if s > 0.0 {
            exchanged = !exchanged;
        }
        let p = raw[j];
        relabeled.push(if exchanged { [p[1], p[0]] } else { p });
    }
    let track_error = relabeled
        .iter()
        .zip(&reference.labeled)
        .map(|(a, b)| (dist2(a[0], b[0]) + dist2(a[1], b[1])).sqrt())
        .sum::<f64>()
        / n as f64;
    Ok(GuidedTrack {
        relabeled,
        swap_likeness,
        track_error,
    })
}

/// Half the cheaper of the two total matching distances between the dominant
/// pairs.
pub fn pair_drift(p: &Pair, q: &Pair) -> f64 {
    let id = dist(p[0], q[0]) + dist(p[1], q[1]);
    let sw = dist(p[0], q[1]) + dist(p[1], q[0]);
    0.5 * id.min(sw)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub per_time: Vec<f64>,
    pub mean: f64,
}

pub fn pd_drift(
    baseline: &[PersistenceDiagram],
    noisy: &[PersistenceDiagram],
) -> Result<DriftReport> {
    if baseline.len() != noisy.len() || baseline.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} diagrams", baseline.len()),
            found: format!("{}", noisy.len()),
        });
    }
    let per_time: Vec<f64> = baseline
        .iter()
        .zip(noisy)
        .map(|(a, b)| Ok(pair_drift(&top2_points(a)?, &top2_points(b)?)))
        .collect::<Result<_>>()?;
    let mean = per_time.iter().sum::<f64>() / per_time.len() as f64;
    Ok(DriftReport { per_time, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_shift_drift() {
        let p = [[0.0, 1.0], [0.5, 3.0]];
        let q = [[0.2, 1.0], [0.7, 3.0]];
        assert!((pair_drift(&p, &q) - 0.2).abs() < 1e-15);
        assert_eq!(pair_drift(&p, &[p[1], p[0]]), 0.0);
        assert_eq!(pair_drift(&p, &p), 0.0);
    }
}
