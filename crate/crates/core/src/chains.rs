//! Ambient chain space of the full 2-skeleton and the Vietoris–Rips complexes
//! embedded in it.

use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub time: f64,
    pub points: Vec<Point>,
}

/// Time-indexed point clouds sharing one vertex set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCloudSeries {
    frames: Vec<Frame>,
}

impl PointCloudSeries {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let n = frames
            .first()
            .map(|f| f.points.len())
            .ok_or_else(|| invalid("series has no frames"))?;
        if n < 3 {
            return Err(invalid(format!(
                "need at least 3 points per frame, got {n}"
            )));
        }
        for (j, f) in frames.iter().enumerate() {
            if f.points.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n} points"),
                    found: format!("{} points in frame {j}", f.points.len()),
                });
            }
            if !f.time.is_finite() || f.points.iter().flatten().any(|c| !c.is_finite()) {
                return Err(invalid(format!("non-finite value in frame {j}")));
            }
            if j > 0 && f.time <= frames[j - 1].time {
                return Err(invalid(format!(
                    "times not strictly increasing at frame {j}"
                )));
            }
        }
        Ok(PointCloudSeries { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn n_points(&self) -> usize {
        self.frames[0].points.len()
    }

    pub fn n_times(&self) -> usize {
        self.frames.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y\n");
        for f in &self.frames {
            for p in &f.points {
                let _ = writeln!(s, "{},{},{}", f.time, p[0], p[1]);
            }
        }
        s
    }

    /// Reads the `t,x,y` format. Consecutive rows with equal `t` form a frame.
    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let mut frames: Vec<Frame> = Vec::new();
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if !saw_header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["t", "x", "y"] {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected header t,x,y, got {line}"),
                    });
                }
                saw_header = true;
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if vals.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected 3 columns, got {}", vals.len()),
                });
            }
            match frames.last_mut() {
                Some(f) if f.time == vals[0] => f.points.push([vals[1], vals[2]]),
                _ => frames.push(Frame {
                    time: vals[0],
                    points: vec![[vals[1], vals[2]]],
                }),
            }
        }
        if !saw_header {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            });
        }
        PointCloudSeries::new(frames)
    }
}

/// Edge and triangle bases of the full simplex on `N` vertices, in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientChainSpace {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    triangles: Vec<[usize; 3]>,
    /// Edge indices of the faces `(j,k)`, `(i,k)`, `(i,j)` of each triangle.
    triangle_faces: Vec<[usize; 3]>,
}

/// Incidence coefficients of a triangle on its faces `(j,k)`, `(i,k)`, `(i,j)`.
pub const TRIANGLE_FACE_SIGNS: [f64; 3] = [1.0, -1.0, 1.0];

pub fn build_ambient(n: usize) -> Result<AmbientChainSpace> {
    if n < 3 {
        return Err(invalid(format!("ambient complex needs N >= 3, got {n}")));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j));
        }
    }
    let mut amb = AmbientChainSpace {
        vertex_count: n,
        edges,
        triangles: Vec::new(),
        triangle_faces: Vec::new(),
    };
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                amb.triangles.push([i, j, k]);
                amb.triangle_faces.push([
                    amb.edge_index(j, k),
                    amb.edge_index(i, k),
                    amb.edge_index(i, j),
                ]);
            }
        }
    }
    Ok(amb)
}

impl AmbientChainSpace {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_faces(&self) -> &[[usize; 3]] {
        &self.triangle_faces
    }

    /// Position of edge `{i, j}` in the lexicographic basis.
    pub fn edge_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(j < self.vertex_count && i != j);
        let n = self.vertex_count;
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    /// Vertex-edge incidence of the full complex.
    pub fn b1_full(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.vertex_count, self.n_edges());
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            b[(i, e)] = -1.0;
            b[(j, e)] = 1.0;
        }
        b
    }

    /// Edge-triangle incidence of the full complex.
    pub fn b2_full(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n_edges(), self.n_triangles());
        for (t, faces) in self.triangle_faces.iter().enumerate() {
            for (f, s) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
                b[(*f, t)] = s;
            }
        }
        b
    }
}

/// Filtration values of every ambient simplex at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiltrationFrame {
    pub time_index: usize,
    pub edge_thresholds: Vec<f64>,
    pub triangle_thresholds: Vec<f64>,
}

pub fn compute_thresholds(
    points: &[Point],
    time_index: usize,
    amb: &AmbientChainSpace,
) -> Result<FiltrationFrame> {
    if points.len() != amb.vertex_count() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} points", amb.vertex_count()),
            found: format!("{} points", points.len()),
        });
    }
    let edge_thresholds: Vec<f64> = amb
        .edges()
        .iter()
        .map(|&(i, j)| (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]))
        .collect();
    let triangle_thresholds = amb
        .triangle_faces()
        .iter()
        .map(|f| {
            edge_thresholds[f[0]]
                .max(edge_thresholds[f[1]])
                .max(edge_thresholds[f[2]])
        })
        .collect();
    Ok(FiltrationFrame {
        time_index,
        edge_thresholds,
        triangle_thresholds,
    })
}

/// The Vietoris–Rips complex at one scale, as active masks over the ambient
/// bases. Boundary matrices are materialized on request.
#[derive(Debug, Clone)]
pub struct BoundaryMatrices<'a> {
    amb: &'a AmbientChainSpace,
    pub active_edges: Vec<bool>,
    pub active_triangles: Vec<bool>,
}

pub fn boundary_at_scale<'a>(
    thresh: &FiltrationFrame,
    amb: &'a AmbientChainSpace,
    d: f64,
) -> Result<BoundaryMatrices<'a>> {
    if d.is_nan() || d < 0.0 {
        return Err(invalid(format!("scale must be >= 0, got {d}")));
    }
    if thresh.edge_thresholds.len() != amb.n_edges()
        || thresh.triangle_thresholds.len() != amb.n_triangles()
    {
        return Err(Error::ShapeMismatch {
            expected: format!(
                "{} edge / {} triangle thresholds",
                amb.n_edges(),
                amb.n_triangles()
            ),
            found: format!(
                "{} / {}",
                thresh.edge_thresholds.len(),
                thresh.triangle_thresholds.len()
            ),
        });
    }
    Ok(BoundaryMatrices {
        amb,
        active_edges: thresh.edge_thresholds.iter().map(|&r| r <= d).collect(),
        active_triangles: thresh.triangle_thresholds.iter().map(|&r| r <= d).collect(),
    })
}

impl<'a> BoundaryMatrices<'a> {
    pub fn ambient(&self) -> &'a AmbientChainSpace {
        self.amb
    }

    pub fn n_active_edges(&self) -> usize {
        self.active_edges.iter().filter(|&&a| a).count()
    }

    pub fn n_active_triangles(&self) -> usize {
        self.active_triangles.iter().filter(|&&a| a).count()
    }

    pub fn b1(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.amb.vertex_count(), self.amb.n_edges());
        for (e, &(i, j)) in self.amb.edges().iter().enumerate() {
            if self.active_edges[e] {
                b[(i, e)] = -1.0;
                b[(j, e)] = 1.0;
            }
        }
        b
    }

    pub fn b2(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.amb.n_edges(), self.amb.n_triangles());
        for (t, faces) in self.amb.triangle_faces().iter().enumerate() {
            if self.active_triangles[t] {
                for (f, s) in faces.iter().zip(TRIANGLE_FACE_SIGNS) {
                    b[(*f, t)] = s;
                }
            }
        }
        b
    }

    /// Largest entry of `|B1·B2|`, accumulated in integers.
    pub fn chain_defect(&self) -> i64 {
        let edges = self.amb.edges();
        let mut worst = 0;
        let mut acc = vec![0i64; self.amb.vertex_count()];
        for (t, faces) in self.amb.triangle_faces().iter().enumerate() {
            if !self.active_triangles[t] {
                continue;
            }
            acc.iter_mut().for_each(|a| *a = 0);
            for (&f, s) in faces.iter().zip([1i64, -1, 1]) {
                if self.active_edges[f] {
                    let (i, j) = edges[f];
                    acc[i] -= s;
                    acc[j] += s;
                }
            }
            worst = acc.iter().fold(worst, |w, a| w.max(a.abs()));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ambient_bases() {
        let a = build_ambient(3).unwrap();
        assert_eq!(a.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(a.triangles(), &[[0, 1, 2]]);
        let a4 = build_ambient(4).unwrap();
        assert_eq!((a4.n_edges(), a4.n_triangles()), (6, 4));
        assert!(build_ambient(2).is_err());
    }

    #[test]
    fn edge_index_matches_enumeration() {
        let a = build_ambient(9).unwrap();
        for (e, &(i, j)) in a.edges().iter().enumerate() {
            assert_eq!(a.edge_index(i, j), e);
            assert_eq!(a.edge_index(j, i), e);
        }
    }

    #[test]
    fn three_four_five_thresholds() {
        let a = build_ambient(3).unwrap();
        let f = compute_thresholds(&[[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]], 0, &a).unwrap();
        assert_eq!(f.edge_thresholds, vec![3.0, 4.0, 5.0]);
        assert_eq!(f.triangle_thresholds, vec![5.0]);
    }

    #[test]
    fn collinear_diameter() {
        let a = build_ambient(3).unwrap();
        let f = compute_thresholds(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 0, &a).unwrap();
        assert_eq!(f.edge_thresholds, vec![1.0, 2.0, 1.0]);
        assert_eq!(f.triangle_thresholds, vec![2.0]);
    }

    #[test]
    fn negative_scale_rejected() {
        let a = build_ambient(3).unwrap();
        let f = compute_thresholds(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 0, &a).unwrap();
        assert!(boundary_at_scale(&f, &a, -0.1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = PointCloudSeries::new(vec![
            Frame {
                time: 0.0,
                points: vec![[0.0, 0.1], [1.5, -2.0], [0.3, 0.3]],
            },
            Frame {
                time: 0.5,
                points: vec![[0.1, 0.1], [1.0 / 3.0, -2.0], [0.3, 1e-17]],
            },
        ])
        .unwrap();
        let back = PointCloudSeries::from_csv(s.to_csv().as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_rejects_ragged_frames() {
        let text = "t,x,y\n0,0,0\n0,1,0\n0,0,1\n1,0,0\n1,1,0\n";
        assert!(matches!(
            PointCloudSeries::from_csv(text.as_bytes()),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
