//! Degree-one Vietoris–Rips persistence with real representative cycles.

use nalgebra::DVector;
use serde::Serialize;

use crate::chains::{AmbientChainSpace, FiltrationFrame};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistencePoint {
    pub birth: f64,
    /// `+∞` for classes that never die.
    pub death: f64,
    /// Signed cycle in the ambient edge basis; it closes over the integers.
    #[serde(skip)]
    pub rep_cycle: DVector<f64>,
    pub birth_edge: usize,
    pub death_triangle: Option<usize>,
}

impl PersistencePoint {
    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_alive(&self, d: f64) -> bool {
        self.birth <= d && d < self.death
    }

    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceDiagram {
    pub time_index: usize,
    /// Descending lifetime, ties by ascending birth.
    pub points: Vec<PersistencePoint>,
}

/// Standard column reduction over GF(2) on the Rips filtration of the full
/// 2-skeleton. Simplices enter by threshold, then dimension, then basis index.
///
/// A positive edge closes a cycle with the spanning forest of the edges before
/// it. That cycle, walked along its orientation, is the representative, so its
/// coefficients are the ±1 lift of the reduced column.
pub fn compute_h1_persistence(
    thresh: &FiltrationFrame,
    amb: &AmbientChainSpace,
) -> PersistenceDiagram {
    let n = amb.vertex_count();
    let m = amb.n_edges();
    let edges = amb.edges();
    let mut edge_order: Vec<usize> = (0..m).collect();
    edge_order.sort_by(|&a, &b| {
        thresh.edge_thresholds[a]
            .total_cmp(&thresh.edge_thresholds[b])
            .then(a.cmp(&b))
    });
    let mut position = vec![0usize; m];
    for (p, &e) in edge_order.iter().enumerate() {
        position[e] = p;
    }

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut forest: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cycles: Vec<Option<DVector<f64>>> = vec![None; m];
    for &e in &edge_order {
        let (u, v) = edges[e];
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru.max(rv)] = ru.min(rv);
            forest[u].push(v);
            forest[v].push(u);
            continue;
        }
        let mut c = DVector::zeros(m);
        c[e] = 1.0;
        // Return from v to u through the forest.
        let path = forest_path(&forest, v, u);
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            c[amb.edge_index(a, b)] = if a < b { 1.0 } else { -1.0 };
        }
        cycles[e] = Some(c);
    }

    let n_tri = amb.n_triangles();
    let mut tri_order: Vec<usize> = (0..n_tri).collect();
    tri_order.sort_by(|&a, &b| {
        thresh.triangle_thresholds[a]
            .total_cmp(&thresh.triangle_thresholds[b])
            .then(a.cmp(&b))
    });
    let mut reduced_by_low: Vec<Option<Vec<usize>>> = vec![None; m];
    let mut death_of: Vec<Option<usize>> = vec![None; m];
    for &t in &tri_order {
        let mut col: Vec<usize> = amb.triangle_faces()[t]
            .iter()
            .map(|&f| position[f])
            .collect();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match &reduced_by_low[low] {
                Some(pivot) => col = symmetric_difference(&col, pivot),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            death_of[edge_order[low]] = Some(t);
            reduced_by_low[low] = Some(col);
        }
    }

    let mut points: Vec<PersistencePoint> = Vec::new();
    for e in 0..m {
        let Some(c) = cycles[e].take() else { continue };
        let birth = thresh.edge_thresholds[e];
        let death = death_of[e].map_or(f64::INFINITY, |t| thresh.triangle_thresholds[t]);
        if death == birth {
            continue;
        }
        points.push(PersistencePoint {
            birth,
            death,
            rep_cycle: c,
            birth_edge: e,
            death_triangle: death_of[e],
        });
    }
    sort_points(&mut points);
    PersistenceDiagram {
        time_index: thresh.time_index,
        points,
    }
}

fn sort_points(points: &mut [PersistencePoint]) {
    points.sort_by(|a, b| {
        b.lifetime()
            .total_cmp(&a.lifetime())
            .then(a.birth.total_cmp(&b.birth))
            .then(a.birth_edge.cmp(&b.birth_edge))
    });
}

fn forest_path(forest: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; forest.len()];
    prev[from] = from;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        if x == to {
            break;
        }
        for &y in &forest[x] {
            if prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    let mut path = vec![to];
    let mut x = to;
    while x != from {
        x = prev[x];
        path.push(x);
    }
    path.reverse();
    path
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// The `k` longest-lived intervals alive at scale `d`, longest first.
pub fn select_dominant_alive(
    diagram: &PersistenceDiagram,
    d: f64,
    k: usize,
) -> Vec<&PersistencePoint> {
    diagram
        .points
        .iter()
        .filter(|p| p.is_alive(d))
        .take(k)
        .collect()
}

pub fn alive_count(diagram: &PersistenceDiagram, d: f64) -> usize {
    diagram.points.iter().filter(|p| p.is_alive(d)).count()
}

/// `(birth, death)` of the two longest-lived finite points.
pub fn top2_points(diagram: &PersistenceDiagram) -> Result<[[f64; 2]; 2]> {
    let mut finite = diagram.points.iter().filter(|p| p.is_finite());
    match (finite.next(), finite.next()) {
        (Some(a), Some(b)) => Ok([[a.birth, a.death], [b.birth, b.death]]),
        _ => Err(Error::ShortDiagram {
            time_index: diagram.time_index,
            found: diagram.points.iter().filter(|p| p.is_finite()).count(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{build_ambient, compute_thresholds};

    fn point(birth: f64, death: f64, edge: usize) -> PersistencePoint {
        PersistencePoint {
            birth,
            death,
            rep_cycle: DVector::zeros(1),
            birth_edge: edge,
            death_triangle: None,
        }
    }

    fn diagram(mut pts: Vec<PersistencePoint>) -> PersistenceDiagram {
        sort_points(&mut pts);
        PersistenceDiagram {
            time_index: 7,
            points: pts,
        }
    }

    #[test]
    fn three_points_have_no_persistent_loop() {
        let amb = build_ambient(3).unwrap();
        let f = compute_thresholds(&[[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]], 0, &amb).unwrap();
        assert!(compute_h1_persistence(&f, &amb).points.is_empty());
    }

    #[test]
    fn dominant_selection_orders_by_lifetime() {
        let d = diagram(vec![
            point(0.0, 1.0, 0),
            point(0.0, 5.0, 1),
            point(0.5, 3.5, 2),
            point(3.0, 9.0, 3),
        ]);
        let sel = select_dominant_alive(&d, 0.7, 2);
        assert_eq!(
            sel.iter().map(|p| p.lifetime()).collect::<Vec<_>>(),
            vec![5.0, 3.0]
        );
        assert!(select_dominant_alive(&d, 20.0, 2).is_empty());
    }

    #[test]
    fn infinite_intervals_rank_first() {
        let d = diagram(vec![point(0.0, 5.0, 0), point(1.0, f64::INFINITY, 1)]);
        assert_eq!(select_dominant_alive(&d, 1.5, 1)[0].birth_edge, 1);
        assert!(top2_points(&d).is_err());
    }

    #[test]
    fn top2_breaks_ties_by_birth() {
        let d = diagram(vec![
            point(2.0, 4.0, 0),
            point(1.0, 3.0, 1),
            point(0.0, 1.0, 2),
        ]);
        assert_eq!(top2_points(&d).unwrap(), [[1.0, 3.0], [2.0, 4.0]]);
        let two = diagram(vec![point(0.0, 1.0, 0), point(0.0, 4.0, 1)]);
        assert_eq!(top2_points(&two).unwrap(), [[0.0, 4.0], [0.0, 1.0]]);
        let short = diagram(vec![point(0.0, 1.0, 0)]);
        assert_eq!(
            top2_points(&short),
            Err(Error::ShortDiagram {
                time_index: 7,
                found: 1
            })
        );
    }
}
