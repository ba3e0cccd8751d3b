//! CSV tables, the versioned JSON envelope, and the output bundle an
//! experiment hands to the single writer.

use std::fmt::Write;
use std::path::Path;

use hodge_core::persistence::PersistenceDiagram;
use hodge_core::tracking::TrackState;
use hodge_core::transport::CurvatureField;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::sweep::Sweep;

/// Bumped whenever a field of any JSON report changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub kind: &'a str,
    pub config: &'a RunConfig,
    pub results: &'a T,
}

pub fn json_report<T: Serialize>(kind: &str, config: &RunConfig, results: &T) -> String {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        config,
        results,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub format: Format,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<OutputFile>,
    pub checks: Vec<Check>,
    /// Largest fraction of gap failures over the grids of the run.
    pub gap_failure_fraction: f64,
}

impl Outcome {
    pub fn add(&mut self, name: impl Into<String>, format: Format, contents: String) {
        self.files.push(OutputFile {
            name: name.into(),
            format,
            contents,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes the files whose format is enabled, in the order they were added.
    pub fn write(&self, dir: &Path, cfg: &RunConfig) -> std::io::Result<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for f in self.files.iter().filter(|f| cfg.wants(f.format)) {
            std::fs::write(dir.join(&f.name), &f.contents)?;
            written.push(f.name.clone());
        }
        Ok(written)
    }
}

/// Empty for missing values so the tables stay rectangular.
fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn spectral_csv(sweep: &Sweep) -> String {
    let mut s = String::from("d,t,zero_dim,gap\n");
    for ((i, j), p) in sweep.points.iter() {
        let (z, g) = match &p.summary {
            Some(sm) => (sm.zero_dim.to_string(), sm.gap.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(s, "{},{},{z},{g}", sweep.d_values[i], sweep.times[j]);
    }
    s
}

pub fn heatmap_csv(d_values: &[f64], times: &[f64], curv: &CurvatureField) -> String {
    let mut s = String::from("d,t,curv_frobenius,masked\n");
    for ((i, j), v) in curv.norm.iter() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            d_values[i],
            times[j],
            opt(*v),
            u8::from(v.is_none())
        );
    }
    s
}

pub fn diagram_csv(diagrams: &[PersistenceDiagram], times: &[f64]) -> String {
    let mut s = String::from("t,birth,death,lifetime\n");
    for (dg, t) in diagrams.iter().zip(times) {
        for p in &dg.points {
            let _ = writeln!(s, "{t},{},{},{}", p.birth, p.death, p.lifetime());
        }
    }
    s
}

/// Row `j` carries the transition from `j-1`; the first row has none.
pub fn tracking_csv(track: &TrackState, times: &[f64]) -> String {
    let mut s = String::from("t,p1_b,p1_d,p2_b,p2_d,swap,margin,sep\n");
    for (j, (p, t)) in track.labeled.iter().zip(times).enumerate() {
        let (swap, margin) = if j == 0 {
            (0, String::new())
        } else {
            (
                u8::from(track.swap_flags[j - 1]),
                track.margins[j - 1].to_string(),
            )
        };
        let _ = writeln!(
            s,
            "{t},{},{},{},{},{swap},{margin},{}",
            p[0][0], p[0][1], p[1][0], p[1][1], track.separations[j]
        );
    }
    s
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or there are fewer than two samples.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&x, &y| v[x].total_cmp(&v[y]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}
