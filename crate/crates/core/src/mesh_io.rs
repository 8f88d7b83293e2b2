//! File formats: mesh JSON, CSV tables, and SVG rendering.
//!
//! Mesh JSON schema:
//! `{ "vertices": N, "faces": [[i,j,k],...], "positions": [[x,y],...]?,
//!    "model": "poincare"?, "lengths": {"i-j": l, ...}? }`
//! with `positions` and `lengths` optional and independent. Disk embeddings
//! carry `"model": "poincare"`. Length keys are sorted `i-j` pairs.
//!
//! CSV tables use fixed headers: `vertex,K` (curvature), `i,j,mu` (edge
//! weights / weighted graphs), `t,vertex,u,K` (flow trajectories), `face,H`
//! (per-face dilatation). Floats print in shortest round-trip form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::complex::{build_triangulation, ComplexError, Triangulation};
use crate::metric::{Curvature, MetricError, PlMetric};

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("bad format: {0}")]
    Format(String),
    #[error(transparent)]
    Mesh(#[from] ComplexError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// On-disk mesh document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: usize,
    pub faces: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<BTreeMap<String, f64>>,
}

impl MeshFile {
    pub fn new(tri: &Triangulation) -> Self {
        MeshFile {
            vertices: tri.n_vertices(),
            faces: tri.faces().to_vec(),
            positions: None,
            model: None,
            lengths: None,
        }
    }

    pub fn with_positions(mut self, pos: &[[f64; 2]]) -> Self {
        self.positions = Some(pos.to_vec());
        self
    }

    pub fn with_model(mut self, model: &str) -> Self {
        self.model = Some(model.to_string());
        self
    }

    pub fn with_lengths(mut self, tri: &Triangulation, metric: &PlMetric) -> Self {
        self.lengths = Some(
            tri.edges()
                .iter()
                .zip(metric.lengths())
                .map(|(&(i, j), &l)| (format!("{i}-{j}"), l))
                .collect(),
        );
        self
    }

    /// Validates and rebuilds the triangulation.
    pub fn triangulation(&self) -> Result<Triangulation, IoError> {
        let tri = build_triangulation(self.vertices, &self.faces)?;
        if let Some(pos) = &self.positions {
            if pos.len() != self.vertices {
                return Err(IoError::Format(format!(
                    "{} positions for {} vertices",
                    pos.len(),
                    self.vertices
                )));
            }
        }
        Ok(tri)
    }

    /// Decodes the `lengths` table against the rebuilt triangulation. Keys
    /// may be written in either orientation; every edge must be covered.
    pub fn metric(&self, tri: &Triangulation) -> Result<Option<PlMetric>, IoError> {
        let Some(table) = &self.lengths else { return Ok(None) };
        let mut lengths = vec![f64::NAN; tri.n_edges()];
        for (key, &l) in table {
            let (a, b) = key
                .split_once('-')
                .ok_or_else(|| IoError::Format(format!("bad length key {key:?}")))?;
            let a: usize = a.parse().map_err(|_| IoError::Format(format!("bad length key {key:?}")))?;
            let b: usize = b.parse().map_err(|_| IoError::Format(format!("bad length key {key:?}")))?;
            let e = tri
                .edge_id(a, b)
                .ok_or_else(|| IoError::Format(format!("length key {key:?} is not an edge")))?;
            if !lengths[e].is_nan() {
                return Err(IoError::Format(format!("edge {a}-{b} listed twice")));
            }
            lengths[e] = l;
        }
        if let Some(e) = lengths.iter().position(|l| l.is_nan()) {
            let (i, j) = tri.edges()[e];
            return Err(IoError::Format(format!("missing length for edge {i}-{j}")));
        }
        Ok(Some(PlMetric::new(tri, lengths)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `vertex,K` table.
pub fn curvature_csv(k: &Curvature) -> String {
    let mut out = String::from("vertex,K\n");
    for (v, val) in k.values().iter().enumerate() {
        out.push_str(&format!("{v},{val}\n"));
    }
    out
}

/// `i,j,mu` table from parallel edge/weight slices.
pub fn weights_csv(edges: &[(usize, usize)], mu: &[f64]) -> String {
    let mut out = String::from("i,j,mu\n");
    for (&(i, j), w) in edges.iter().zip(mu) {
        out.push_str(&format!("{i},{j},{w}\n"));
    }
    out
}

/// Parses an `i,j,mu` table back into weighted edges.
pub fn parse_weights_csv(s: &str) -> Result<Vec<((usize, usize), f64)>, IoError> {
    let mut lines = s.lines();
    match lines.next() {
        Some(h) if h.trim() == "i,j,mu" => {}
        other => return Err(IoError::Format(format!("expected header i,j,mu, got {other:?}"))),
    }
    let mut edges = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(IoError::Format(format!("row {}: expected 3 columns", k + 2)));
        }
        let bad = |e: &dyn std::fmt::Display| IoError::Format(format!("row {}: {e}", k + 2));
        let i: usize = cols[0].parse().map_err(|e| bad(&e))?;
        let j: usize = cols[1].parse().map_err(|e| bad(&e))?;
        let mu: f64 = cols[2].parse().map_err(|e| bad(&e))?;
        edges.push(((i, j), mu));
    }
    Ok(edges)
}

/// `t,vertex,u,K` table; one row per (time sample, vertex).
pub fn trajectory_csv(times: &[f64], u: &[Vec<f64>], k: &[Vec<f64>]) -> String {
    let mut out = String::from("t,vertex,u,K\n");
    for ((t, us), ks) in times.iter().zip(u).zip(k) {
        for (v, (uv, kv)) in us.iter().zip(ks).enumerate() {
            out.push_str(&format!("{t},{v},{uv},{kv}\n"));
        }
    }
    out
}

/// `face,H` table of per-face dilatations.
pub fn dilatation_csv(h: &[f64]) -> String {
    let mut out = String::from("face,H\n");
    for (f, val) in h.iter().enumerate() {
        out.push_str(&format!("{f},{val}\n"));
    }
    out
}

/// Renders a straight-line embedding as SVG: faces as polygons, optionally
/// colored by a per-vertex scalar (face color = vertex mean) on a
/// blue–white–red scale.
pub fn svg_embedding(tri: &Triangulation, pos: &[[f64; 2]], scalar: Option<&[f64]>, width: u32) -> String {
    assert_eq!(pos.len(), tri.n_vertices());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pos {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
    let margin = 0.05 * span;
    let view = [lo[0] - margin, lo[1] - margin, hi[0] - lo[0] + 2.0 * margin, hi[1] - lo[1] + 2.0 * margin];
    let height = (width as f64 * view[3] / view[2]).round().max(1.0) as u32;
    let stroke = 0.004 * span;
    let (smin, smax) = scalar
        .map(|s| {
            let mn = s.iter().cloned().fold(f64::INFINITY, f64::min);
            let mx = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (mn, mx)
        })
        .unwrap_or((0.0, 0.0));
    let color = |f: &[usize; 3]| -> String {
        match scalar {
            None => "#f4f4f0".into(),
            Some(s) => {
                let mean = (s[f[0]] + s[f[1]] + s[f[2]]) / 3.0;
                let t = if smax > smin { (mean - smin) / (smax - smin) } else { 0.5 };
                // blue (0) → white (0.5) → red (1)
                let (r, g, b) = if t < 0.5 {
                    let s = t * 2.0;
                    (
                        (255.0 * (0.25 + 0.75 * s)) as u8,
                        (255.0 * (0.35 + 0.65 * s)) as u8,
                        255u8,
                    )
                } else {
                    let s = (t - 0.5) * 2.0;
                    (
                        255u8,
                        (255.0 * (1.0 - 0.65 * s)) as u8,
                        (255.0 * (1.0 - 0.75 * s)) as u8,
                    )
                };
                format!("#{r:02x}{g:02x}{b:02x}")
            }
        }
    };
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"{} {} {} {}\">\n",
        view[0], view[1], view[2], view[3]
    );
    // flip y so the embedding displays with the usual orientation
    out.push_str(&format!(
        "<g transform=\"translate(0,{}) scale(1,-1)\">\n",
        2.0 * view[1] + view[3]
    ));
    for f in tri.faces() {
        out.push_str(&format!(
            "<polygon points=\"{},{} {},{} {},{}\" fill=\"{}\" stroke=\"#333\" stroke-width=\"{stroke}\"/>\n",
            pos[f[0]][0],
            pos[f[0]][1],
            pos[f[1]][0],
            pos[f[1]][1],
            pos[f[2]][0],
            pos[f[2]][1],
            color(f),
        ));
    }
    out.push_str("</g>\n</svg>\n");
    out
}
