//! Piecewise-linear metrics and their discrete conformal geometry.
//!
//! A [`PlMetric`] assigns a positive length to every edge with the strict
//! triangle inequality in every face. Derived quantities:
//!
//! * corner angles θ^i_jk, computed in the half-angle arctangent form
//!   `θ = 2·atan2(√((s−b)(s−c)), √(s(s−a)))`, which stays accurate for
//!   needle triangles where the law-of-cosines form loses digits;
//! * discrete curvature `K_i = 2π − Σ θ` at interior vertices and boundary
//!   turning `k_i = π − Σ θ` on the boundary loop;
//! * cotangent edge weights `μ_ij = ½(cot θ^k1_ij + cot θ^k2_ij)` (single
//!   half-cotangent on boundary edges);
//! * the curvature differential `dK_i = −Σ_j μ_ij(u)(du_j − du_i)`.
//!
//! A conformal change of factor `u` rescales `l'_ij = e^{(u_i+u_j)/2} l_ij`.
//! Delaunay classification compares opposite-angle sums against π with the
//! slack [`DELAUNAY_SLACK`]; sums within the slack are the cocircular
//! boundary case and still count as Delaunay.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::complex::Triangulation;

/// Slack for Delaunay angle-sum comparisons (absolute, radians).
pub const DELAUNAY_SLACK: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum MetricError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected {expected} edge lengths, got {got}")]
    LengthCountMismatch { expected: usize, got: usize },
    #[error("expected {expected} vertex factors, got {got}")]
    FactorCountMismatch { expected: usize, got: usize },
    #[error("edge {i}-{j} has non-positive or non-finite length {length}")]
    NonPositiveLength { i: usize, j: usize, length: f64 },
    #[error("face {face} with lengths {lengths:?} violates the strict triangle inequality")]
    TriangleInequalityViolated {
        face: usize,
        lengths: [f64; 3],
        /// Full raw length vector, so the offending metric can be inspected
        /// even though no valid `PlMetric` exists.
        raw: Vec<f64>,
    },
}

/// Edge lengths indexed like `tri.edges()`; valid by construction.
#[derive(Debug, Clone)]
pub struct PlMetric {
    lengths: Vec<f64>,
}

impl PlMetric {
    pub fn new(tri: &Triangulation, lengths: Vec<f64>) -> Result<Self, MetricError> {
        if lengths.len() != tri.n_edges() {
            return Err(MetricError::LengthCountMismatch { expected: tri.n_edges(), got: lengths.len() });
        }
        for (e, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                let (i, j) = tri.edges()[e];
                return Err(MetricError::NonPositiveLength { i, j, length: l });
            }
        }
        for (f, _) in tri.faces().iter().enumerate() {
            let [a, b, c] = face_lengths(tri, &lengths, f);
            if a >= b + c || b >= a + c || c >= a + b {
                return Err(MetricError::TriangleInequalityViolated {
                    face: f,
                    lengths: [a, b, c],
                    raw: lengths.clone(),
                });
            }
        }
        Ok(PlMetric { lengths })
    }

    /// Induced metric of a straight-line embedding.
    pub fn from_positions(tri: &Triangulation, pos: &[[f64; 2]]) -> Result<Self, MetricError> {
        if pos.len() != tri.n_vertices() {
            return Err(MetricError::InvalidParameter(format!(
                "expected {} positions, got {}",
                tri.n_vertices(),
                pos.len()
            )));
        }
        let lengths = tri
            .edges()
            .iter()
            .map(|&(i, j)| ((pos[i][0] - pos[j][0]).powi(2) + (pos[i][1] - pos[j][1]).powi(2)).sqrt())
            .collect();
        PlMetric::new(tri, lengths)
    }

    /// All edges set to one length (hex lattices and friends).
    pub fn uniform(tri: &Triangulation, l: f64) -> Result<Self, MetricError> {
        PlMetric::new(tri, vec![l; tri.n_edges()])
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }
}

/// Lengths of face `f` ordered `[l(jk), l(ik), l(ij)]` for face `[i, j, k]`,
/// i.e. entry `c` is the side opposite corner `c`.
fn face_lengths(tri: &Triangulation, lengths: &[f64], f: usize) -> [f64; 3] {
    let [i, j, k] = tri.faces()[f];
    let l = |a: usize, b: usize| lengths[tri.edge_id(a, b).unwrap()];
    [l(j, k), l(i, k), l(i, j)]
}

/// Per-vertex conformal factor.
#[derive(Debug, Clone)]
pub struct ConformalFactor {
    u: Vec<f64>,
}

impl ConformalFactor {
    pub fn new(tri: &Triangulation, u: Vec<f64>) -> Result<Self, MetricError> {
        if u.len() != tri.n_vertices() {
            return Err(MetricError::FactorCountMismatch { expected: tri.n_vertices(), got: u.len() });
        }
        if let Some(bad) = u.iter().find(|x| !x.is_finite()) {
            return Err(MetricError::InvalidParameter(format!("non-finite factor {bad}")));
        }
        Ok(ConformalFactor { u })
    }

    pub fn zero(tri: &Triangulation) -> Self {
        ConformalFactor { u: vec![0.0; tri.n_vertices()] }
    }

    pub(crate) fn raw(u: Vec<f64>) -> Result<Self, MetricError> {
        if let Some(bad) = u.iter().find(|x| !x.is_finite()) {
            return Err(MetricError::InvalidParameter(format!("non-finite factor {bad}")));
        }
        Ok(ConformalFactor { u })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }
}

/// Corner angles per face, aligned with the face's vertex order.
#[derive(Debug, Clone)]
pub struct CornerAngles {
    angles: Vec<[f64; 3]>,
}

impl CornerAngles {
    pub fn per_face(&self) -> &[[f64; 3]] {
        &self.angles
    }

    /// Angle at `vertex` inside face `f`.
    pub fn at(&self, tri: &Triangulation, f: usize, vertex: usize) -> f64 {
        let pos = tri.faces()[f].iter().position(|&v| v == vertex).expect("vertex not in face");
        self.angles[f][pos]
    }

    /// Sum of angles around `vertex`.
    pub fn angle_sum(&self, tri: &Triangulation, vertex: usize) -> f64 {
        tri.vertex_faces(vertex).iter().map(|&f| self.at(tri, f, vertex)).sum()
    }
}

/// Corner angles of every face via the half-angle arctangent form.
pub fn corner_angles(tri: &Triangulation, metric: &PlMetric) -> CornerAngles {
    let angles = tri
        .faces()
        .iter()
        .enumerate()
        .map(|(f, _)| {
            let [a, b, c] = face_lengths(tri, metric.lengths(), f);
            let s = 0.5 * (a + b + c);
            let angle = |opp: f64, adj1: f64, adj2: f64| {
                let num = ((s - adj1).max(0.0) * (s - adj2).max(0.0)).sqrt();
                let den = (s * (s - opp).max(0.0)).sqrt();
                2.0 * num.atan2(den)
            };
            [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
        })
        .collect();
    CornerAngles { angles }
}

/// Outcome of [`validate_nondegeneracy`].
#[derive(Debug, Clone)]
pub struct NondegeneracyReport {
    pub ok: bool,
    pub min_angle: f64,
    /// Offending (face, corner, angle) when not ok.
    pub witness: Option<(usize, usize, f64)>,
}

/// Checks every corner angle against the lower bound `eps ∈ (0, π/3]`.
pub fn validate_nondegeneracy(
    tri: &Triangulation,
    metric: &PlMetric,
    eps: f64,
) -> Result<NondegeneracyReport, MetricError> {
    if !(eps > 0.0 && eps <= PI / 3.0 + 1e-15) {
        return Err(MetricError::InvalidParameter(format!(
            "nondegeneracy bound must lie in (0, π/3], got {eps}"
        )));
    }
    let angles = corner_angles(tri, metric);
    let mut min_angle = f64::INFINITY;
    let mut witness = None;
    for (f, tri_angles) in angles.per_face().iter().enumerate() {
        for (c, &th) in tri_angles.iter().enumerate() {
            if th < min_angle {
                min_angle = th;
                if th < eps {
                    witness = Some((f, c, th));
                }
            }
        }
    }
    Ok(NondegeneracyReport { ok: witness.is_none(), min_angle, witness })
}

/// Delaunay classification of a PL metric.
#[derive(Debug, Clone, PartialEq)]
pub enum DelaunayClass {
    /// Every opposite-angle sum ≤ π − ε* with ε* beyond the slack.
    UniformlyDelaunay { eps_star: f64 },
    /// Some sum within [`DELAUNAY_SLACK`] of π (cocircular boundary case).
    Delaunay,
    /// Witness edge with its opposite-angle sum > π + slack.
    NotDelaunay { edge: (usize, usize), angle_sum: f64 },
}

/// Checks the opposite-angle-sum condition `θ^{k1}_ij + θ^{k2}_ij ≤ π` on
/// every interior edge.
pub fn delaunay_check(tri: &Triangulation, metric: &PlMetric) -> DelaunayClass {
    let angles = corner_angles(tri, metric);
    let mut max_sum = f64::NEG_INFINITY;
    let mut max_edge = (0, 0);
    for (e, &(i, j)) in tri.edges().iter().enumerate() {
        if !tri.is_interior_edge(e) {
            continue;
        }
        let sum: f64 = tri.edge_faces(e).iter().map(|&(f, opp)| angles.at(tri, f, opp)).sum();
        if sum > max_sum {
            max_sum = sum;
            max_edge = (i, j);
        }
    }
    if max_sum == f64::NEG_INFINITY {
        // no interior edges: vacuously uniform
        return DelaunayClass::UniformlyDelaunay { eps_star: PI };
    }
    if max_sum > PI + DELAUNAY_SLACK {
        DelaunayClass::NotDelaunay { edge: max_edge, angle_sum: max_sum }
    } else if max_sum >= PI - DELAUNAY_SLACK {
        DelaunayClass::Delaunay
    } else {
        DelaunayClass::UniformlyDelaunay { eps_star: PI - max_sum }
    }
}

impl DelaunayClass {
    pub fn is_delaunay(&self) -> bool {
        !matches!(self, DelaunayClass::NotDelaunay { .. })
    }
}

/// `l'_ij = e^{(u_i+u_j)/2} l_ij`. On failure the raw lengths ride along in
/// the error so the broken metric can still be inspected.
pub fn conformal_change(
    tri: &Triangulation,
    metric: &PlMetric,
    u: &ConformalFactor,
) -> Result<PlMetric, MetricError> {
    let uu = u.values();
    let lengths: Vec<f64> = tri
        .edges()
        .iter()
        .zip(metric.lengths())
        .map(|(&(i, j), &l)| (0.5 * (uu[i] + uu[j])).exp() * l)
        .collect();
    PlMetric::new(tri, lengths)
}

/// Discrete curvature and boundary turning.
#[derive(Debug, Clone)]
pub struct Curvature {
    /// Per vertex: `2π − Σθ` (interior) or `π − Σθ` (boundary turning).
    values: Vec<f64>,
    interior: Vec<bool>,
}

impl Curvature {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.interior)
            .filter(|(_, &int)| int)
            .map(|(k, _)| k.abs())
            .fold(0.0, f64::max)
    }

    /// Σ interior curvature + Σ boundary turning; 2π on any disk patch
    /// (discrete Gauss–Bonnet).
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn curvature(tri: &Triangulation, metric: &PlMetric) -> Curvature {
    let angles = corner_angles(tri, metric);
    let values = (0..tri.n_vertices())
        .map(|v| {
            let flat = if tri.is_interior_vertex(v) { 2.0 * PI } else { PI };
            flat - angles.angle_sum(tri, v)
        })
        .collect();
    let interior = (0..tri.n_vertices()).map(|v| tri.is_interior_vertex(v)).collect();
    Curvature { values, interior }
}

/// Cotangent edge weights, aligned with `tri.edges()`. Interior edges carry
/// the half-sum of both opposite cotangents; boundary edges the single half
/// cotangent (which may be negative even on Delaunay metrics).
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    w: Vec<f64>,
}

impl EdgeWeights {
    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn at(&self, e: usize) -> f64 {
        self.w[e]
    }

    pub fn min_interior(&self, tri: &Triangulation) -> f64 {
        self.w
            .iter()
            .enumerate()
            .filter(|(e, _)| tri.is_interior_edge(*e))
            .map(|(_, &w)| w)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn cot_weights(tri: &Triangulation, metric: &PlMetric) -> EdgeWeights {
    let angles = corner_angles(tri, metric);
    let w = (0..tri.n_edges())
        .map(|e| {
            0.5 * tri
                .edge_faces(e)
                .iter()
                .map(|&(f, opp)| {
                    let th = angles.at(tri, f, opp);
                    th.cos() / th.sin()
                })
                .sum::<f64>()
        })
        .collect();
    EdgeWeights { w }
}

/// Jacobian of interior curvature with respect to the conformal factor:
/// rows are interior vertices (ascending), columns all vertices;
/// `∂K_i/∂u_j = −μ_ij(u)` for an edge ij, `∂K_i/∂u_i = Σ_j μ_ij(u)`.
#[derive(Debug, Clone)]
pub struct CurvatureJacobian {
    pub rows: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

pub fn curvature_jacobian(
    tri: &Triangulation,
    metric: &PlMetric,
    u: &ConformalFactor,
) -> Result<CurvatureJacobian, MetricError> {
    let changed = conformal_change(tri, metric, u)?;
    let weights = cot_weights(tri, &changed);
    let rows: Vec<usize> = tri.interior_vertices();
    let row_of: std::collections::HashMap<usize, usize> = rows.iter().copied().enumerate().map(|(r, v)| (v, r)).collect();
    let mut m = DMatrix::zeros(rows.len(), tri.n_vertices());
    for (e, &(i, j)) in tri.edges().iter().enumerate() {
        let w = weights.at(e);
        for (a, b) in [(i, j), (j, i)] {
            if let Some(&r) = row_of.get(&a) {
                m[(r, b)] -= w;
                m[(r, a)] += w;
            }
        }
    }
    Ok(CurvatureJacobian { rows, matrix: m })
}
