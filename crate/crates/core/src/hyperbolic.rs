//! Piecewise-hyperbolic metrics in the Poincaré disk.
//!
//! Distances use `sinh(d/2) = |z₁−z₂| / √((1−|z₁|²)(1−|z₂|²))`. A disk
//! embedding induces a PH metric edgewise; two PH metrics on the same
//! complex are conformally related when a vertex function `u` satisfies
//! `sinh(l₂/2) = e^{(u_i+u_j)/2} sinh(l₁/2)` on every edge — the same
//! direction of travel as the Euclidean `conformal_change` (factor carries
//! the first metric to the second). A Euclidean factor between two disk
//! embeddings converts by `uʰ_i = u_i + ln((1−|z_i|²)/(1−|z'_i|²))`.
//!
//! The 1-ring feasibility check realizes a fan hyperbolically and verifies
//! the two geodesic-turn claims: each consecutive tangent turn lies in
//! (0, π) and the turns sum to 2π. Hyperbolic Delaunay reduces to the
//! Euclidean incircle predicate on disk positions, because hyperbolic disks
//! in the Poincaré model are Euclidean disks.

use nalgebra::Complex;

use crate::complex::{OneRing, Triangulation};
use crate::metric::{ConformalFactor, MetricError};
use crate::predicates;

pub type Z = Complex<f64>;

/// Turn-sum agreement required of a feasible hyperbolic 1-ring realization.
pub const TURN_SUM_TOL: f64 = 1e-8;

/// Per-edge log-sinh residual below which two PH metrics count as
/// conformally related.
pub const CONFORMALITY_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum HyperbolicError {
    #[error("position {vertex} lies outside the open unit disk (|z| = {modulus})")]
    OutsideDisk { vertex: usize, modulus: f64 },
    #[error("face {face} degenerates or reverses orientation in the disk")]
    DegenerateFace { face: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Vertex positions strictly inside the unit disk.
#[derive(Debug, Clone)]
pub struct DiskEmbedding {
    z: Vec<Z>,
}

impl DiskEmbedding {
    pub fn new(z: Vec<Z>) -> Result<Self, HyperbolicError> {
        for (v, p) in z.iter().enumerate() {
            let r = p.norm();
            if !(r.is_finite() && r < 1.0) {
                return Err(HyperbolicError::OutsideDisk { vertex: v, modulus: r });
            }
        }
        Ok(DiskEmbedding { z })
    }

    pub fn from_positions(pos: &[[f64; 2]]) -> Result<Self, HyperbolicError> {
        DiskEmbedding::new(pos.iter().map(|p| Z::new(p[0], p[1])).collect())
    }

    pub fn positions(&self) -> &[Z] {
        &self.z
    }

    pub fn at(&self, v: usize) -> Z {
        self.z[v]
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Hyperbolic distance between two points of the open disk.
pub fn hyp_distance(z1: Z, z2: Z) -> Result<f64, HyperbolicError> {
    for (v, z) in [z1, z2].iter().enumerate() {
        let r = z.norm();
        if !(r.is_finite() && r < 1.0) {
            return Err(HyperbolicError::OutsideDisk { vertex: v, modulus: r });
        }
    }
    let num = (z1 - z2).norm();
    let den = ((1.0 - z1.norm_sqr()) * (1.0 - z2.norm_sqr())).sqrt();
    Ok(2.0 * (num / den).asinh())
}

/// Hyperbolic edge lengths with the strict triangle inequality per face.
#[derive(Debug, Clone)]
pub struct PhMetric {
    lengths: Vec<f64>,
}

impl PhMetric {
    pub fn new(tri: &Triangulation, lengths: Vec<f64>) -> Result<Self, HyperbolicError> {
        if lengths.len() != tri.n_edges() {
            return Err(HyperbolicError::InvalidParameter(format!(
                "expected {} edge lengths, got {}",
                tri.n_edges(),
                lengths.len()
            )));
        }
        for (e, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                let (i, j) = tri.edges()[e];
                return Err(HyperbolicError::InvalidParameter(format!(
                    "edge {i}-{j} has non-positive hyperbolic length {l}"
                )));
            }
        }
        for (f, face) in tri.faces().iter().enumerate() {
            let l = |a: usize, b: usize| lengths[tri.edge_id(a, b).unwrap()];
            let [i, j, k] = *face;
            let (a, b, c) = (l(j, k), l(i, k), l(i, j));
            if a >= b + c || b >= a + c || c >= a + b {
                return Err(HyperbolicError::InvalidParameter(format!(
                    "face {f} violates the hyperbolic triangle inequality"
                )));
            }
        }
        Ok(PhMetric { lengths })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }
}

/// PH metric induced by a disk embedding; faces must realize as
/// positively-oriented nondegenerate triangles.
pub fn ph_from_disk_embedding(tri: &Triangulation, phi: &DiskEmbedding) -> Result<PhMetric, HyperbolicError> {
    if phi.len() != tri.n_vertices() {
        return Err(HyperbolicError::InvalidParameter(format!(
            "embedding has {} positions for {} vertices",
            phi.len(),
            tri.n_vertices()
        )));
    }
    for (f, &[i, j, k]) in tri.faces().iter().enumerate() {
        let p = |v: usize| [phi.at(v).re, phi.at(v).im];
        if predicates::orient2d(p(i), p(j), p(k)) <= 0.0 {
            return Err(HyperbolicError::DegenerateFace { face: f });
        }
    }
    let lengths = tri
        .edges()
        .iter()
        .map(|&(i, j)| hyp_distance(phi.at(i), phi.at(j)))
        .collect::<Result<Vec<_>, _>>()?;
    PhMetric::new(tri, lengths)
}

/// `sinh(l'/2) = e^{(u_i+u_j)/2} sinh(l/2)` applied edgewise.
pub fn ph_conformal_change(
    tri: &Triangulation,
    metric: &PhMetric,
    u: &ConformalFactor,
) -> Result<PhMetric, HyperbolicError> {
    let uu = u.values();
    let lengths = tri
        .edges()
        .iter()
        .zip(metric.lengths())
        .map(|(&(i, j), &l)| 2.0 * ((0.5 * (uu[i] + uu[j])).exp() * (l / 2.0).sinh()).asinh())
        .collect();
    PhMetric::new(tri, lengths)
}

/// Outcome of [`hyp_conformality_check`].
#[derive(Debug, Clone)]
pub struct HypConformality {
    /// Recovered factor when the relation holds within [`CONFORMALITY_TOL`].
    pub factor: Option<ConformalFactor>,
    /// Largest per-edge log-sinh residual of the least-squares fit.
    pub max_residual: f64,
}

/// Tests whether a vertex factor `uʰ` carries `l1` to `l2`, i.e.
/// `sinh(l2/2) = e^{(uʰ_i+uʰ_j)/2} sinh(l1/2)` per edge. The factor is
/// recovered by least squares over the edge equations in log-sinh space.
pub fn hyp_conformality_check(
    tri: &Triangulation,
    l1: &PhMetric,
    l2: &PhMetric,
) -> Result<HypConformality, HyperbolicError> {
    let targets: Vec<f64> = l1
        .lengths()
        .iter()
        .zip(l2.lengths())
        .map(|(&a, &b)| 2.0 * ((b / 2.0).sinh().ln() - (a / 2.0).sinh().ln()))
        .collect();
    let u = crate::harmonic::edge_sum_least_squares(tri.n_vertices(), tri.edges(), &targets)
        .ok_or_else(|| HyperbolicError::NumericalFailure("normal equations not positive definite".into()))?;
    let max_residual = tri
        .edges()
        .iter()
        .zip(&targets)
        .map(|(&(i, j), &t)| ((u[i] + u[j] - t) / 2.0).abs())
        .fold(0.0f64, f64::max);
    let factor = if max_residual <= CONFORMALITY_TOL {
        Some(ConformalFactor::new(tri, u)?)
    } else {
        None
    };
    Ok(HypConformality { factor, max_residual })
}

/// `uʰ_i = u_i + ln((1−|z_i|²)/(1−|z'_i|²))`, converting a Euclidean factor
/// between two disk embeddings into the hyperbolic factor between the
/// induced PH metrics.
pub fn convert_factor_euclidean_to_hyperbolic(
    u: &ConformalFactor,
    phi: &DiskEmbedding,
    phi2: &DiskEmbedding,
) -> Result<ConformalFactor, HyperbolicError> {
    if phi.len() != u.values().len() || phi2.len() != u.values().len() {
        return Err(HyperbolicError::InvalidParameter(
            "factor and embeddings must agree on the vertex set".into(),
        ));
    }
    let uh = u
        .values()
        .iter()
        .zip(phi.positions())
        .zip(phi2.positions())
        .map(|((&ui, z), z2)| ui + ((1.0 - z.norm_sqr()) / (1.0 - z2.norm_sqr())).ln())
        .collect();
    ConformalFactor::raw(uh).map_err(HyperbolicError::from)
}

/// Outcome of [`induced_hyp_embedding`].
#[derive(Debug, Clone)]
pub enum HypRingCheck {
    /// Hypothesis satisfied; geodesic turns at the center, in ring order.
    Feasible { turns: Vec<f64> },
    /// Spokes whose Euclidean length exceeds `(1−|φ(i)|²) sin ε`, by
    /// position in the ring's neighbor list.
    ConditionViolated { spokes: Vec<usize> },
}

/// Feasibility of the hyperbolic-geodesic realization of one 1-ring.
///
/// Under the hypothesis `l_ij ≤ (1−|φ(i)|²) sin ε` on every spoke (with the
/// Euclidean spoke lengths, and every Euclidean corner angle of the fan at
/// least ε), the geodesics from the center wind once around it: each
/// consecutive tangent turn lies in (0, π) and the turns sum to 2π. The
/// tangent direction toward a neighbor `z_k` is the Möbius image
/// `(z_k − z₀)/(1 − z̄₀ z_k)`.
pub fn induced_hyp_embedding(
    ring: &OneRing,
    phi: &DiskEmbedding,
    eps: f64,
) -> Result<HypRingCheck, HyperbolicError> {
    if !(eps > 0.0 && eps <= std::f64::consts::FRAC_PI_3 + 1e-15) {
        return Err(HyperbolicError::InvalidParameter(format!(
            "nondegeneracy bound must lie in (0, π/3], got {eps}"
        )));
    }
    if !ring.is_disk {
        return Err(HyperbolicError::InvalidParameter(
            "1-ring feasibility needs an interior (disk) ring".into(),
        ));
    }
    let z0 = phi.at(ring.center);
    let m = ring.neighbors.len();
    // Euclidean corner angles of the fan must clear ε
    for k in 0..m {
        let (a, b) = (phi.at(ring.neighbors[k]), phi.at(ring.neighbors[(k + 1) % m]));
        for (p, q, r) in [(z0, a, b), (a, b, z0), (b, z0, a)] {
            let (u, v) = (q - p, r - p);
            let angle = (u.re * v.im - u.im * v.re).abs().atan2(u.re * v.re + u.im * v.im);
            if angle < eps {
                return Err(HyperbolicError::InvalidParameter(format!(
                    "fan corner angle {angle} below ε = {eps}"
                )));
            }
        }
    }
    let budget = (1.0 - z0.norm_sqr()) * eps.sin();
    let bad: Vec<usize> = (0..m)
        .filter(|&k| (phi.at(ring.neighbors[k]) - z0).norm() > budget)
        .collect();
    if !bad.is_empty() {
        return Ok(HypRingCheck::ConditionViolated { spokes: bad });
    }
    let dirs: Vec<Z> = ring
        .neighbors
        .iter()
        .map(|&j| {
            let zj = phi.at(j);
            (zj - z0) / (Z::new(1.0, 0.0) - z0.conj() * zj)
        })
        .collect();
    let mut turns = Vec::with_capacity(m);
    for k in 0..m {
        let q = dirs[(k + 1) % m] / dirs[k];
        let turn = q.im.atan2(q.re);
        if !(turn > 0.0 && turn < std::f64::consts::PI) {
            return Err(HyperbolicError::NumericalFailure(format!(
                "geodesic turn {turn} at ring position {k} escapes (0, π)"
            )));
        }
        turns.push(turn);
    }
    let sum: f64 = turns.iter().sum();
    if (sum - 2.0 * std::f64::consts::PI).abs() > TURN_SUM_TOL {
        return Err(HyperbolicError::NumericalFailure(format!(
            "turn sum {sum} deviates from 2π beyond {TURN_SUM_TOL}"
        )));
    }
    Ok(HypRingCheck::Feasible { turns })
}

/// Outcome of [`hyp_delaunay_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct HypDelaunay {
    pub delaunay: bool,
    /// First edge whose opposite vertex falls strictly inside the
    /// neighboring circumdisk.
    pub witness: Option<(usize, usize)>,
}

/// Hyperbolic Delaunay via the Euclidean incircle predicate on Poincaré
/// positions (hyperbolic disks are Euclidean disks in this model).
pub fn hyp_delaunay_check(tri: &Triangulation, phi: &DiskEmbedding) -> Result<HypDelaunay, HyperbolicError> {
    if phi.len() != tri.n_vertices() {
        return Err(HyperbolicError::InvalidParameter(format!(
            "embedding has {} positions for {} vertices",
            phi.len(),
            tri.n_vertices()
        )));
    }
    let p = |v: usize| [phi.at(v).re, phi.at(v).im];
    for (f, &[i, j, k]) in tri.faces().iter().enumerate() {
        if predicates::orient2d(p(i), p(j), p(k)) <= 0.0 {
            return Err(HyperbolicError::DegenerateFace { face: f });
        }
    }
    for (e, &(i, j)) in tri.edges().iter().enumerate() {
        if !tri.is_interior_edge(e) {
            continue;
        }
        let faces = tri.edge_faces(e);
        let (f1, _) = faces[0];
        let (_, opp2) = faces[1];
        let [a, b, c] = tri.faces()[f1];
        if predicates::incircle(p(a), p(b), p(c), p(opp2)) > 0.0 {
            return Ok(HypDelaunay { delaunay: false, witness: Some((i, j)) });
        }
    }
    Ok(HypDelaunay { delaunay: true, witness: None })
}
