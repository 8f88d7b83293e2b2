//! Planar realization of flat PL metrics and the geometric-estimate
//! harness for uniformly nondegenerate embeddings.
//!
//! `develop_flat_metric` lays a curvature-free disk patch into the plane by
//! breadth-first face unfolding from an anchored edge; the holonomy of a
//! flat metric is trivial, so re-placements of an already-positioned vertex
//! must agree (closure check). On top of embeddings sit the per-face
//! quasiconformal dilatation of the piecewise-affine map between two
//! realizations, the degree/length-ratio/area estimates that hold for every
//! ε-nondegenerate embedding, empirical disk-containment constants, and the
//! discrete Schwarz-lemma margin check with constant `M = −ln(sin³ε/8)`.

use nalgebra::{Complex, Matrix2, Vector2};

use crate::complex::Triangulation;
use crate::metric::{self, ConformalFactor, MetricError, PlMetric};
use crate::par;
use crate::predicates;

pub type Z = Complex<f64>;

/// Interior curvature magnitude above which a metric does not count as flat.
pub const FLATNESS_TOL: f64 = 1e-8;

/// Agreement required when face unfolding re-derives a placed vertex.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Largest least-squares residual of `u_i + u_j = 2 ln(l'/l)` for which two
/// embeddings count as a conformal pair.
pub const CONFORMAL_PAIR_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum LayoutError {
    #[error("metric is not flat: interior vertex {vertex} has curvature {curvature}")]
    NotFlat { vertex: usize, curvature: f64 },
    #[error("face {face} lays out with non-positive signed area")]
    FoldOver { face: usize },
    #[error("face {face} is degenerate in the embedding")]
    DegenerateFace { face: usize },
    #[error("corner {corner} of face {face} has angle {angle} below the bound {bound}")]
    AngleHypothesisViolated { face: usize, corner: usize, angle: f64, bound: f64 },
    #[error("hypothesis `{hypothesis}` fails at simplex {simplex}")]
    HypothesisViolated { hypothesis: &'static str, simplex: usize },
    #[error("embeddings are not a conformal pair: length-ratio residual {residual}")]
    NotConformalPair { residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Vertex positions realizing every face with positive signed area.
#[derive(Debug, Clone)]
pub struct PlanarEmbedding {
    pos: Vec<Z>,
}

impl PlanarEmbedding {
    pub fn new(tri: &Triangulation, pos: Vec<Z>) -> Result<Self, LayoutError> {
        if pos.len() != tri.n_vertices() {
            return Err(LayoutError::InvalidParameter(format!(
                "embedding has {} positions for {} vertices",
                pos.len(),
                tri.n_vertices()
            )));
        }
        if let Some(bad) = pos.iter().position(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(LayoutError::InvalidParameter(format!("non-finite position at vertex {bad}")));
        }
        let xy = |v: usize| [pos[v].re, pos[v].im];
        for (f, &[i, j, k]) in tri.faces().iter().enumerate() {
            if predicates::orient2d(xy(i), xy(j), xy(k)) <= 0.0 {
                return Err(LayoutError::DegenerateFace { face: f });
            }
        }
        Ok(PlanarEmbedding { pos })
    }

    pub fn from_positions(tri: &Triangulation, pos: &[[f64; 2]]) -> Result<Self, LayoutError> {
        PlanarEmbedding::new(tri, pos.iter().map(|p| Z::new(p[0], p[1])).collect())
    }

    pub fn positions(&self) -> &[Z] {
        &self.pos
    }

    pub fn at(&self, v: usize) -> Z {
        self.pos[v]
    }

    pub fn to_xy(&self) -> Vec<[f64; 2]> {
        self.pos.iter().map(|p| [p.re, p.im]).collect()
    }

    /// Edge lengths measured off the realized positions.
    pub fn induced_metric(&self, tri: &Triangulation) -> Result<PlMetric, MetricError> {
        PlMetric::from_positions(tri, &self.to_xy())
    }
}

/// Breadth-first planar development of a flat metric, anchored by placing
/// the directed edge `anchor.0 → anchor.1` on the positive x-axis from the
/// origin.
pub fn develop_flat_metric(
    tri: &Triangulation,
    metric: &PlMetric,
    anchor: (usize, usize),
) -> Result<PlanarEmbedding, LayoutError> {
    let k = metric::curvature(tri, metric);
    for &v in &tri.interior_vertices() {
        if k.at(v).abs() > FLATNESS_TOL {
            return Err(LayoutError::NotFlat { vertex: v, curvature: k.at(v) });
        }
    }
    let anchor_edge = tri.edge_id(anchor.0, anchor.1).ok_or_else(|| {
        LayoutError::InvalidParameter(format!("anchor {}-{} is not an edge", anchor.0, anchor.1))
    })?;
    let el = |a: usize, b: usize| metric.length(tri.edge_id(a, b).unwrap());

    let mut pos: Vec<Option<Z>> = vec![None; tri.n_vertices()];
    pos[anchor.0] = Some(Z::new(0.0, 0.0));
    pos[anchor.1] = Some(Z::new(metric.length(anchor_edge), 0.0));

    let mut seen = vec![false; tri.faces().len()];
    let mut queue: std::collections::VecDeque<usize> =
        tri.edge_faces(anchor_edge).iter().map(|&(f, _)| f).collect();
    for &f in &queue {
        seen[f] = true;
    }
    // scale for the closure comparison: longest edge of the metric
    let scale = metric.lengths().iter().cloned().fold(0.0f64, f64::max);
    let mut worst_closure = 0.0f64;
    while let Some(f) = queue.pop_front() {
        let [i, j, k3] = tri.faces()[f];
        // rotate the ccw cycle so the unplaced (or last) vertex comes third
        let cycle = [(i, j, k3), (j, k3, i), (k3, i, j)];
        let (a, b, c) = *cycle
            .iter()
            .find(|&&(_, _, c)| pos[c].is_none())
            .unwrap_or(&cycle[0]);
        let (pa, pb) = match (pos[a], pos[b]) {
            (Some(pa), Some(pb)) => (pa, pb),
            _ => {
                // fewer than two vertices placed yet; revisit later
                queue.push_back(f);
                continue;
            }
        };
        let (lab, lac, lbc) = (el(a, b), el(a, c), el(b, c));
        let x = (lac * lac + lab * lab - lbc * lbc) / (2.0 * lab);
        let y = (lac * lac - x * x).max(0.0).sqrt();
        let placed = pa + (pb - pa) / lab * Z::new(x, y);
        match pos[c] {
            None => pos[c] = Some(placed),
            Some(existing) => {
                worst_closure = worst_closure.max((existing - placed).norm());
            }
        }
        for (s, t) in [(a, b), (b, c), (c, a)] {
            let e = tri.edge_id(s, t).unwrap();
            for &(g, _) in tri.edge_faces(e) {
                if !seen[g] {
                    seen[g] = true;
                    queue.push_back(g);
                }
            }
        }
    }
    if worst_closure > CLOSURE_TOL * (1.0 + scale) {
        // nontrivial holonomy the curvature gate did not catch
        return Err(LayoutError::NotFlat { vertex: usize::MAX, curvature: worst_closure });
    }
    let pos: Vec<Z> = pos
        .into_iter()
        .enumerate()
        .map(|(v, p)| {
            p.ok_or_else(|| LayoutError::InvalidParameter(format!("vertex {v} unreached from the anchor")))
        })
        .collect::<Result<_, _>>()?;
    let xy = |v: usize| [pos[v].re, pos[v].im];
    for (f, &[i, j, k3]) in tri.faces().iter().enumerate() {
        if predicates::orient2d(xy(i), xy(j), xy(k3)) <= 0.0 {
            return Err(LayoutError::FoldOver { face: f });
        }
    }
    PlanarEmbedding::new(tri, pos)
}

/// Per-face quasiconformal dilatation of the piecewise-affine map `φ2∘φ⁻¹`.
#[derive(Debug, Clone)]
pub struct Dilatation {
    pub per_face: Vec<f64>,
    pub max: f64,
}

pub fn pl_map_dilatation(
    tri: &Triangulation,
    phi: &PlanarEmbedding,
    phi2: &PlanarEmbedding,
) -> Result<Dilatation, LayoutError> {
    let faces = tri.faces();
    let per_face_r: Vec<Result<f64, LayoutError>> = par::map_indexed(faces.len(), |f| {
        let [i, j, k] = faces[f];
        let (p1, p2, p3) = (phi.at(i), phi.at(j), phi.at(k));
        let (q1, q2, q3) = (phi2.at(i), phi2.at(j), phi2.at(k));
        let p = Matrix2::from_columns(&[
            Vector2::new(p2.re - p1.re, p2.im - p1.im),
            Vector2::new(p3.re - p1.re, p3.im - p1.im),
        ]);
        let q = Matrix2::from_columns(&[
            Vector2::new(q2.re - q1.re, q2.im - q1.im),
            Vector2::new(q3.re - q1.re, q3.im - q1.im),
        ]);
        let pinv = p.try_inverse().ok_or(LayoutError::DegenerateFace { face: f })?;
        let l = q * pinv;
        // closed-form singular values of a 2×2 matrix
        let e = (l[(0, 0)] + l[(1, 1)]) / 2.0;
        let fm = (l[(0, 0)] - l[(1, 1)]) / 2.0;
        let g = (l[(1, 0)] + l[(0, 1)]) / 2.0;
        let h = (l[(1, 0)] - l[(0, 1)]) / 2.0;
        let big = e.hypot(h) + fm.hypot(g);
        let small = (e.hypot(h) - fm.hypot(g)).abs();
        if !(small > 0.0 && big.is_finite()) {
            return Err(LayoutError::DegenerateFace { face: f });
        }
        Ok(big / small)
    });
    let per_face = per_face_r.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max = per_face.iter().cloned().fold(0.0f64, f64::max);
    Ok(Dilatation { per_face, max })
}

/// Outcome of [`geometric_estimates_check`]: the quantities the three
/// ε-nondegeneracy estimates bound, with the bounds they were held to.
#[derive(Debug, Clone)]
pub struct GeometricEstimates {
    pub epsilon: f64,
    pub min_angle: f64,
    pub max_degree: usize,
    pub degree_bound: f64,
    pub min_length_ratio: f64,
    pub max_length_ratio: f64,
    pub min_area_ratio: f64,
    pub max_area_ratio: f64,
}

/// Checks the three geometric estimates valid for every embedding whose
/// corner angles all reach ε: face-degree ≤ 2π/ε at every vertex, edge
/// ratios within [sin ε, 1/sin ε] inside each face, and face area within
/// [sin²ε/2, 1/(2 sin ε)] times any squared edge. The angle hypothesis is
/// verified first; the estimates themselves are theorems, so their failure
/// panics rather than returning an error.
pub fn geometric_estimates_check(
    tri: &Triangulation,
    phi: &PlanarEmbedding,
    epsilon: f64,
) -> Result<GeometricEstimates, LayoutError> {
    if !(epsilon > 0.0 && epsilon <= std::f64::consts::FRAC_PI_3 + 1e-15) {
        return Err(LayoutError::InvalidParameter(format!(
            "angle bound must lie in (0, π/3], got {epsilon}"
        )));
    }
    let metric = phi.induced_metric(tri)?;
    let angles = metric::corner_angles(tri, &metric);
    let mut min_angle = f64::INFINITY;
    for (f, tri_angles) in angles.per_face().iter().enumerate() {
        for (c, &th) in tri_angles.iter().enumerate() {
            min_angle = min_angle.min(th);
            // roundoff slack so ε equal to the true minimum angle passes
            if th < epsilon - 1e-12 {
                return Err(LayoutError::AngleHypothesisViolated {
                    face: f,
                    corner: c,
                    angle: th,
                    bound: epsilon,
                });
            }
        }
    }
    let slack = 1e-9;
    let degree_bound = 2.0 * std::f64::consts::PI / epsilon;
    let mut max_degree = 0usize;
    for v in 0..tri.n_vertices() {
        let deg = tri.vertex_faces(v).len();
        max_degree = max_degree.max(deg);
        assert!(
            deg as f64 <= degree_bound + slack,
            "degree estimate failed at vertex {v}: {deg} faces vs bound {degree_bound}"
        );
    }
    let s = epsilon.sin();
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, 0.0f64);
    let (mut min_area, mut max_area) = (f64::INFINITY, 0.0f64);
    for (f, &[i, j, k]) in tri.faces().iter().enumerate() {
        let l = |a: usize, b: usize| metric.length(tri.edge_id(a, b).unwrap());
        let (u, v) = (phi.at(j) - phi.at(i), phi.at(k) - phi.at(i));
        let area = (u.re * v.im - u.im * v.re) / 2.0;
        let sides = [l(i, j), l(j, k), l(i, k)];
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let ratio = sides[a] / sides[b];
                min_ratio = min_ratio.min(ratio);
                max_ratio = max_ratio.max(ratio);
                assert!(
                    ratio >= s - slack && ratio <= 1.0 / s + slack,
                    "length-ratio estimate failed in face {f}: {ratio} outside [{s}, {}]",
                    1.0 / s
                );
            }
            let ar = area / (sides[a] * sides[a]);
            min_area = min_area.min(ar);
            max_area = max_area.max(ar);
            assert!(
                ar >= s * s / 2.0 - slack && ar <= 1.0 / (2.0 * s) + slack,
                "area estimate failed in face {f}: area/l² = {ar}"
            );
        }
    }
    Ok(GeometricEstimates {
        epsilon,
        min_angle,
        max_degree,
        degree_bound,
        min_length_ratio: min_ratio,
        max_length_ratio: max_ratio,
        min_area_ratio: min_area,
        max_area_ratio: max_area,
    })
}

/// Outcome of [`containment_radii`].
#[derive(Debug, Clone)]
pub struct ContainmentRadii {
    /// Largest r with the disk of radius r about φ(a) inside the image.
    pub r_inner: f64,
    /// Radius of the star of `a` about φ(a).
    pub r_outer: f64,
    /// Largest observed ratio r/ρ(r) where the vertices inside the r-disk
    /// span a subcomplex covering the ρ(r)-disk; `None` when the sweep
    /// range `[r_outer, r_inner]` is empty.
    pub c_emp: Option<f64>,
}

fn point_segment_distance(p: Z, a: Z, b: Z) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * d.re + (p - a).im * d.im) / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Star radius, inscribed-disk radius, and the empirical covering constant
/// linking them: for each sampled r between them, the faces whose vertices
/// all lie in the r-disk about φ(a) form a patch covering a ρ-disk, and
/// `c_emp` is the worst r/ρ.
pub fn containment_radii(tri: &Triangulation, phi: &PlanarEmbedding, a: usize) -> ContainmentRadii {
    assert!(a < tri.n_vertices(), "vertex {a} out of range");
    let center = phi.at(a);
    let r_outer = tri
        .one_ring(a)
        .neighbors
        .iter()
        .map(|&v| (phi.at(v) - center).norm())
        .fold(0.0f64, f64::max);
    let cycle = tri.boundary_loop();
    let r_inner = (0..cycle.len())
        .map(|k| point_segment_distance(center, phi.at(cycle[k]), phi.at(cycle[(k + 1) % cycle.len()])))
        .fold(f64::INFINITY, f64::min);
    let c_emp = if r_outer < r_inner {
        let samples = 8;
        let mut worst: Option<f64> = None;
        for k in 0..samples {
            let r = r_outer + (r_inner - r_outer) * k as f64 / (samples - 1) as f64;
            let inside: Vec<bool> = (0..tri.n_vertices())
                .map(|v| (phi.at(v) - center).norm() <= r + 1e-12)
                .collect();
            // boundary edges of the spanned subcomplex: incident to exactly
            // one kept face
            let mut count = vec![0u8; tri.n_edges()];
            for &[i, j, k3] in tri.faces() {
                if inside[i] && inside[j] && inside[k3] {
                    for (s, t) in [(i, j), (j, k3), (k3, i)] {
                        count[tri.edge_id(s, t).unwrap()] += 1;
                    }
                }
            }
            let rho = tri
                .edges()
                .iter()
                .zip(&count)
                .filter(|(_, &c)| c == 1)
                .map(|(&(s, t), _)| point_segment_distance(center, phi.at(s), phi.at(t)))
                .fold(f64::INFINITY, f64::min);
            if rho.is_finite() && rho > 0.0 {
                let c = r / rho;
                worst = Some(worst.map_or(c, |w: f64| w.max(c)));
            }
        }
        worst
    } else {
        None
    };
    ContainmentRadii { r_inner, r_outer, c_emp }
}

/// Outcome of [`schwarz_verify`].
#[derive(Debug, Clone)]
pub struct SchwarzReport {
    /// Whether every checked vertex clears the bound (vacuously true when
    /// no vertex lands in the half-radius disk).
    pub ok: bool,
    /// Minimal `u_i − ln(r2/r) + M` over vertices with `|φ2(i)| < r2/2`.
    pub margin: f64,
    pub checked: usize,
    /// The constant `M = −ln(sin³ε/8)`.
    pub m_const: f64,
    /// Factor recovered from the edge length ratios.
    pub factor: ConformalFactor,
}

/// Verifies the discrete Schwarz-lemma bound `u_i ≥ ln(r2/r) − M`,
/// `M = −ln(sin³ε/8)`, at every vertex whose second image lies in the
/// half-radius disk. Hypotheses checked first: ε ≤ π/6; both induced
/// metrics ε-nondegenerate and Delaunay; first image inside the r-disk;
/// r2-disk inside the second image (both disks about the origin); and the
/// pair conformal, with `u` recovered from `u_i + u_j = 2 ln(l'/l)`.
pub fn schwarz_verify(
    tri: &Triangulation,
    phi: &PlanarEmbedding,
    phi2: &PlanarEmbedding,
    r: f64,
    r2: f64,
    epsilon: f64,
) -> Result<SchwarzReport, LayoutError> {
    if !(epsilon > 0.0 && epsilon <= std::f64::consts::FRAC_PI_6 + 1e-15) {
        return Err(LayoutError::InvalidParameter(format!(
            "the bound constants assume ε ∈ (0, π/6], got {epsilon}"
        )));
    }
    if !(r > 0.0 && r.is_finite() && r2 > 0.0 && r2.is_finite()) {
        return Err(LayoutError::InvalidParameter(format!("radii must be positive, got r={r}, r2={r2}")));
    }
    let l1 = phi.induced_metric(tri)?;
    let l2 = phi2.induced_metric(tri)?;
    for (which, l) in [("first", &l1), ("second", &l2)] {
        let report = metric::validate_nondegeneracy(tri, l, epsilon)?;
        if let Some((f, _, _)) = report.witness {
            let hypothesis = if which == "first" {
                "first metric ε-nondegenerate"
            } else {
                "second metric ε-nondegenerate"
            };
            return Err(LayoutError::HypothesisViolated { hypothesis, simplex: f });
        }
        if let metric::DelaunayClass::NotDelaunay { edge, .. } = metric::delaunay_check(tri, l) {
            let hypothesis = if which == "first" {
                "first metric Delaunay"
            } else {
                "second metric Delaunay"
            };
            return Err(LayoutError::HypothesisViolated {
                hypothesis,
                simplex: tri.edge_id(edge.0, edge.1).unwrap(),
            });
        }
    }
    let slack = 1e-12 * (1.0 + r);
    for (v, p) in phi.positions().iter().enumerate() {
        if p.norm() > r + slack {
            return Err(LayoutError::HypothesisViolated {
                hypothesis: "first image inside the r-disk",
                simplex: v,
            });
        }
    }
    let cycle = tri.boundary_loop();
    let poly: Vec<[f64; 2]> = cycle.iter().map(|&v| [phi2.at(v).re, phi2.at(v).im]).collect();
    if predicates::point_in_polygon(&poly, [0.0, 0.0]) != predicates::Containment::Inside {
        return Err(LayoutError::HypothesisViolated {
            hypothesis: "origin inside the second image",
            simplex: 0,
        });
    }
    let slack2 = 1e-12 * (1.0 + r2);
    for k in 0..cycle.len() {
        let d = point_segment_distance(
            Z::new(0.0, 0.0),
            phi2.at(cycle[k]),
            phi2.at(cycle[(k + 1) % cycle.len()]),
        );
        if d < r2 - slack2 {
            return Err(LayoutError::HypothesisViolated {
                hypothesis: "r2-disk inside the second image",
                simplex: cycle[k],
            });
        }
    }
    let targets: Vec<f64> = tri
        .edges()
        .iter()
        .enumerate()
        .map(|(e, _)| 2.0 * (l2.length(e) / l1.length(e)).ln())
        .collect();
    let u = crate::harmonic::edge_sum_least_squares(tri.n_vertices(), tri.edges(), &targets)
        .ok_or_else(|| LayoutError::InvalidParameter("factor recovery system is singular".into()))?;
    let residual = tri
        .edges()
        .iter()
        .zip(&targets)
        .map(|(&(i, j), &t)| ((u[i] + u[j] - t) / 2.0).abs())
        .fold(0.0f64, f64::max);
    if residual > CONFORMAL_PAIR_TOL {
        return Err(LayoutError::NotConformalPair { residual });
    }
    let m_const = -(epsilon.sin().powi(3) / 8.0).ln();
    let bound = (r2 / r).ln() - m_const;
    let mut margin = f64::INFINITY;
    let mut checked = 0usize;
    for (v, p) in phi2.positions().iter().enumerate() {
        if p.norm() < r2 / 2.0 {
            checked += 1;
            margin = margin.min(u[v] - bound);
        }
    }
    Ok(SchwarzReport {
        ok: margin >= 0.0,
        margin,
        checked,
        m_const,
        factor: ConformalFactor::raw(u)?,
    })
}
