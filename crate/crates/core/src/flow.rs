//! The discrete conformal flow and a Newton-based flat-metric solver.
//!
//! The flow prescribes the factor's velocity on the boundary and defines it
//! in the interior by harmonicity with respect to the current cotangent
//! weights: `Σ_j μ_ij(u(t)) (u̇_j − u̇_i) = 0`. Starting from `u(0) = 0` on
//! a flat Delaunay patch, interior curvature stays zero along the exact
//! flow; the integrator (classical fourth-order Runge–Kutta with fixed
//! step) lets it drift by O(h⁵) per step, so each step ends with one Newton
//! projection — interior update `J δ = −K`, boundary held — which pins
//! `max |K|` back below 1e−8. The projection can be disabled to expose the
//! raw integrator for order-of-convergence measurements.
//!
//! `yamabe_solve` addresses the time-independent problem — find `u` with
//! prescribed boundary values making every interior vertex flat — by a
//! damped Newton iteration on the same Jacobian. The flow endpoint and the
//! Newton solution for matching boundary data agree up to the tolerances of
//! both, which the tests exploit in each direction.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::complex::{gen_hex_patch, HexPatch, Triangulation};
use crate::harmonic::{self, HarmonicError, WeightedGraph};
use crate::metric::{self, ConformalFactor, EdgeWeights, MetricError, PlMetric};
use crate::par;

/// Interior curvature magnitude every sampled flow state is held to.
pub const FLOW_FLATNESS_TOL: f64 = 1e-8;

/// Interior curvature magnitude the Newton solver converges to.
pub const YAMABE_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum FlowError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial metric is not flat: interior vertex {vertex} has curvature {curvature}")]
    NotFlat { vertex: usize, curvature: f64 },
    #[error("factor left the domain at t = {time}: |u|_∞ = {sup}")]
    LeftDomain { time: f64, sup: f64 },
    #[error("Delaunay degenerated at t = {time} on edge {edge:?}")]
    WeightDegenerate { time: f64, edge: (usize, usize) },
    #[error("integration step failed: {0}")]
    StepFailure(String),
    #[error("Newton did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize, best: Box<ConformalFactor> },
    #[error("conformal change collapses face {face}")]
    TriangleCollapse { face: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

/// One sampled state of a conformal flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub time: f64,
    pub u: ConformalFactor,
    /// The deformed metric `u(t) * l`.
    pub metric: PlMetric,
    /// Cotangent weights of the deformed metric.
    pub weights: EdgeWeights,
    /// `max |K_i|` over interior vertices at this state.
    pub flatness_residual: f64,
    /// The factor velocity at this state (boundary prescribed, interior
    /// harmonic).
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[non_exhaustive]
pub enum FlowTermination {
    Completed,
}

/// A completed flow run: states at every integrator step, in time order.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub states: Vec<FlowState>,
    pub boundary_velocity: Vec<f64>,
    pub termination: FlowTermination,
}

impl FlowTrajectory {
    pub fn endpoint(&self) -> &FlowState {
        self.states.last().expect("a trajectory holds at least the initial state")
    }

    /// Flattened `(t, vertex, u, K)` rows for CSV export.
    pub fn samples(&self, tri: &Triangulation) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let times = self.states.iter().map(|s| s.time).collect();
        let us = self.states.iter().map(|s| s.u.values().to_vec()).collect();
        let ks = self
            .states
            .iter()
            .map(|s| metric::curvature(tri, &s.metric).values().to_vec())
            .collect();
        (times, us, ks)
    }
}

/// Integrator knobs; the defaults match [`conformal_flow`].
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Step count override; `None` picks `⌈t_end/0.01⌉`.
    pub steps: Option<usize>,
    /// Newton-project each step onto the flat manifold.
    pub project: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { steps: None, project: true }
    }
}

fn factor(tri: &Triangulation, u: &[f64]) -> Result<ConformalFactor, FlowError> {
    Ok(ConformalFactor::new(tri, u.to_vec())?)
}

/// Velocity field of the flow at factor `u`: prescribed on the boundary,
/// harmonic for μ(u) inside.
fn velocity_field(
    tri: &Triangulation,
    l: &PlMetric,
    u: &[f64],
    bv: &[f64],
    interior: &[usize],
    time: f64,
) -> Result<Vec<f64>, FlowError> {
    let changed = metric::conformal_change(tri, l, &factor(tri, u)?).map_err(|e| match e {
        MetricError::TriangleInequalityViolated { face, .. } => {
            FlowError::StepFailure(format!("face {face} collapsed at t = {time}"))
        }
        other => FlowError::Metric(other),
    })?;
    let weights = metric::cot_weights(tri, &changed);
    let g = WeightedGraph::from_mesh(tri, &weights).map_err(|e| match e {
        HarmonicError::NegativeWeight { i, j, .. } => FlowError::WeightDegenerate { time, edge: (i, j) },
        other => FlowError::Harmonic(other),
    })?;
    harmonic::dirichlet_solve(&g, interior, bv).map_err(|e| match e {
        HarmonicError::ZeroWeightAtInterior { i, j } => FlowError::WeightDegenerate { time, edge: (i, j) },
        other => FlowError::Harmonic(other),
    })
}

/// Interior×interior curvature Jacobian and interior curvature vector.
fn newton_system(
    tri: &Triangulation,
    l: &PlMetric,
    u: &[f64],
    interior: &[usize],
) -> Result<(DMatrix<f64>, DVector<f64>), FlowError> {
    let cf = factor(tri, u)?;
    let jac = metric::curvature_jacobian(tri, l, &cf)?;
    let k = metric::curvature(tri, &metric::conformal_change(tri, l, &cf)?);
    let m = interior.len();
    let mut sub = DMatrix::zeros(m, m);
    for r in 0..m {
        for c in 0..m {
            sub[(r, c)] = jac.matrix[(r, interior[c])];
        }
    }
    let rhs = DVector::from_iterator(m, interior.iter().map(|&v| -k.at(v)));
    Ok((sub, rhs))
}

/// One Newton correction toward `K ≡ 0` on the interior, boundary fixed.
fn project_flat(
    tri: &Triangulation,
    l: &PlMetric,
    u: &mut [f64],
    interior: &[usize],
) -> Result<(), FlowError> {
    let (sub, rhs) = newton_system(tri, l, u, interior)?;
    let delta = sub
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FlowError::StepFailure("projection Jacobian is singular".into()))?;
    for (c, &v) in interior.iter().enumerate() {
        u[v] += delta[c];
    }
    Ok(())
}

fn flatness_residual(tri: &Triangulation, changed: &PlMetric) -> f64 {
    metric::curvature(tri, changed).max_abs_interior()
}

/// Runs the conformal flow from `u = 0` with the given boundary velocity
/// until `t_end`, sampling every integrator step. See [`FlowOptions`] for
/// the step-count and projection knobs.
pub fn conformal_flow_with_options(
    tri: &Triangulation,
    l: &PlMetric,
    boundary_velocity: &[f64],
    t_end: f64,
    delta: f64,
    opts: FlowOptions,
) -> Result<FlowTrajectory, FlowError> {
    let n = tri.n_vertices();
    if boundary_velocity.len() != n {
        return Err(FlowError::InvalidParameter(format!(
            "expected {n} velocity entries, got {}",
            boundary_velocity.len()
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(FlowError::InvalidParameter(format!("domain radius must be positive, got {delta}")));
    }
    if !(t_end > 0.0 && t_end < 2.0 * delta) {
        return Err(FlowError::InvalidParameter(format!(
            "horizon must satisfy 0 < t_end < 2δ = {}, got {t_end}",
            2.0 * delta
        )));
    }
    let bmax = tri
        .boundary_vertices()
        .iter()
        .map(|&v| boundary_velocity[v].abs())
        .fold(0.0f64, f64::max);
    if !(bmax.is_finite() && bmax <= 1.0 + 1e-12) {
        return Err(FlowError::InvalidParameter(format!(
            "boundary velocity must have |·|_∞ ≤ 1, got {bmax}"
        )));
    }
    let k0 = metric::curvature(tri, l);
    for &v in &tri.interior_vertices() {
        if k0.at(v).abs() > FLOW_FLATNESS_TOL {
            return Err(FlowError::NotFlat { vertex: v, curvature: k0.at(v) });
        }
    }
    if let metric::DelaunayClass::NotDelaunay { edge, .. } = metric::delaunay_check(tri, l) {
        return Err(FlowError::WeightDegenerate { time: 0.0, edge });
    }
    let interior = tri.interior_vertices();
    // boundary velocity vector with interior entries zeroed; the interior
    // values are always re-derived from harmonicity
    let mut bv = vec![0.0; n];
    for &v in &tri.boundary_vertices() {
        bv[v] = boundary_velocity[v];
    }
    let steps = opts.steps.unwrap_or_else(|| (t_end / 0.01).ceil() as usize).max(1);
    let h = t_end / steps as f64;

    let mut u = vec![0.0; n];
    let mut velocity = velocity_field(tri, l, &u, &bv, &interior, 0.0)?;
    let mut states = Vec::with_capacity(steps + 1);
    let make_state = |time: f64, u: &[f64], velocity: &[f64]| -> Result<FlowState, FlowError> {
        let cf = factor(tri, u)?;
        let changed = metric::conformal_change(tri, l, &cf)?;
        let weights = metric::cot_weights(tri, &changed);
        let residual = flatness_residual(tri, &changed);
        Ok(FlowState {
            time,
            u: cf,
            metric: changed,
            weights,
            flatness_residual: residual,
            velocity: velocity.to_vec(),
        })
    };
    states.push(make_state(0.0, &u, &velocity)?);
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * h;
        let stage = |base: &[f64], k: &[f64], scale: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(b, v)| b + scale * v).collect()
        };
        let k1 = velocity.clone();
        let k2 = velocity_field(tri, l, &stage(&u, &k1, h / 2.0), &bv, &interior, t0 + h / 2.0)?;
        let k3 = velocity_field(tri, l, &stage(&u, &k2, h / 2.0), &bv, &interior, t0 + h / 2.0)?;
        let k4 = velocity_field(tri, l, &stage(&u, &k3, h), &bv, &interior, t0 + h)?;
        for i in 0..n {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * h;
        if opts.project {
            project_flat(tri, l, &mut u, &interior)?;
        }
        velocity = velocity_field(tri, l, &u, &bv, &interior, t)?;
        let state = make_state(t, &u, &velocity)?;
        // domain, flatness, max-principle, and Lipschitz invariants
        let sup = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if sup >= 2.0 * delta {
            return Err(FlowError::LeftDomain { time: t, sup });
        }
        if opts.project && state.flatness_residual > FLOW_FLATNESS_TOL {
            return Err(FlowError::StepFailure(format!(
                "projection left |K| = {} at t = {t}",
                state.flatness_residual
            )));
        }
        if let metric::DelaunayClass::NotDelaunay { edge, .. } = metric::delaunay_check(tri, &state.metric)
        {
            return Err(FlowError::WeightDegenerate { time: t, edge });
        }
        let vmax = velocity.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if vmax > bmax + 1e-10 {
            return Err(FlowError::StepFailure(format!(
                "velocity max principle failed at t = {t}: {vmax} vs boundary {bmax}"
            )));
        }
        if sup > t * bmax + 1e-8 {
            return Err(FlowError::StepFailure(format!(
                "Lipschitz bound failed at t = {t}: |u|_∞ = {sup} vs {}",
                t * bmax
            )));
        }
        states.push(state);
    }
    Ok(FlowTrajectory {
        states,
        boundary_velocity: bv,
        termination: FlowTermination::Completed,
    })
}

/// The flow with default integrator settings (step ≤ 0.01, projection on).
pub fn conformal_flow(
    tri: &Triangulation,
    l: &PlMetric,
    boundary_velocity: &[f64],
    t_end: f64,
    delta: f64,
) -> Result<FlowTrajectory, FlowError> {
    conformal_flow_with_options(tri, l, boundary_velocity, t_end, delta, FlowOptions::default())
}

/// Outcome of [`yamabe_solve`]: the flat factor and the Newton residual
/// history (`max |K|` per iterate, ending at the accepted one).
#[derive(Debug, Clone)]
pub struct YamabeSolution {
    pub u: ConformalFactor,
    pub residual: f64,
    pub residuals: Vec<f64>,
}

/// Finds `u` with the prescribed boundary values and `K_i(u) = 0` at every
/// interior vertex, by damped Newton on the curvature map.
pub fn yamabe_solve(
    tri: &Triangulation,
    l: &PlMetric,
    boundary_u: &[f64],
) -> Result<YamabeSolution, FlowError> {
    let n = tri.n_vertices();
    if boundary_u.len() != n {
        return Err(FlowError::InvalidParameter(format!(
            "expected {n} boundary entries, got {}",
            boundary_u.len()
        )));
    }
    if let metric::DelaunayClass::NotDelaunay { edge, .. } = metric::delaunay_check(tri, l) {
        return Err(FlowError::WeightDegenerate { time: 0.0, edge });
    }
    let interior = tri.interior_vertices();
    let mut u = vec![0.0; n];
    for &v in &tri.boundary_vertices() {
        let x = boundary_u[v];
        if !x.is_finite() {
            return Err(FlowError::InvalidParameter(format!("non-finite boundary value at {v}")));
        }
        u[v] = x;
    }
    // initial interior guess: harmonic extension in the undeformed weights
    // (falls back to zero if those weights cannot interpolate)
    let w0 = metric::cot_weights(tri, l);
    if let Ok(g) = WeightedGraph::from_mesh(tri, &w0) {
        if let Ok(ext) = harmonic::dirichlet_solve(&g, &interior, &u) {
            u = ext;
        }
    }
    let residual_of = |u: &[f64]| -> Result<f64, FlowError> {
        let changed = metric::conformal_change(tri, l, &factor(tri, u)?)?;
        Ok(flatness_residual(tri, &changed))
    };
    let mut res = match residual_of(&u) {
        Ok(r) => r,
        Err(_) => {
            // harmonic extension overshot into invalid lengths; restart flat
            for &v in &interior {
                u[v] = 0.0;
            }
            residual_of(&u)?
        }
    };
    let mut residuals = vec![res];
    let max_iters = 100;
    for iteration in 0..max_iters {
        if res <= YAMABE_TOL {
            return Ok(YamabeSolution { u: factor(tri, &u)?, residual: res, residuals });
        }
        let (sub, rhs) = newton_system(tri, l, &u, &interior)?;
        let delta = match sub.lu().solve(&rhs) {
            Some(d) => d,
            None => {
                return Err(FlowError::NoConvergence {
                    residual: res,
                    iterations: iteration,
                    best: Box::new(factor(tri, &u)?),
                })
            }
        };
        let mut t = 1.0f64;
        let mut accepted = None;
        let mut collapse_face = None;
        for _ in 0..40 {
            let mut trial = u.clone();
            for (c, &v) in interior.iter().enumerate() {
                trial[v] += t * delta[c];
            }
            match residual_of(&trial) {
                Ok(r) if r <= res * (1.0 - 0.25 * t) + 1e-16 => {
                    accepted = Some((trial, r));
                    break;
                }
                Ok(_) => {}
                Err(FlowError::Metric(MetricError::TriangleInequalityViolated { face, .. })) => {
                    collapse_face = Some(face);
                }
                Err(e) => return Err(e),
            }
            t /= 2.0;
        }
        match accepted {
            Some((trial, r)) => {
                u = trial;
                res = r;
                residuals.push(res);
            }
            None => {
                if let Some(face) = collapse_face {
                    return Err(FlowError::TriangleCollapse { face });
                }
                return Err(FlowError::NoConvergence {
                    residual: res,
                    iterations: iteration + 1,
                    best: Box::new(factor(tri, &u)?),
                });
            }
        }
    }
    Err(FlowError::NoConvergence {
        residual: res,
        iterations: max_iters,
        best: Box::new(factor(tri, &u)?),
    })
}

/// Boundary data families for the rigidity experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryProfile {
    Zero,
    Constant(f64),
    /// `a·cos θ` over the angular position of each boundary vertex.
    Dipole(f64),
}

impl BoundaryProfile {
    pub fn amplitude(&self) -> f64 {
        match *self {
            BoundaryProfile::Zero => 0.0,
            BoundaryProfile::Constant(a) | BoundaryProfile::Dipole(a) => a.abs(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            BoundaryProfile::Zero => "zero".into(),
            BoundaryProfile::Constant(a) => format!("constant {a}"),
            BoundaryProfile::Dipole(a) => format!("dipole {a}"),
        }
    }

    fn values(&self, hp: &HexPatch) -> Vec<f64> {
        let n = hp.tri.n_vertices();
        let mut out = vec![0.0; n];
        for &v in hp.tri.boundary_loop() {
            out[v] = match *self {
                BoundaryProfile::Zero => 0.0,
                BoundaryProfile::Constant(a) => a,
                BoundaryProfile::Dipole(a) => {
                    a * hp.positions[v][1].atan2(hp.positions[v][0]).cos()
                }
            };
        }
        out
    }
}

/// One radius of a rigidity experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RigidityRow {
    pub radius: u32,
    /// max − min of the solved factor over the observation subpatch.
    pub oscillation: f64,
    pub boundary_max: f64,
    pub subpatch_vertices: usize,
}

/// Rigidity experiment report; trends are recorded, not asserted.
#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub profile: String,
    /// Ring radius of the observation subpatch (half the smallest patch).
    pub subpatch_radius: u32,
    pub rows: Vec<RigidityRow>,
}

impl RigidityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Solves the flat-metric problem on hexagonal patches of the given radii
/// with boundary data from `profile`, and reports the factor's oscillation
/// over a fixed observation subpatch: the rings up to half the smallest
/// radius. Holding the window fixed while the patch grows is what makes the
/// trend meaningful — it measures how fast the boundary's influence on a
/// given neighborhood decays, which a window growing with R would cancel by
/// scaling.
pub fn rigidity_experiment(
    radii: &[u32],
    profile: &BoundaryProfile,
) -> Result<RigidityReport, FlowError> {
    if radii.is_empty() {
        return Err(FlowError::InvalidParameter("need at least one radius".into()));
    }
    if let Some(&r) = radii.iter().find(|&&r| r < 2) {
        return Err(FlowError::InvalidParameter(format!("radii must be ≥ 2, got {r}")));
    }
    if profile.amplitude() > 0.2 {
        return Err(FlowError::InvalidParameter(format!(
            "profile amplitude {} exceeds the 0.2 bound",
            profile.amplitude()
        )));
    }
    let window = radii.iter().copied().min().unwrap() / 2;
    let rows: Vec<Result<RigidityRow, FlowError>> = par::map_indexed(radii.len(), |i| {
        let r = radii[i];
        let hp = gen_hex_patch(r).map_err(|e| FlowError::InvalidParameter(e.to_string()))?;
        let l = PlMetric::uniform(&hp.tri, 1.0)?;
        let bu = profile.values(&hp);
        let sol = yamabe_solve(&hp.tri, &l, &bu)?;
        let sub: Vec<usize> = hp.rings[..=window as usize].iter().flatten().copied().collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &sub {
            lo = lo.min(sol.u.values()[v]);
            hi = hi.max(sol.u.values()[v]);
        }
        Ok(RigidityRow {
            radius: r,
            oscillation: hi - lo,
            boundary_max: bu.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            subpatch_vertices: sub.len(),
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(RigidityReport { profile: profile.label(), subpatch_radius: window, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_triangulation;
    use approx::assert_relative_eq;

    fn hex_setup(r: u32) -> (HexPatch, PlMetric) {
        let hp = gen_hex_patch(r).unwrap();
        let l = PlMetric::uniform(&hp.tri, 1.0).unwrap();
        (hp, l)
    }

    fn alternating_velocity(hp: &HexPatch) -> Vec<f64> {
        let mut bv = vec![0.0; hp.tri.n_vertices()];
        for (k, &v) in hp.tri.boundary_loop().iter().enumerate() {
            bv[v] = if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        bv
    }

    #[test]
    fn constant_velocity_scales_globally() {
        let (hp, l) = hex_setup(2);
        let bv = vec![0.5; hp.tri.n_vertices()];
        let traj = conformal_flow(&hp.tri, &l, &bv, 0.05, 0.25).unwrap();
        assert_eq!(traj.termination, FlowTermination::Completed);
        for state in &traj.states {
            for &x in state.u.values() {
                assert_relative_eq!(x, 0.5 * state.time, epsilon = 1e-12);
            }
            assert!(state.flatness_residual <= 1e-12);
        }
        // zero velocity keeps u ≡ 0
        let zero = conformal_flow(&hp.tri, &l, &vec![0.0; hp.tri.n_vertices()], 0.05, 0.25).unwrap();
        for state in &zero.states {
            assert!(state.u.values().iter().all(|&x| x.abs() <= 1e-14));
        }
    }

    #[test]
    fn alternating_flow_stays_flat() {
        let (hp, l) = hex_setup(3);
        let bv = alternating_velocity(&hp);
        let traj = conformal_flow(&hp.tri, &l, &bv, 0.05, 0.25).unwrap();
        assert_eq!(traj.states.len(), 6); // 5 steps of h = 0.01 plus t = 0
        assert_relative_eq!(traj.endpoint().time, 0.05, epsilon = 1e-15);
        let mut prev = -1.0;
        for state in &traj.states {
            assert!(state.time > prev);
            prev = state.time;
            assert!(state.flatness_residual <= FLOW_FLATNESS_TOL, "K = {}", state.flatness_residual);
            let vmax = state.velocity.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(vmax <= 1.0 + 1e-10);
            let sup = state.u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(sup <= state.time + 1e-8);
        }
        // the interior actually moves
        let center_u = traj.endpoint().u.values()[hp.center].abs();
        assert!(traj.endpoint().u.values().iter().any(|&x| x.abs() > 1e-6));
        let _ = center_u;
    }

    #[test]
    fn integrator_is_fourth_order() {
        let (hp, l) = hex_setup(2);
        let bv = alternating_velocity(&hp);
        let run = |steps: usize| {
            conformal_flow_with_options(
                &hp.tri,
                &l,
                &bv,
                0.04,
                0.25,
                FlowOptions { steps: Some(steps), project: false },
            )
            .unwrap()
            .endpoint()
            .u
            .values()
            .to_vec()
        };
        let (a, b, c) = (run(4), run(8), run(16));
        let diff = |x: &[f64], y: &[f64]| {
            x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0f64, f64::max)
        };
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!((12.0..=20.0).contains(&ratio), "step-halving ratio {ratio}");
    }

    #[test]
    fn flow_rejects_bad_inputs() {
        let (hp, l) = hex_setup(2);
        let n = hp.tri.n_vertices();
        assert!(matches!(
            conformal_flow(&hp.tri, &l, &vec![0.0; n], 0.6, 0.25),
            Err(FlowError::InvalidParameter(_))
        ));
        assert!(matches!(
            conformal_flow(&hp.tri, &l, &vec![1.5; n], 0.05, 0.25),
            Err(FlowError::InvalidParameter(_))
        ));
        // interior cone is not flat
        let faces: Vec<[usize; 3]> = (0..5).map(|k| [0, 1 + k, 1 + (k + 1) % 5]).collect();
        let cone = build_triangulation(6, &faces).unwrap();
        let lc = PlMetric::uniform(&cone, 1.0).unwrap();
        assert!(matches!(
            conformal_flow(&cone, &lc, &vec![0.0; 6], 0.05, 0.25),
            Err(FlowError::NotFlat { vertex: 0, .. })
        ));
    }

    #[test]
    fn yamabe_constant_boundary_is_exact() {
        let (hp, l) = hex_setup(3);
        let n = hp.tri.n_vertices();
        let zero = yamabe_solve(&hp.tri, &l, &vec![0.0; n]).unwrap();
        assert!(zero.u.values().iter().all(|&x| x.abs() <= 1e-12));
        assert!(zero.residual <= YAMABE_TOL);

        let mut cu = vec![0.0; n];
        for &v in &hp.tri.boundary_vertices() {
            cu[v] = 0.07;
        }
        let c = yamabe_solve(&hp.tri, &l, &cu).unwrap();
        for &x in c.u.values() {
            assert_relative_eq!(x, 0.07, epsilon = 1e-11);
        }
    }

    #[test]
    fn yamabe_matches_flow_endpoint() {
        let (hp, l) = hex_setup(4);
        let n = hp.tri.n_vertices();
        let t_end = 0.1;
        let mut bv = vec![0.0; n];
        for &v in hp.tri.boundary_loop() {
            bv[v] = hp.positions[v][1].atan2(hp.positions[v][0]).cos();
        }
        let traj = conformal_flow(&hp.tri, &l, &bv, t_end, 0.25).unwrap();
        let bu: Vec<f64> = bv.iter().map(|x| x * t_end).collect();
        let newton = yamabe_solve(&hp.tri, &l, &bu).unwrap();
        let worst = traj
            .endpoint()
            .u
            .values()
            .iter()
            .zip(newton.u.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-6, "flow endpoint vs Newton: {worst}");
    }

    #[test]
    fn yamabe_newton_tail_is_quadratic() {
        let (hp, l) = hex_setup(4);
        let sol = yamabe_solve(&hp.tri, &l, &BoundaryProfile::Dipole(0.2).values(&hp)).unwrap();
        assert!(sol.residual <= YAMABE_TOL);
        let rs = &sol.residuals;
        assert!(rs.len() >= 2, "history too short: {rs:?}");
        let mut checked = 0;
        for w in rs.windows(2) {
            if w[0] <= 1e-3 {
                assert!(
                    w[1] <= 10.0 * w[0] * w[0] + 1e-13,
                    "tail not quadratic: {} -> {}",
                    w[0],
                    w[1]
                );
                checked += 1;
            }
        }
        assert!(checked >= 1, "no residual pair in the quadratic window: {rs:?}");
    }

    #[test]
    fn rigidity_constant_and_zero_profiles() {
        for profile in [BoundaryProfile::Constant(0.1), BoundaryProfile::Zero] {
            let rep = rigidity_experiment(&[2, 3], &profile).unwrap();
            assert_eq!(rep.rows.len(), 2);
            for row in &rep.rows {
                assert!(row.oscillation <= 1e-10, "osc = {}", row.oscillation);
            }
        }
        assert!(matches!(
            rigidity_experiment(&[2], &BoundaryProfile::Dipole(0.3)),
            Err(FlowError::InvalidParameter(_))
        ));
        assert!(matches!(
            rigidity_experiment(&[1, 4], &BoundaryProfile::Zero),
            Err(FlowError::InvalidParameter(_))
        ));
    }

    #[test]
    fn rigidity_dipole_oscillation_decreases() {
        let rep = rigidity_experiment(&[2, 4, 8], &BoundaryProfile::Dipole(0.1)).unwrap();
        assert_eq!(rep.subpatch_radius, 1);
        let osc: Vec<f64> = rep.rows.iter().map(|r| r.oscillation).collect();
        assert!(osc[1] < osc[0] && osc[2] < osc[1], "oscillations: {osc:?}");
        // boundary influence on the fixed window roughly halves per doubling
        assert!(osc[2] < 0.6 * osc[1] && osc[1] < 0.6 * osc[0], "oscillations: {osc:?}");
        let js = rep.to_json();
        assert!(js.contains("\"oscillation\""));
    }
}
