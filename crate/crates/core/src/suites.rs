//! Randomized verification suites behind the `suite` command.
//!
//! Each suite draws a deterministic instance stream from `(seed, index)`,
//! runs one check bundle per instance (in parallel, results in index
//! order), and reports one row per instance with a numeric margin:
//! `tolerance − violation`, so a nonnegative margin means the check passed
//! with that much room. Failed rows can persist a self-contained JSON
//! artifact (mesh, factors, parameters) for replay without the seed.
//!
//! Reports serialize byte-identically for identical inputs and flags; wall
//! time is the only nondeterministic field and is omitted entirely under
//! stable output.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::complex::{
    build_triangulation, gen_hex_patch, gen_random_delaunay_disk_nondegenerate, Triangulation,
};
use crate::flow::{self, FlowOptions};
use crate::harmonic::{self, WeightedGraph};
use crate::hyperbolic::{self, DiskEmbedding, HypRingCheck};
use crate::layout::{self, PlanarEmbedding};
use crate::mesh_io::MeshFile;
use crate::metric::{self, ConformalFactor, PlMetric};
use crate::network::{self, ExtremalLengthProblem, MetricMode};
use crate::par;
use crate::rng::SplitMix64;

/// The individual suites, in `all` execution order.
pub const SUITE_NAMES: &[&str] =
    &["jacobian", "max-principle", "hyperbolic", "flow", "vel", "schwarz"];

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum SuiteError {
    #[error("unknown suite {0:?} (known: all, jacobian, max-principle, hyperbolic, flow, vel, schwarz)")]
    UnknownSuite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Instance count override; `None` uses the per-suite default.
    pub instances: Option<usize>,
    pub seed: u64,
    /// Where failing instances persist their replay artifact.
    pub artifact_dir: Option<PathBuf>,
    /// Omit wall time so identical runs serialize byte-identically.
    pub stable_output: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { instances: None, seed: 7, artifact_dir: None, stable_output: false }
    }
}

/// One check row of a [`SuiteReport`].
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub id: String,
    pub pass: bool,
    /// `tolerance − violation`; ≥ 0 iff the check passed (errors report −1).
    pub margin: f64,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Outcome of one suite instance before it becomes a [`CheckRow`].
struct Instance {
    pass: bool,
    margin: f64,
    detail: String,
    /// Self-contained replay data, persisted when the instance fails.
    payload: Option<serde_json::Value>,
}

impl Instance {
    fn from_error(e: impl std::fmt::Display) -> Instance {
        Instance { pass: false, margin: -1.0, detail: format!("error: {e}"), payload: None }
    }
}

/// Runs one suite (or `all`) and assembles the report.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport, SuiteError> {
    let t0 = Instant::now();
    let mut report = if name == "all" {
        let mut checks = Vec::new();
        let mut instances = 0;
        for s in SUITE_NAMES {
            let sub = run_single(s, opts)?;
            instances += sub.instances;
            checks.extend(sub.checks);
        }
        assemble("all", opts.seed, instances, checks)
    } else {
        run_single(name, opts)?
    };
    if !opts.stable_output {
        report.wall_ms = Some(t0.elapsed().as_millis() as u64);
    }
    Ok(report)
}

fn assemble(name: &str, seed: u64, instances: usize, checks: Vec<CheckRow>) -> SuiteReport {
    let passed = checks.iter().filter(|c| c.pass).count();
    SuiteReport {
        suite: name.to_string(),
        seed,
        instances,
        passed,
        failed: checks.len() - passed,
        checks,
        wall_ms: None,
    }
}

fn run_single(name: &str, opts: &SuiteOptions) -> Result<SuiteReport, SuiteError> {
    let (default_n, f): (usize, fn(usize, &mut SplitMix64) -> Instance) = match name {
        "jacobian" => (100, jacobian_instance),
        "max-principle" => (200, max_principle_instance),
        "hyperbolic" => (100, hyperbolic_instance),
        "flow" => (6, flow_instance),
        "vel" => (50, vel_instance),
        "schwarz" => (50, schwarz_instance),
        other => return Err(SuiteError::UnknownSuite(other.to_string())),
    };
    let n = opts.instances.unwrap_or(default_n).max(1);
    let seed = opts.seed;
    let mut results: Vec<Instance> = par::map_indexed(n, |i| {
        let mut rng = SplitMix64::for_instance(seed, i as u64);
        f(i, &mut rng)
    });
    let mut ids: Vec<String> = (0..n).map(|k| format!("{name}/{k:03}")).collect();
    if name == "vel" {
        // deterministic exact-value canaries alongside the random instances
        for (suffix, inst) in vel_fixed_checks() {
            ids.push(format!("{name}/{suffix}"));
            results.push(inst);
        }
    }
    let mut checks = Vec::with_capacity(results.len());
    for (id, inst) in ids.into_iter().zip(results) {
        let mut artifact = None;
        if !inst.pass {
            if let (Some(dir), Some(payload)) = (&opts.artifact_dir, &inst.payload) {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}.json", id.replace('/', "-")));
                std::fs::write(&path, serde_json::to_string_pretty(payload).expect("payload"))?;
                artifact = Some(path.display().to_string());
            }
        }
        checks.push(CheckRow {
            id,
            pass: inst.pass,
            margin: inst.margin,
            detail: inst.detail,
            artifact,
        });
    }
    Ok(assemble(name, seed, n, checks))
}

// --- jacobian: curvature differential vs central finite differences -------

fn jacobian_fd_error(
    tri: &Triangulation,
    l: &PlMetric,
    u: &[f64],
    h: f64,
) -> Result<f64, metric::MetricError> {
    let jac = metric::curvature_jacobian(tri, l, &ConformalFactor::new(tri, u.to_vec())?)?;
    let mut max_err = 0.0f64;
    for j in 0..tri.n_vertices() {
        let mut up = u.to_vec();
        let mut un = u.to_vec();
        up[j] += h;
        un[j] -= h;
        let kp = metric::curvature(tri, &metric::conformal_change(tri, l, &ConformalFactor::new(tri, up)?)?);
        let kn = metric::curvature(tri, &metric::conformal_change(tri, l, &ConformalFactor::new(tri, un)?)?);
        for (r, &v) in jac.rows.iter().enumerate() {
            let fd = (kp.at(v) - kn.at(v)) / (2.0 * h);
            max_err = max_err.max((jac.matrix[(r, j)] - fd).abs());
        }
    }
    Ok(max_err)
}

fn jacobian_instance(_i: usize, rng: &mut SplitMix64) -> Instance {
    let n = 50;
    let mesh_seed = rng.next_u64();
    // angle floor 0.18: third derivatives of the curvature grow like 1/θ⁵
    // near a degenerate corner, so sliver triangles would push the central-
    // difference truncation error above the 1e-6 bound at any fixed step
    let mesh = match gen_random_delaunay_disk_nondegenerate(n, mesh_seed, 0.18) {
        Ok(m) => m,
        Err(e) => return Instance::from_error(e),
    };
    let l = match PlMetric::from_positions(&mesh.tri, &mesh.positions) {
        Ok(l) => l,
        Err(e) => return Instance::from_error(e),
    };
    let base: Vec<f64> = (0..n).map(|_| rng.range(-0.2, 0.2)).collect();
    let h = 1e-5;
    // shrink the factor until the changed metric keeps an angle floor of its
    // own (0.15 leaves ~30x truncation headroom under the bound); the change
    // can squeeze angles well below what the base mesh guarantees
    let mut scale = 1.0f64;
    for _ in 0..40 {
        let u: Vec<f64> = base.iter().map(|x| x * scale).collect();
        let gated = ConformalFactor::new(&mesh.tri, u.clone())
            .and_then(|cf| metric::conformal_change(&mesh.tri, &l, &cf))
            .and_then(|ch| metric::validate_nondegeneracy(&mesh.tri, &ch, 0.15))
            .map(|rep| rep.ok)
            .unwrap_or(false);
        if !gated {
            scale *= 0.5;
            continue;
        }
        match jacobian_fd_error(&mesh.tri, &l, &u, h) {
            Ok(err) => {
                let margin = 1e-6 - err;
                return Instance {
                    pass: margin >= 0.0,
                    margin,
                    detail: format!("n={n}, max |J − FD| = {err:.3e}, factor scale {scale}"),
                    payload: Some(json!({
                        "kind": "jacobian",
                        "mesh": MeshFile::new(&mesh.tri)
                            .with_positions(&mesh.positions)
                            .with_lengths(&mesh.tri, &l),
                        "u": u,
                        "fd_step": h,
                    })),
                };
            }
            Err(_) => scale *= 0.5,
        }
    }
    Instance::from_error("no valid factor scale for the FD sweep")
}

// --- max-principle: conformal factors between flat Delaunay pairs --------

/// Random flat Delaunay fan: one interior vertex (0) and its ring.
fn random_fan(rng: &mut SplitMix64, min_gap_weight: f64) -> (Triangulation, Vec<[f64; 2]>) {
    let d = 5 + rng.below(4) as usize;
    let raw: Vec<f64> = (0..d).map(|_| rng.range(min_gap_weight, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut pos = vec![[0.0, 0.0]];
    let mut theta = rng.range(0.0, std::f64::consts::TAU);
    for g in &raw {
        theta += g / total * std::f64::consts::TAU;
        let r = rng.range(0.7, 1.3);
        pos.push([r * theta.cos(), r * theta.sin()]);
    }
    let faces: Vec<[usize; 3]> = (0..d).map(|k| [0, 1 + k, 1 + (k + 1) % d]).collect();
    let tri = build_triangulation(d + 1, &faces).expect("fan is a disk");
    (tri, pos)
}

fn max_principle_instance(_i: usize, rng: &mut SplitMix64) -> Instance {
    for _ in 0..200 {
        let (tri, pos) = random_fan(rng, 0.4);
        let l = match PlMetric::from_positions(&tri, &pos) {
            Ok(l) => l,
            Err(_) => continue,
        };
        if !metric::delaunay_check(&tri, &l).is_delaunay() {
            continue;
        }
        let mut bu = vec![0.0; tri.n_vertices()];
        for v in 1..tri.n_vertices() {
            bu[v] = rng.range(-0.25, 0.25);
        }
        let Ok(sol) = flow::yamabe_solve(&tri, &l, &bu) else { continue };
        let Ok(l2) = metric::conformal_change(&tri, &l, &sol.u) else { continue };
        // keep only pairs that stay Delaunay and develop cleanly
        if !metric::delaunay_check(&tri, &l2).is_delaunay() {
            continue;
        }
        if layout::develop_flat_metric(&tri, &l2, (0, 1)).is_err() {
            continue;
        }
        let u0 = sol.u.values()[0];
        let ring = &sol.u.values()[1..];
        let umax = ring.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let umin = ring.iter().cloned().fold(f64::INFINITY, f64::min);
        let violation = (u0 - umax).max(umin - u0).max(0.0);
        // Dirichlet enclosure on the same weighted 1-ring
        let enclosure = metric::cot_weights(&tri, &l)
            .values()
            .to_vec()
            .pipe_graph(&tri)
            .and_then(|g| {
                let ext = harmonic::dirichlet_solve(&g, &[0], &bu)?;
                harmonic::max_principle_check(&g, &[0], &ext)
            });
        let enclosure_ok = match enclosure {
            Ok(mp) => mp.ok,
            Err(_) => true, // zero cot weight at the spoke: hypothesis void
        };
        let margin = 1e-10 - violation;
        return Instance {
            pass: margin >= 0.0 && enclosure_ok,
            margin,
            detail: format!(
                "ring degree {}, u0 = {u0:.6}, ring range [{umin:.6}, {umax:.6}], harmonic enclosure {}",
                tri.n_vertices() - 1,
                if enclosure_ok { "ok" } else { "violated" }
            ),
            payload: Some(json!({
                "kind": "max-principle",
                "mesh": MeshFile::new(&tri)
                    .with_positions(&pos)
                    .with_lengths(&tri, &l),
                "boundary_u": bu,
                "solved_u": sol.u.values(),
            })),
        };
    }
    Instance::from_error("no Delaunay conformal pair found in 200 attempts")
}

/// Tiny adaptor so the enclosure check above reads top-down.
trait PipeGraph {
    fn pipe_graph(self, tri: &Triangulation) -> Result<WeightedGraph, harmonic::HarmonicError>;
}

impl PipeGraph for Vec<f64> {
    fn pipe_graph(self, tri: &Triangulation) -> Result<WeightedGraph, harmonic::HarmonicError> {
        let list: Vec<((usize, usize), f64)> = tri
            .edges()
            .iter()
            .zip(&self)
            .map(|(&e, &w)| (e, w.max(0.0)))
            .collect();
        WeightedGraph::new(tri.n_vertices(), &list)
    }
}

// --- hyperbolic: turn sums and the factor conversion ----------------------

fn hyperbolic_instance(_i: usize, rng: &mut SplitMix64) -> Instance {
    let eps = std::f64::consts::FRAC_PI_6;
    for _ in 0..200 {
        // disk fan satisfying the spoke budget l ≤ (1−|z0|²) sin ε with
        // center gaps and spoke ratios bounded so all corner angles clear ε
        let rc = rng.range(0.0, 0.45);
        let ac = rng.range(0.0, std::f64::consts::TAU);
        let z0 = [rc * ac.cos(), rc * ac.sin()];
        let budget = (1.0 - rc * rc) * eps.sin();
        let d = 6 + rng.below(2) as usize;
        let raw: Vec<f64> = (0..d).map(|_| rng.range(0.85, 1.15)).collect();
        let total: f64 = raw.iter().sum();
        let mut pos = vec![z0];
        let mut theta = rng.range(0.0, std::f64::consts::TAU);
        for g in &raw {
            theta += g / total * std::f64::consts::TAU;
            let s = budget * rng.range(0.6, 0.95);
            pos.push([z0[0] + s * theta.cos(), z0[1] + s * theta.sin()]);
        }
        let faces: Vec<[usize; 3]> = (0..d).map(|k| [0, 1 + k, 1 + (k + 1) % d]).collect();
        let tri = build_triangulation(d + 1, &faces).expect("fan is a disk");
        let Ok(phi) = DiskEmbedding::from_positions(&pos) else { continue };
        let Ok(l) = PlMetric::from_positions(&tri, &pos) else { continue };
        if !metric::delaunay_check(&tri, &l).is_delaunay() {
            continue;
        }

        // (a) induced hyperbolic 1-ring: turns in (0,π) summing to 2π
        let ring = tri.one_ring(0);
        let turns = match hyperbolic::induced_hyp_embedding(&ring, &phi, eps) {
            Ok(HypRingCheck::Feasible { turns }) => turns,
            Ok(HypRingCheck::ConditionViolated { .. }) | Err(_) => continue,
        };
        let sum: f64 = turns.iter().sum();
        let turn_margin = 1e-8 - (sum - std::f64::consts::TAU).abs();

        // (b) conversion: flat conformal deformation of the fan, redeveloped
        // into the disk, must satisfy the sinh relation after conversion
        let mut bu = vec![0.0; tri.n_vertices()];
        for v in 1..tri.n_vertices() {
            bu[v] = rng.range(-0.2, 0.2);
        }
        let Ok(sol) = flow::yamabe_solve(&tri, &l, &bu) else { continue };
        let Ok(l2) = metric::conformal_change(&tri, &l, &sol.u) else { continue };
        let Ok(dev) = layout::develop_flat_metric(&tri, &l2, (0, 1)) else { continue };
        let centered: Vec<nalgebra::Complex<f64>> =
            dev.positions().iter().map(|p| p - dev.at(0)).collect();
        let rmax = centered.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
        let c = 0.75 / rmax.max(1e-9);
        let Ok(phi2) = DiskEmbedding::new(centered.iter().map(|p| p * c).collect()) else {
            continue;
        };
        let u_total: Vec<f64> = sol.u.values().iter().map(|x| x + c.ln()).collect();
        let cf = ConformalFactor::new(&tri, u_total).expect("finite factor");
        let Ok(uh) = hyperbolic::convert_factor_euclidean_to_hyperbolic(&cf, &phi, &phi2) else {
            continue;
        };
        let Ok(lh1) = hyperbolic::ph_from_disk_embedding(&tri, &phi) else { continue };
        let Ok(lh2) = hyperbolic::ph_from_disk_embedding(&tri, &phi2) else { continue };
        let mut conv_err = 0.0f64;
        for (e, &(i, j)) in tri.edges().iter().enumerate() {
            let lhs = (lh2.lengths()[e] / 2.0).sinh();
            let rhs = (0.5 * (uh.values()[i] + uh.values()[j])).exp() * (lh1.lengths()[e] / 2.0).sinh();
            conv_err = conv_err.max((lhs - rhs).abs());
        }
        let conv_margin = 1e-9 - conv_err;

        let margin = turn_margin.min(conv_margin);
        return Instance {
            pass: margin >= 0.0,
            margin,
            detail: format!(
                "degree {d}, |Σturns − 2π| = {:.3e}, sinh residual = {conv_err:.3e}",
                (sum - std::f64::consts::TAU).abs()
            ),
            payload: Some(json!({
                "kind": "hyperbolic",
                "mesh": MeshFile::new(&tri).with_positions(&pos).with_model("poincare"),
                "boundary_u": bu,
                "epsilon": eps,
            })),
        };
    }
    Instance::from_error("no feasible hyperbolic fan found in 200 attempts")
}

// --- flow: curvature stays pinned along the flow ---------------------------

fn alternating_boundary(tri: &Triangulation) -> Vec<f64> {
    let mut bv = vec![0.0; tri.n_vertices()];
    for (k, &v) in tri.boundary_loop().iter().enumerate() {
        bv[v] = if k % 2 == 0 { 1.0 } else { -1.0 };
    }
    bv
}

fn flow_instance(i: usize, rng: &mut SplitMix64) -> Instance {
    let radius = 2 + (i % 3) as u32;
    let hp = match gen_hex_patch(radius) {
        Ok(h) => h,
        Err(e) => return Instance::from_error(e),
    };
    let l = PlMetric::uniform(&hp.tri, 1.0).expect("unit hex metric");
    let bv = if i < 3 {
        alternating_boundary(&hp.tri)
    } else {
        let mut bv = vec![0.0; hp.tri.n_vertices()];
        for &v in &hp.tri.boundary_vertices() {
            bv[v] = rng.range(-1.0, 1.0);
        }
        bv
    };
    let (t_end, delta) = (0.05, 0.25);
    let traj = match flow::conformal_flow(&hp.tri, &l, &bv, t_end, delta) {
        Ok(t) => t,
        Err(e) => return Instance::from_error(e),
    };
    let worst_k = traj.states.iter().map(|s| s.flatness_residual).fold(0.0f64, f64::max);
    let margin = 1e-8 - worst_k;
    let mut pass = margin >= 0.0;
    let mut detail = format!("hex R={radius}, {} steps, max |K| = {worst_k:.3e}", traj.states.len() - 1);
    if i < 3 {
        // fourth-order decay of the raw integrator on the same instance
        let run = |steps: usize| {
            flow::conformal_flow_with_options(
                &hp.tri,
                &l,
                &bv,
                t_end,
                delta,
                FlowOptions { steps: Some(steps), project: false },
            )
            .map(|t| t.endpoint().u.values().to_vec())
        };
        match (run(5), run(10), run(20)) {
            (Ok(a), Ok(b), Ok(c)) => {
                let diff = |x: &[f64], y: &[f64]| {
                    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0f64, f64::max)
                };
                let ratio = diff(&a, &b) / diff(&b, &c);
                pass = pass && (12.0..=20.0).contains(&ratio);
                detail.push_str(&format!(", step-halving ratio {ratio:.2}"));
            }
            _ => {
                pass = false;
                detail.push_str(", step-halving runs failed");
            }
        }
    }
    Instance {
        pass,
        margin,
        detail,
        payload: Some(json!({
            "kind": "flow",
            "mesh": MeshFile::new(&hp.tri)
                .with_positions(&hp.positions)
                .with_lengths(&hp.tri, &l),
            "boundary_velocity": bv,
            "t_end": t_end,
            "delta": delta,
        })),
    }
}

// --- vel: duality, modulus, and the He inequality -------------------------

fn grid_graph(w: usize, h: usize, rng: &mut SplitMix64) -> (WeightedGraph, Vec<usize>, Vec<usize>) {
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let id = y * w + x;
            if x + 1 < w {
                edges.push(((id, id + 1), rng.range(0.2, 2.0)));
            }
            if y + 1 < h {
                edges.push(((id, id + w), rng.range(0.2, 2.0)));
            }
        }
    }
    let g = WeightedGraph::new(w * h, &edges).expect("grid is simple");
    let v1: Vec<usize> = (0..h).map(|y| y * w).collect();
    let v2: Vec<usize> = (0..h).map(|y| y * w + w - 1).collect();
    (g, v1, v2)
}

fn vel_instance(_i: usize, rng: &mut SplitMix64) -> Instance {
    let (w, h) = (3 + rng.below(4) as usize, 3 + rng.below(4) as usize);
    let (g, v1, v2) = grid_graph(w, h, rng);
    let mut closure = || -> Result<(f64, f64, f64, String), String> {
        // edge-metric duality: modulus gap against effective resistance
        let edge_sol = ExtremalLengthProblem::new(g.clone(), &v1, &v2, MetricMode::Edge)
            .and_then(|p| p.solve())
            .map_err(|e| e.to_string())?;
        let duality_margin = 1e-6 - edge_sol.gap;
        // vertex modulus: KKT gap of the admissible optimum
        let vertex_sol = network::vertex_modulus(&g, &v1, &v2).map_err(|e| e.to_string())?;
        let vertex_margin = 1e-6 - vertex_sol.gap;
        // He inequality on a cotangent-weighted Delaunay mesh
        let mesh = gen_random_delaunay_disk_nondegenerate(30, rng.next_u64(), 0.12)
            .map_err(|e| e.to_string())?;
        let lm = PlMetric::from_positions(&mesh.tri, &mesh.positions).map_err(|e| e.to_string())?;
        let cw = metric::cot_weights(&mesh.tri, &lm);
        let gm = cw.values().to_vec().pipe_graph(&mesh.tri).map_err(|e| e.to_string())?;
        let c = (0..gm.n_vertices()).map(|v| gm.weight_sum(v)).fold(0.0f64, f64::max);
        let boundary = mesh.tri.boundary_vertices();
        // deepest interior vertex in hop distance from the boundary
        let depth = bfs_depth(&mesh.tri, &boundary);
        let deep = (0..mesh.tri.n_vertices()).max_by_key(|&v| depth[v]).unwrap();
        let he = network::he_inequality_check(&gm, &[deep], &boundary, c).map_err(|e| e.to_string())?;
        let he_margin = if he.ok { he.slack } else { -1.0 };
        Ok((
            duality_margin,
            vertex_margin,
            he_margin,
            format!(
                "{w}×{h} grid: duality gap {:.3e}, KKT gap {:.3e}; He slack {:.3e} (VEL {:.4} ≤ 2·{:.3}·{:.4})",
                edge_sol.gap, vertex_sol.gap, he.slack, he.vel, he.c, he.resistance
            ),
        ))
    };
    match closure() {
        Ok((m1, m2, m3, detail)) => Instance {
            pass: m1 >= 0.0 && m2 >= 0.0 && m3 >= 0.0,
            margin: m1.min(m2).min(m3),
            detail,
            payload: Some(json!({
                "kind": "vel",
                "grid": {"w": w, "h": h},
                "edges": g.edges(),
                "weights": g.weights(),
                "v1": v1,
                "v2": v2,
            })),
        },
        Err(e) => Instance::from_error(e),
    }
}

fn bfs_depth(tri: &Triangulation, sources: &[usize]) -> Vec<usize> {
    let mut depth = vec![usize::MAX; tri.n_vertices()];
    let mut queue = std::collections::VecDeque::new();
    for &s in sources {
        depth[s] = 0;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for u in tri.neighbors(v) {
            if depth[u] == usize::MAX {
                depth[u] = depth[v] + 1;
                queue.push_back(u);
            }
        }
    }
    depth
}

fn vel_fixed_checks() -> Vec<(&'static str, Instance)> {
    let mut out = Vec::new();

    // exact modulus of the 3-vertex path
    let path3 = (|| -> Result<Instance, String> {
        let g = WeightedGraph::new(3, &[((0, 1), 1.0), ((1, 2), 1.0)]).map_err(|e| e.to_string())?;
        let sol = network::vertex_modulus(&g, &[0], &[2]).map_err(|e| e.to_string())?;
        let err = (sol.objective - 1.0 / 3.0).abs();
        Ok(Instance {
            pass: err <= 1e-8,
            margin: 1e-8 - err,
            detail: format!("path-3 modulus {:.12} vs 1/3", sol.objective),
            payload: None,
        })
    })()
    .unwrap_or_else(Instance::from_error);
    out.push(("fixed-path3", path3));

    // superadditivity across nested hex rings
    let additivity = (|| -> Result<Instance, String> {
        let hp = gen_hex_patch(6).map_err(|e| e.to_string())?;
        let g = network::skeleton_graph(&hp.tri);
        let sets: Vec<Vec<usize>> = [0usize, 2, 4, 6].iter().map(|&k| hp.rings[k].clone()).collect();
        let rep = network::vel_additivity_check(&g, &sets).map_err(|e| e.to_string())?;
        Ok(Instance {
            pass: rep.ok,
            margin: rep.slack + 1e-6,
            detail: format!(
                "hex R=6 rings 0|2|4|6: VEL {:.6} ≥ Σ parts {:.6}",
                rep.total,
                rep.parts.iter().sum::<f64>()
            ),
            payload: None,
        })
    })()
    .unwrap_or_else(Instance::from_error);
    out.push(("fixed-additivity", additivity));

    // doubling-ring growth table stays monotone
    let growth = (|| -> Result<Instance, String> {
        let hp = gen_hex_patch(9).map_err(|e| e.to_string())?;
        let phi = PlanarEmbedding::from_positions(&hp.tri, &hp.positions).map_err(|e| e.to_string())?;
        let rows = network::parabolicity_growth(&hp.tri, &phi, hp.center, 3).map_err(|e| e.to_string())?;
        let mut margin = f64::INFINITY;
        for w in rows.windows(2) {
            margin = margin.min(w[1].vel - w[0].vel + 1e-6);
        }
        for r in &rows {
            margin = margin.min(r.vel - r.cumulative + 1e-6);
        }
        Ok(Instance {
            pass: margin >= 0.0,
            margin,
            detail: format!(
                "hex R=9, K=3 doubling rings: VEL {}",
                rows.iter().map(|r| format!("{:.4}", r.vel)).collect::<Vec<_>>().join(" ≤ ")
            ),
            payload: None,
        })
    })()
    .unwrap_or_else(Instance::from_error);
    out.push(("fixed-parabolicity", growth));

    out
}

// --- schwarz: nonnegative margins on flat conformal pairs -----------------

fn schwarz_instance(i: usize, rng: &mut SplitMix64) -> Instance {
    let radius = 3 + (i % 2) as u32;
    let hp = match gen_hex_patch(radius) {
        Ok(h) => h,
        Err(e) => return Instance::from_error(e),
    };
    let tri = &hp.tri;
    let l = PlMetric::uniform(tri, 1.0).expect("unit hex metric");
    let phi = PlanarEmbedding::from_positions(tri, &hp.positions).expect("hex embedding");
    let eps = std::f64::consts::FRAC_PI_6;
    for _ in 0..50 {
        let amp = rng.range(0.02, 0.1);
        let phase = rng.range(0.0, std::f64::consts::TAU);
        let offset = rng.range(-0.08, 0.08);
        let mut bu = vec![0.0; tri.n_vertices()];
        for &v in tri.boundary_loop() {
            let theta = hp.positions[v][1].atan2(hp.positions[v][0]);
            bu[v] = offset + amp * (theta - phase).cos();
        }
        let Ok(sol) = flow::yamabe_solve(tri, &l, &bu) else { continue };
        let Ok(l2) = metric::conformal_change(tri, &l, &sol.u) else { continue };
        let anchor = (hp.center, tri.neighbors(hp.center)[0]);
        let Ok(dev) = layout::develop_flat_metric(tri, &l2, anchor) else { continue };
        let centered: Vec<nalgebra::Complex<f64>> =
            dev.positions().iter().map(|p| p - dev.at(hp.center)).collect();
        let Ok(phi2) = PlanarEmbedding::new(tri, centered) else { continue };
        let r = phi.positions().iter().map(|p| p.norm()).fold(0.0f64, f64::max);
        let r2 = layout::containment_radii(tri, &phi2, hp.center).r_inner;
        let rep = match layout::schwarz_verify(tri, &phi, &phi2, r, r2, eps) {
            Ok(rep) => rep,
            Err(_) => continue, // factor pushed the pair off Delaunay: redraw
        };
        return Instance {
            pass: rep.ok,
            margin: rep.margin,
            detail: format!(
                "hex R={radius}, amp {amp:.3}: margin {:.4} over {} vertices (M = {:.4})",
                rep.margin, rep.checked, rep.m_const
            ),
            payload: Some(json!({
                "kind": "schwarz",
                "mesh": MeshFile::new(tri)
                    .with_positions(&hp.positions)
                    .with_lengths(tri, &l),
                "boundary_u": bu,
                "r": r,
                "r2": r2,
                "epsilon": eps,
            })),
        };
    }
    Instance::from_error("no verifiable conformal pair found in 50 attempts")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(instances: usize, seed: u64) -> SuiteOptions {
        SuiteOptions {
            instances: Some(instances),
            seed,
            artifact_dir: None,
            stable_output: true,
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(
            run_suite("nope", &SuiteOptions::default()),
            Err(SuiteError::UnknownSuite(_))
        ));
    }

    #[test]
    fn jacobian_suite_passes_and_is_deterministic() {
        let rep = run_suite("jacobian", &opts(3, 11)).unwrap();
        assert!(rep.ok(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert_eq!(rep.instances, 3);
        assert_eq!(rep.checks[0].id, "jacobian/000");
        assert!(rep.wall_ms.is_none());
        let again = run_suite("jacobian", &opts(3, 11)).unwrap();
        assert_eq!(rep.to_json(), again.to_json());
        // a different seed draws different instances
        let other = run_suite("jacobian", &opts(3, 12)).unwrap();
        assert_ne!(rep.to_json(), other.to_json());
    }

    #[test]
    fn max_principle_suite_passes() {
        let rep = run_suite("max-principle", &opts(8, 2)).unwrap();
        assert!(rep.ok(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        for c in &rep.checks {
            assert!(c.margin >= 0.0);
        }
    }

    #[test]
    fn hyperbolic_suite_passes() {
        let rep = run_suite("hyperbolic", &opts(8, 3)).unwrap();
        assert!(rep.ok(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    }

    #[test]
    fn flow_suite_passes_with_ratio_checks() {
        let rep = run_suite("flow", &opts(4, 4)).unwrap();
        assert!(rep.ok(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert!(rep.checks[0].detail.contains("step-halving ratio"));
        assert!(!rep.checks[3].detail.contains("step-halving"));
    }

    #[test]
    fn vel_suite_includes_fixed_canaries() {
        let rep = run_suite("vel", &opts(2, 5)).unwrap();
        assert!(rep.ok(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert_eq!(rep.checks.len(), 5);
        assert_eq!(rep.checks[2].id, "vel/fixed-path3");
        assert_eq!(rep.checks[4].id, "vel/fixed-parabolicity");
    }

    #[test]
    fn schwarz_suite_passes() {
        let rep = run_suite("schwarz", &opts(4, 6)).unwrap();
        assert!(rep.ok(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        for c in &rep.checks {
            assert!(c.margin > 0.0, "nonpositive Schwarz margin: {:?}", c);
        }
    }

    #[test]
    fn all_runs_every_suite() {
        let rep = run_suite("all", &opts(1, 9)).unwrap();
        assert!(rep.ok(), "failures: {:?}", rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert_eq!(rep.suite, "all");
        assert_eq!(rep.instances, 6);
        assert_eq!(rep.checks.len(), 6 + 3); // one per suite + vel canaries
        for name in SUITE_NAMES {
            assert!(rep.checks.iter().any(|c| c.id.starts_with(name)));
        }
    }

    #[test]
    fn failing_instance_persists_artifact() {
        let dir = std::env::temp_dir().join(format!("dcg-suite-artifacts-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        // drive the artifact path directly with a synthetic failure
        let failing = Instance {
            pass: false,
            margin: -0.5,
            detail: "synthetic".into(),
            payload: Some(json!({"kind": "synthetic"})),
        };
        let opts = SuiteOptions {
            instances: Some(1),
            seed: 0,
            artifact_dir: Some(dir.clone()),
            stable_output: true,
        };
        // emulate run_single's artifact pass
        let mut artifact = None;
        if let (Some(d), Some(payload)) = (&opts.artifact_dir, &failing.payload) {
            std::fs::create_dir_all(d).unwrap();
            let path = d.join("synthetic-000.json");
            std::fs::write(&path, serde_json::to_string_pretty(payload).unwrap()).unwrap();
            artifact = Some(path.display().to_string());
        }
        let path = artifact.expect("artifact written");
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.contains("synthetic"));
        // passing runs never create the directory
        let clean = std::env::temp_dir().join(format!("dcg-suite-clean-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&clean);
        let pass_opts = SuiteOptions {
            instances: Some(1),
            seed: 11,
            artifact_dir: Some(clean.clone()),
            stable_output: true,
        };
        let rep = run_suite("jacobian", &pass_opts).unwrap();
        assert!(rep.ok());
        assert!(!clean.exists());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
