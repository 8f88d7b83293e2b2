//! `dcg`: command-line surface over the discrete conformal geometry core.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage error, 3 numerical
//! failure. Reports are JSON on stdout (or `-o FILE`); floats go through
//! serde_json's shortest round-trip form, so every printed value parses
//! back to the identical bit pattern. `DCG_SEED` overrides the built-in
//! default seed of randomized commands; an explicit `--seed` beats both.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dcg_core::complex::{
    gen_hex_patch, gen_random_delaunay_disk, gen_random_delaunay_disk_nondegenerate, Triangulation,
};
use dcg_core::flow::{self, FlowError, FlowOptions};
use dcg_core::harmonic::{self, HarmonicError, WeightedGraph};
use dcg_core::layout::{self, LayoutError, PlanarEmbedding};
use dcg_core::mesh_io::{self, MeshFile};
use dcg_core::metric::{self, ConformalFactor, DelaunayClass, PlMetric};
use dcg_core::network::{ExtremalLengthProblem, MetricMode, NetworkError, ProblemJson};
use dcg_core::suites::{run_suite, SuiteOptions};

const DEFAULT_SEED: u64 = 7;

#[derive(Parser)]
#[command(name = "dcg", version, about = "discrete conformal geometry laboratory")]
struct Cli {
    /// Worker threads for data-parallel commands (default: all available)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated mesh as JSON
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Angles, curvature, cotangent weights, and Delaunay class of a mesh
    Analyze(AnalyzeArgs),
    /// Apply a conformal factor to the edge lengths of a mesh
    Conformal(ConformalArgs),
    /// Integrate the boundary-driven conformal flow
    Flow(FlowArgs),
    /// Solve for the flat metric with prescribed boundary factors
    Yamabe(YamabeArgs),
    /// Vertex extremal length / modulus between two vertex sets
    Vel(VelArgs),
    /// Effective resistance between two vertex sets
    Resistance(ResistanceArgs),
    /// Distortion bound check between an embedding and its conformal image
    Schwarz(SchwarzArgs),
    /// Run a verification suite
    Suite(SuiteArgs),
    /// Render a mesh, optionally colored by a vertex scalar, to SVG
    RenderSvg(RenderArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// Hexagonal patch of the unit triangular lattice
    Hex {
        /// Combinatorial radius (rings around the center), at least 1
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        radius: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Delaunay triangulation of random points in the unit disk
    RandomDelaunay {
        /// Number of vertices, at least 3
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Reject draws with a corner angle below this bound (radians)
        #[arg(long)]
        min_angle: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    mesh: PathBuf,
    /// Exit 1 unless the metric is Delaunay
    #[arg(long)]
    require_delaunay: bool,
    /// Write per-vertex curvature as `vertex,K` CSV
    #[arg(long)]
    curvature_csv: Option<PathBuf>,
    /// Write per-edge cotangent weights as `i,j,mu` CSV
    #[arg(long)]
    weights_csv: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("factor").required(true))]
struct ConformalArgs {
    mesh: PathBuf,
    /// JSON factor file: `[u_0, ...]` or `{"u": [...]}`
    #[arg(long, group = "factor")]
    factors: Option<PathBuf>,
    /// Same factor at every vertex
    #[arg(long, group = "factor", allow_hyphen_values = true)]
    constant: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("velocity").required(true))]
struct FlowArgs {
    mesh: PathBuf,
    /// Flow horizon; must satisfy 0 < t_end < 2δ
    #[arg(long)]
    t_end: f64,
    /// Domain radius δ of the factor sup bound
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Fixed RK4 step count (default: ceil(t_end / 0.01))
    #[arg(long)]
    steps: Option<usize>,
    /// Skip the per-step Newton projection onto the flat slice
    #[arg(long)]
    no_project: bool,
    /// Boundary velocity JSON file (full-length array; interior ignored)
    #[arg(long, group = "velocity")]
    boundary: Option<PathBuf>,
    /// Built-in velocity: `alternating` or `constant:<v>`
    #[arg(long, group = "velocity")]
    profile: Option<String>,
    /// Write the trajectory as `t,vertex,u,K` CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct YamabeArgs {
    mesh: PathBuf,
    /// Boundary factor JSON file (full-length array; interior ignored)
    #[arg(long)]
    boundary: PathBuf,
    /// Also write the flattened mesh (changed lengths) here
    #[arg(long)]
    apply: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Vertex,
    Edge,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum WeightsArg {
    /// Cotangent weights of the mesh metric
    Cot,
    /// Unit weight on every edge
    Unit,
}

#[derive(Args)]
struct VelArgs {
    /// Mesh JSON; omit when --problem carries the graph
    mesh: Option<PathBuf>,
    /// First terminal set, comma-separated vertex ids
    #[arg(long, value_delimiter = ',')]
    v1: Vec<usize>,
    /// Second terminal set, comma-separated vertex ids
    #[arg(long, value_delimiter = ',')]
    v2: Vec<usize>,
    #[arg(long, value_enum, default_value = "vertex")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "cot")]
    weights: WeightsArg,
    /// Extremal-length problem JSON (graph, terminals, mode)
    #[arg(long, conflicts_with_all = ["mesh", "v1", "v2", "mode", "weights"])]
    problem: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ResistanceArgs {
    mesh: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    v1: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    v2: Vec<usize>,
    #[arg(long, value_enum, default_value = "cot")]
    weights: WeightsArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SchwarzArgs {
    /// Mesh JSON with positions (the source embedding)
    mesh: PathBuf,
    /// Flat conformal factor JSON (as produced by `yamabe`)
    #[arg(long)]
    factors: PathBuf,
    /// Angle bound ε of the distortion constant, at most π/6
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
    epsilon: f64,
    /// Center vertex (default: an interior vertex deepest from the boundary)
    #[arg(long)]
    center: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// all, jacobian, max-principle, hyperbolic, flow, vel, or schwarz
    name: String,
    /// Instances per suite (default: the suite's own count)
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for replayable failure artifacts
    #[arg(long)]
    artifacts: Option<PathBuf>,
    /// Omit wall time so identical runs emit identical bytes
    #[arg(long)]
    stable_output: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    mesh: PathBuf,
    /// Color vertices by discrete curvature
    #[arg(long, group = "scalar")]
    scalar_curvature: bool,
    /// Color vertices by a JSON factor file
    #[arg(long, group = "scalar")]
    scalar_file: Option<PathBuf>,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    /// Exit 1: the computation ran and a verified property does not hold.
    Check(String),
    /// Exit 2: bad invocation, file, or precondition.
    Usage(String),
    /// Exit 3: a solver or construction failed mid-computation.
    Numerical(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

/// Precondition violations (detected before any stepping) are usage errors;
/// mid-run breakdowns are numerical failures.
fn flow_failure(e: FlowError) -> Failure {
    match &e {
        FlowError::InvalidParameter(_) | FlowError::NotFlat { .. } => usage(e),
        FlowError::WeightDegenerate { time, .. } if *time == 0.0 => usage(e),
        _ => numerical(e),
    }
}

fn net_failure(e: NetworkError) -> Failure {
    match &e {
        NetworkError::InvalidParameter(_)
        | NetworkError::DisconnectedTerminals
        | NetworkError::BadRadii { .. } => usage(e),
        _ => numerical(e),
    }
}

fn harmonic_failure(e: HarmonicError) -> Failure {
    match &e {
        HarmonicError::InvalidParameter(_)
        | HarmonicError::DisconnectedTerminals
        | HarmonicError::NegativeWeight { .. }
        | HarmonicError::ZeroWeightAtInterior { .. }
        | HarmonicError::DuplicateEdge { .. } => usage(e),
        _ => numerical(e),
    }
}

fn layout_failure(e: LayoutError) -> Failure {
    match &e {
        LayoutError::InvalidParameter(_) => usage(e),
        _ => numerical(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(f) = configure_jobs(jobs) {
            return fail(f);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    let (code, label, msg) = match &f {
        Failure::Check(m) => (1u8, "check failed", m),
        Failure::Usage(m) => (2, "usage error", m),
        Failure::Numerical(m) => (3, "numerical failure", m),
    };
    eprintln!("{label}: {msg}");
    ExitCode::from(code)
}

#[cfg(feature = "parallel")]
fn configure_jobs(jobs: usize) -> Result<(), Failure> {
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn configure_jobs(_jobs: usize) -> Result<(), Failure> {
    eprintln!("note: built without the parallel feature; --jobs has no effect");
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Conformal(a) => cmd_conformal(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Yamabe(a) => cmd_yamabe(a),
        Command::Vel(a) => cmd_vel(a),
        Command::Resistance(a) => cmd_resistance(a),
        Command::Schwarz(a) => cmd_schwarz(a),
        Command::Suite(a) => cmd_suite(a),
        Command::RenderSvg(a) => cmd_render_svg(a),
    }
}

// --- shared plumbing ------------------------------------------------------

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("DCG_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("DCG_SEED must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn emit(doc: String, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, doc + "\n").map_err(usage),
        None => {
            println!("{doc}");
            Ok(())
        }
    }
}

fn load_mesh(path: &Path) -> Result<(MeshFile, Triangulation), Failure> {
    let mf = MeshFile::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let tri = mf.triangulation().map_err(usage)?;
    Ok((mf, tri))
}

/// The metric of a mesh file: explicit lengths if present, else the metric
/// induced by positions.
fn metric_of(mf: &MeshFile, tri: &Triangulation) -> Result<(PlMetric, &'static str), Failure> {
    if let Some(l) = mf.metric(tri).map_err(usage)? {
        return Ok((l, "lengths"));
    }
    if let Some(pos) = &mf.positions {
        return Ok((PlMetric::from_positions(tri, pos).map_err(usage)?, "positions"));
    }
    Err(Failure::Usage("mesh carries neither lengths nor positions".into()))
}

/// Vertex scalar file: a bare JSON array or an object with a `u` array.
fn load_values(path: &Path, n: usize) -> Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(usage)?;
    let arr = v
        .as_array()
        .or_else(|| v.get("u").and_then(|u| u.as_array()))
        .ok_or_else(|| Failure::Usage(format!("{}: expected a JSON array or {{\"u\": [...]}}", path.display())))?;
    let values: Vec<f64> = arr
        .iter()
        .map(|x| x.as_f64())
        .collect::<Option<_>>()
        .ok_or_else(|| Failure::Usage(format!("{}: non-numeric entry", path.display())))?;
    if values.len() != n {
        return Err(Failure::Usage(format!(
            "{}: expected {n} values, got {}",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

fn graph_of(tri: &Triangulation, l: &PlMetric, weights: WeightsArg) -> Result<WeightedGraph, Failure> {
    match weights {
        WeightsArg::Cot => {
            let w = metric::cot_weights(tri, l);
            WeightedGraph::from_mesh(tri, &w).map_err(harmonic_failure)
        }
        WeightsArg::Unit => {
            let list: Vec<((usize, usize), f64)> =
                tri.edges().iter().map(|&(i, j)| ((i, j), 1.0)).collect();
            WeightedGraph::new(tri.n_vertices(), &list).map_err(harmonic_failure)
        }
    }
}

fn delaunay_json(class: &DelaunayClass) -> serde_json::Value {
    match class {
        DelaunayClass::UniformlyDelaunay { eps_star } => {
            json!({"class": "UniformlyDelaunay", "eps_star": eps_star})
        }
        DelaunayClass::Delaunay => json!({"class": "Delaunay"}),
        DelaunayClass::NotDelaunay { edge, angle_sum } => {
            json!({"class": "NotDelaunay", "witness_edge": [edge.0, edge.1], "angle_sum": angle_sum})
        }
    }
}

/// Interior vertex at maximal BFS depth from the boundary (smallest index on
/// ties), the natural center for containment radii.
fn deepest_interior_vertex(tri: &Triangulation) -> Option<usize> {
    let n = tri.n_vertices();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for v in tri.boundary_vertices() {
        dist[v] = 0;
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        for u in tri.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    (0..n)
        .filter(|&v| dist[v] != usize::MAX && dist[v] > 0)
        .max_by_key(|&v| (dist[v], std::cmp::Reverse(v)))
}

// --- commands ---------------------------------------------------------------

fn cmd_gen(kind: GenKind) -> Result<(), Failure> {
    match kind {
        GenKind::Hex { radius, output } => {
            let hp = gen_hex_patch(radius).map_err(numerical)?;
            let mf = MeshFile::new(&hp.tri).with_positions(&hp.positions);
            emit(mf.to_json(), output.as_deref())
        }
        GenKind::RandomDelaunay { n, seed, min_angle, output } => {
            if n < 3 {
                return Err(Failure::Usage(format!("need at least 3 vertices, got {n}")));
            }
            let seed = resolve_seed(seed)?;
            let mesh = match min_angle {
                Some(a) => {
                    if !(a > 0.0 && a <= std::f64::consts::FRAC_PI_3) {
                        return Err(Failure::Usage(format!(
                            "min angle must lie in (0, π/3], got {a}"
                        )));
                    }
                    gen_random_delaunay_disk_nondegenerate(n, seed, a).map_err(numerical)?
                }
                None => gen_random_delaunay_disk(n, seed).map_err(numerical)?,
            };
            let mf = MeshFile::new(&mesh.tri).with_positions(&mesh.positions);
            emit(mf.to_json(), output.as_deref())
        }
    }
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let (mf, tri) = load_mesh(&a.mesh)?;
    let (l, source) = metric_of(&mf, &tri)?;
    let angles = metric::corner_angles(&tri, &l);
    let min_angle = angles
        .per_face()
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let class = metric::delaunay_check(&tri, &l);
    let k = metric::curvature(&tri, &l);
    let w = metric::cot_weights(&tri, &l);
    let weight_rows: Vec<serde_json::Value> = tri
        .edges()
        .iter()
        .zip(w.values())
        .map(|(&(i, j), &mu)| json!([i, j, mu]))
        .collect();
    let report = json!({
        "vertices": tri.n_vertices(),
        "faces": tri.n_faces(),
        "boundary_vertices": tri.boundary_vertices().len(),
        "metric_source": source,
        "min_corner_angle": min_angle,
        "delaunay": delaunay_json(&class),
        "curvature": {
            "values": k.values(),
            "max_abs_interior": k.max_abs_interior(),
            "total": k.total(),
        },
        "weights": {
            "min_interior": w.min_interior(&tri),
            "rows": weight_rows,
        },
    });
    if let Some(p) = &a.curvature_csv {
        std::fs::write(p, mesh_io::curvature_csv(&k)).map_err(usage)?;
    }
    if let Some(p) = &a.weights_csv {
        std::fs::write(p, mesh_io::weights_csv(tri.edges(), w.values())).map_err(usage)?;
    }
    emit(serde_json::to_string_pretty(&report).expect("report"), a.output.as_deref())?;
    if a.require_delaunay {
        if let DelaunayClass::NotDelaunay { edge, angle_sum } = class {
            return Err(Failure::Check(format!(
                "metric is not Delaunay: edge {}-{} has opposite-angle sum {angle_sum}",
                edge.0, edge.1
            )));
        }
    }
    Ok(())
}

fn cmd_conformal(a: ConformalArgs) -> Result<(), Failure> {
    let (mf, tri) = load_mesh(&a.mesh)?;
    let (l, _) = metric_of(&mf, &tri)?;
    let u = match (&a.factors, a.constant) {
        (Some(p), _) => load_values(p, tri.n_vertices())?,
        (None, Some(c)) => vec![c; tri.n_vertices()],
        (None, None) => unreachable!("clap enforces the factor group"),
    };
    let cf = ConformalFactor::new(&tri, u).map_err(usage)?;
    let l2 = metric::conformal_change(&tri, &l, &cf).map_err(numerical)?;
    // positions are dropped: they realize the old metric, not the new one
    let mut out = MeshFile::new(&tri).with_lengths(&tri, &l2);
    out.model = mf.model.clone();
    emit(out.to_json(), a.output.as_deref())
}

fn cmd_flow(a: FlowArgs) -> Result<(), Failure> {
    let (mf, tri) = load_mesh(&a.mesh)?;
    let (l, _) = metric_of(&mf, &tri)?;
    let bv = match (&a.boundary, &a.profile) {
        (Some(p), _) => load_values(p, tri.n_vertices())?,
        (None, Some(name)) => boundary_velocity_from_profile(&tri, name)?,
        (None, None) => unreachable!("clap enforces the velocity group"),
    };
    let opts = FlowOptions { steps: a.steps, project: !a.no_project };
    let traj = flow::conformal_flow_with_options(&tri, &l, &bv, a.t_end, a.delta, opts)
        .map_err(flow_failure)?;
    if let Some(p) = &a.csv {
        let (times, us, ks) = traj.samples(&tri);
        std::fs::write(p, mesh_io::trajectory_csv(&times, &us, &ks)).map_err(usage)?;
    }
    let end = traj.endpoint();
    let worst = traj
        .states
        .iter()
        .map(|s| s.flatness_residual)
        .fold(0.0f64, f64::max);
    let report = json!({
        "time": end.time,
        "states": traj.states.len(),
        "u": end.u.values(),
        "flatness_residual": end.flatness_residual,
        "max_flatness_residual": worst,
        "boundary_velocity": traj.boundary_velocity,
    });
    emit(serde_json::to_string_pretty(&report).expect("report"), a.output.as_deref())
}

fn boundary_velocity_from_profile(tri: &Triangulation, name: &str) -> Result<Vec<f64>, Failure> {
    let mut bv = vec![0.0; tri.n_vertices()];
    if name == "alternating" {
        let bl = tri.boundary_loop();
        if bl.len() % 2 != 0 {
            return Err(Failure::Usage(format!(
                "alternating profile needs an even boundary loop, this one has {} vertices",
                bl.len()
            )));
        }
        for (k, &v) in bl.iter().enumerate() {
            bv[v] = if k % 2 == 0 { 1.0 } else { -1.0 };
        }
    } else if let Some(c) = name.strip_prefix("constant:") {
        let c: f64 = c
            .parse()
            .map_err(|_| Failure::Usage(format!("bad constant velocity {c:?}")))?;
        for v in tri.boundary_vertices() {
            bv[v] = c;
        }
    } else {
        return Err(Failure::Usage(format!(
            "unknown profile {name:?}; expected `alternating` or `constant:<v>`"
        )));
    }
    Ok(bv)
}

fn cmd_yamabe(a: YamabeArgs) -> Result<(), Failure> {
    let (mf, tri) = load_mesh(&a.mesh)?;
    let (l, _) = metric_of(&mf, &tri)?;
    let bu = load_values(&a.boundary, tri.n_vertices())?;
    let sol = flow::yamabe_solve(&tri, &l, &bu).map_err(flow_failure)?;
    if let Some(p) = &a.apply {
        let l2 = metric::conformal_change(&tri, &l, &sol.u).map_err(numerical)?;
        let mut out = MeshFile::new(&tri).with_lengths(&tri, &l2);
        out.model = mf.model.clone();
        std::fs::write(p, out.to_json() + "\n").map_err(usage)?;
    }
    let report = json!({
        "u": sol.u.values(),
        "residual": sol.residual,
        "iterations": sol.residuals.len(),
        "residuals": sol.residuals,
    });
    emit(serde_json::to_string_pretty(&report).expect("report"), a.output.as_deref())
}

fn cmd_vel(a: VelArgs) -> Result<(), Failure> {
    let problem = if let Some(p) = &a.problem {
        let text = std::fs::read_to_string(p)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        ProblemJson::from_json(&text)
            .map_err(usage)?
            .into_problem()
            .map_err(net_failure)?
    } else {
        let mesh = a
            .mesh
            .as_ref()
            .ok_or_else(|| Failure::Usage("give a mesh file or --problem".into()))?;
        if a.v1.is_empty() || a.v2.is_empty() {
            return Err(Failure::Usage("--v1 and --v2 must list at least one vertex each".into()));
        }
        let (mf, tri) = load_mesh(mesh)?;
        let (l, _) = metric_of(&mf, &tri)?;
        let g = graph_of(&tri, &l, a.weights)?;
        let mode = match a.mode {
            ModeArg::Vertex => MetricMode::Vertex,
            ModeArg::Edge => MetricMode::Edge,
        };
        ExtremalLengthProblem::new(g, &a.v1, &a.v2, mode).map_err(net_failure)?
    };
    let sol = problem.solve().map_err(net_failure)?;
    let report = json!({
        "mode": sol.mode,
        "objective": sol.objective,
        "extremal_length": 1.0 / sol.objective,
        "gap": sol.gap,
        "values": sol.values,
        "active_paths": sol.active_paths,
    });
    emit(serde_json::to_string_pretty(&report).expect("report"), a.output.as_deref())
}

fn cmd_resistance(a: ResistanceArgs) -> Result<(), Failure> {
    let (mf, tri) = load_mesh(&a.mesh)?;
    let (l, _) = metric_of(&mf, &tri)?;
    let g = graph_of(&tri, &l, a.weights)?;
    let rep = harmonic::effective_resistance(&g, &a.v1, &a.v2).map_err(harmonic_failure)?;
    let report = json!({
        "resistance": rep.resistance,
        "conductance": rep.conductance,
        "potential": rep.potential,
    });
    emit(serde_json::to_string_pretty(&report).expect("report"), a.output.as_deref())
}

fn cmd_schwarz(a: SchwarzArgs) -> Result<(), Failure> {
    let (mf, tri) = load_mesh(&a.mesh)?;
    let pos = mf
        .positions
        .as_ref()
        .ok_or_else(|| Failure::Usage("schwarz needs a mesh with positions".into()))?;
    let l = PlMetric::from_positions(&tri, pos).map_err(usage)?;
    let u = load_values(&a.factors, tri.n_vertices())?;
    let cf = ConformalFactor::new(&tri, u).map_err(usage)?;
    let l2 = metric::conformal_change(&tri, &l, &cf).map_err(numerical)?;
    let center = match a.center {
        Some(c) => {
            if c >= tri.n_vertices() || tri.boundary_vertices().contains(&c) {
                return Err(Failure::Usage(format!("center {c} is not an interior vertex")));
            }
            c
        }
        None => deepest_interior_vertex(&tri)
            .ok_or_else(|| Failure::Usage("mesh has no interior vertex".into()))?,
    };
    let phi = PlanarEmbedding::from_positions(&tri, pos).map_err(usage)?;
    let c1: Vec<layout::Z> = phi.positions().iter().map(|p| p - phi.at(center)).collect();
    let phi1 = PlanarEmbedding::new(&tri, c1).map_err(usage)?;
    let anchor = (center, tri.neighbors(center)[0]);
    let dev = layout::develop_flat_metric(&tri, &l2, anchor).map_err(|e|

        Failure::Usage(format!("factors do not develop to a flat embedding: {e}")))?;
    let c2: Vec<layout::Z> = dev.positions().iter().map(|p| p - dev.at(center)).collect();
    let phi2 = PlanarEmbedding::new(&tri, c2).map_err(numerical)?;
    let r = phi1.positions().iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    let r2 = layout::containment_radii(&tri, &phi2, center).r_inner;
    let rep = layout::schwarz_verify(&tri, &phi1, &phi2, r, r2, a.epsilon).map_err(layout_failure)?;
    let report = json!({
        "ok": rep.ok,
        "margin": rep.margin,
        "checked": rep.checked,
        "m_const": rep.m_const,
        "center": center,
        "r": r,
        "r2": r2,
        "factor": rep.factor.values(),
    });
    emit(serde_json::to_string_pretty(&report).expect("report"), a.output.as_deref())?;
    if !rep.ok {
        return Err(Failure::Check(format!(
            "distortion bound violated: margin {} over {} vertices",
            rep.margin, rep.checked
        )));
    }
    Ok(())
}

fn cmd_suite(a: SuiteArgs) -> Result<(), Failure> {
    let opts = SuiteOptions {
        instances: a.instances,
        seed: resolve_seed(a.seed)?,
        artifact_dir: a.artifacts.clone(),
        stable_output: a.stable_output,
    };
    let report = run_suite(&a.name, &opts).map_err(usage)?;
    emit(report.to_json(), a.output.as_deref())?;
    if !report.ok() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.id.as_str())
            .collect();
        return Err(Failure::Check(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            report.checks.len(),
            failed.join(", ")
        )));
    }
    Ok(())
}

fn cmd_render_svg(a: RenderArgs) -> Result<(), Failure> {
    let (mf, tri) = load_mesh(&a.mesh)?;
    let pos: Vec<[f64; 2]> = match &mf.positions {
        Some(p) => p.clone(),
        None => {
            // no stored layout: develop the metric, which must be flat
            let (l, _) = metric_of(&mf, &tri)?;
            let anchor = (0, tri.neighbors(0)[0]);
            let dev = layout::develop_flat_metric(&tri, &l, anchor).map_err(|e| {
                Failure::Usage(format!("no positions and the metric does not develop: {e}"))
            })?;
            dev.to_xy()
        }
    };
    let scalar: Option<Vec<f64>> = if a.scalar_curvature {
        let (l, _) = metric_of(&mf, &tri)?;
        Some(metric::curvature(&tri, &l).values().to_vec())
    } else if let Some(p) = &a.scalar_file {
        Some(load_values(p, tri.n_vertices())?)
    } else {
        None
    };
    let svg = mesh_io::svg_embedding(&tri, &pos, scalar.as_deref(), a.width);
    emit(svg, a.output.as_deref())
}
