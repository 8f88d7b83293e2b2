//! Discrete extremal length on weighted graphs.
//!
//! Edge conductance is the variational value `inf Σ μ m²` over edge metrics
//! admissible for the paths joining two terminal sets; by the Dirichlet
//! principle it equals the reciprocal of effective resistance, and the
//! implementation cross-checks the two. Vertex modulus `Mod = inf Σ η²`
//! over vertex metrics with `Σ_{v∈γ} η(v) ≥ 1` on every joining path γ
//! (endpoints included) is solved by constraint generation: the exponential
//! path family is separated by a vertex-weighted Dijkstra, and each
//! restricted problem is the dual QP `max_{λ≥0} Σλ − ¼‖Aᵀλ‖²`, solved
//! exactly by an active-set method; `η = Aᵀλ/2` is then automatically
//! nonnegative. VEL is the reciprocal of Mod.
//!
//! On top sit executable forms of the comparison lemmas: `VEL ≤ 2C·Res`
//! for vertex weight-sums bounded by C, the annulus lower bound through
//! the explicit admissible metric `η(i) = d(i)/(r₂−r₁)`, superadditivity
//! across nested separating sets, and growth tables along doubling rings.

use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::Triangulation;
use crate::harmonic::{self, HarmonicError, WeightedGraph};
use crate::layout::PlanarEmbedding;
use crate::par;

/// Constraint-generation stops once the lightest joining path weighs this
/// close to 1.
pub const SEPARATION_TOL: f64 = 1e-8;

/// Cap on generated path constraints.
pub const MAX_CONSTRAINTS: usize = 10_000;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum NetworkError {
    #[error("no path joins the terminal sets")]
    DisconnectedTerminals,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("constraint generation hit the path cap; best feasible objective {objective}")]
    IterationLimit { objective: f64, solution: Box<ModulusSolution> },
    #[error("hypothesis violated at vertex {vertex}: {detail}")]
    HypothesisViolated { vertex: usize, detail: String },
    #[error("set {layer} does not separate the sets before it from the sets after it")]
    SeparationViolated { layer: usize },
    #[error("annulus radii must satisfy 0 < r < r2, got ({r}, {r2})")]
    BadRadii { r: f64, r2: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Which objects carry the metric in an extremal-length program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    Edge,
    Vertex,
}

/// A validated extremal-length instance.
#[derive(Debug, Clone)]
pub struct ExtremalLengthProblem {
    pub graph: WeightedGraph,
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub mode: MetricMode,
}

/// Solution of an extremal-length program: the optimal metric (per vertex
/// or per edge according to the mode), its objective, the generated paths
/// active at the optimum, and a duality-gap estimate.
#[derive(Debug, Clone)]
pub struct ModulusSolution {
    pub mode: MetricMode,
    pub values: Vec<f64>,
    pub objective: f64,
    pub active_paths: Vec<Vec<usize>>,
    pub gap: f64,
}

fn canonical_terminals(
    n: usize,
    v1: &[usize],
    v2: &[usize],
) -> Result<(Vec<usize>, Vec<usize>), NetworkError> {
    let clean = |s: &[usize], name: &str| -> Result<Vec<usize>, NetworkError> {
        if s.is_empty() {
            return Err(NetworkError::InvalidParameter(format!("terminal set {name} is empty")));
        }
        let set: std::collections::BTreeSet<usize> = s.iter().copied().collect();
        if let Some(&bad) = set.iter().find(|&&v| v >= n) {
            return Err(NetworkError::InvalidParameter(format!(
                "terminal vertex {bad} out of range for {n} vertices"
            )));
        }
        Ok(set.into_iter().collect())
    };
    let a = clean(v1, "V1")?;
    let b = clean(v2, "V2")?;
    let bs: std::collections::BTreeSet<usize> = b.iter().copied().collect();
    if let Some(&shared) = a.iter().find(|v| bs.contains(v)) {
        return Err(NetworkError::InvalidParameter(format!(
            "terminal sets share vertex {shared}"
        )));
    }
    Ok((a, b))
}

impl ExtremalLengthProblem {
    pub fn new(
        graph: WeightedGraph,
        v1: &[usize],
        v2: &[usize],
        mode: MetricMode,
    ) -> Result<Self, NetworkError> {
        let (v1, v2) = canonical_terminals(graph.n_vertices(), v1, v2)?;
        // terminals must be joined by some path
        let eta = vec![0.0; graph.n_vertices()];
        let mut sink = vec![false; graph.n_vertices()];
        for &v in &v2 {
            sink[v] = true;
        }
        if min_weight_path(&graph, &eta, &v1, &sink).is_none() {
            return Err(NetworkError::DisconnectedTerminals);
        }
        Ok(ExtremalLengthProblem { graph, v1, v2, mode })
    }

    pub fn solve(&self) -> Result<ModulusSolution, NetworkError> {
        match self.mode {
            MetricMode::Vertex => vertex_modulus(&self.graph, &self.v1, &self.v2),
            MetricMode::Edge => {
                let (cond, potential) = conductance_with_potential(&self.graph, &self.v1, &self.v2)?;
                let m: Vec<f64> = self
                    .graph
                    .edges()
                    .iter()
                    .map(|&(i, j)| (potential[i] - potential[j]).abs())
                    .collect();
                let tight = min_edge_path(&self.graph, &m, &self.v1, &self.v2)
                    .ok_or(NetworkError::DisconnectedTerminals)?;
                let res = harmonic::effective_resistance(&self.graph, &self.v1, &self.v2)?;
                Ok(ModulusSolution {
                    mode: MetricMode::Edge,
                    values: m,
                    objective: cond,
                    active_paths: vec![tight.1],
                    gap: (cond * res.resistance - 1.0).abs(),
                })
            }
        }
    }
}

/// JSON form of an [`ExtremalLengthProblem`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub mode: MetricMode,
}

impl ProblemJson {
    pub fn from_problem(p: &ExtremalLengthProblem) -> Self {
        let unit = p.graph.weights().iter().all(|&w| w == 1.0);
        ProblemJson {
            vertices: p.graph.n_vertices(),
            edges: p.graph.edges().iter().map(|&(i, j)| [i, j]).collect(),
            weights: if unit { None } else { Some(p.graph.weights().to_vec()) },
            v1: p.v1.clone(),
            v2: p.v2.clone(),
            mode: p.mode,
        }
    }

    pub fn into_problem(self) -> Result<ExtremalLengthProblem, NetworkError> {
        if let Some(w) = &self.weights {
            if w.len() != self.edges.len() {
                return Err(NetworkError::InvalidParameter(format!(
                    "{} weights for {} edges",
                    w.len(),
                    self.edges.len()
                )));
            }
        }
        let list: Vec<((usize, usize), f64)> = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &[i, j])| ((i, j), self.weights.as_ref().map_or(1.0, |w| w[e])))
            .collect();
        let graph = WeightedGraph::new(self.vertices, &list)?;
        ExtremalLengthProblem::new(graph, &self.v1, &self.v2, self.mode)
    }

    pub fn to_json(&self) -> Result<String, NetworkError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, NetworkError> {
        Ok(serde_json::from_str(s)?)
    }
}

/// JSON form of a [`ModulusSolution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionJson {
    pub mode: MetricMode,
    pub values: Vec<f64>,
    pub objective: f64,
    pub active_paths: Vec<Vec<usize>>,
    pub gap: f64,
}

impl ModulusSolution {
    pub fn to_json(&self) -> Result<String, NetworkError> {
        let s = SolutionJson {
            mode: self.mode,
            values: self.values.clone(),
            objective: self.objective,
            active_paths: self.active_paths.clone(),
            gap: self.gap,
        };
        Ok(serde_json::to_string_pretty(&s)?)
    }
}

#[derive(PartialEq)]
struct HeapKey(f64, usize);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Lightest path from `sources` to the sink set under vertex costs `eta`,
/// endpoints included in the cost. Ties resolve by lexicographic vertex
/// order, so the result is deterministic.
fn min_weight_path(
    g: &WeightedGraph,
    eta: &[f64],
    sources: &[usize],
    sink: &[bool],
) -> Option<(f64, Vec<usize>)> {
    let n = g.n_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap: BinaryHeap<std::cmp::Reverse<HeapKey>> = BinaryHeap::new();
    for &s in sources {
        if eta[s] < dist[s] {
            dist[s] = eta[s];
            heap.push(std::cmp::Reverse(HeapKey(eta[s], s)));
        }
    }
    while let Some(std::cmp::Reverse(HeapKey(d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        if sink[v] {
            let mut path = vec![v];
            let mut at = v;
            while pred[at] != usize::MAX {
                at = pred[at];
                path.push(at);
            }
            path.reverse();
            return Some((d, path));
        }
        for &(u, _) in g.neighbors(v) {
            if settled[u] {
                continue;
            }
            let nd = d + eta[u];
            if nd < dist[u] || (nd == dist[u] && v < pred[u]) {
                dist[u] = nd;
                pred[u] = v;
                heap.push(std::cmp::Reverse(HeapKey(nd, u)));
            }
        }
    }
    None
}

/// Lightest path under per-edge costs `m`; used for the edge-mode tight
/// path. Endpoint vertices carry no cost.
fn min_edge_path(
    g: &WeightedGraph,
    m: &[f64],
    sources: &[usize],
    v2: &[usize],
) -> Option<(f64, Vec<usize>)> {
    let n = g.n_vertices();
    let mut sink = vec![false; n];
    for &v in v2 {
        sink[v] = true;
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap: BinaryHeap<std::cmp::Reverse<HeapKey>> = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(std::cmp::Reverse(HeapKey(0.0, s)));
    }
    while let Some(std::cmp::Reverse(HeapKey(d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        if sink[v] {
            let mut path = vec![v];
            let mut at = v;
            while pred[at] != usize::MAX {
                at = pred[at];
                path.push(at);
            }
            path.reverse();
            return Some((d, path));
        }
        for &(u, e) in g.neighbors(v) {
            if settled[u] {
                continue;
            }
            let nd = d + m[e];
            if nd < dist[u] || (nd == dist[u] && v < pred[u]) {
                dist[u] = nd;
                pred[u] = v;
                heap.push(std::cmp::Reverse(HeapKey(nd, u)));
            }
        }
    }
    None
}

/// Solves `max_{λ≥0} Σλ − ¼‖Aᵀλ‖²` by an active-set method, warm-started
/// from `lambda`; returns `η = Aᵀλ/2`. `A` is the 0/1 path-vertex
/// incidence of `paths`.
fn solve_dual_qp(
    n: usize,
    paths: &[Vec<usize>],
    lambda: &mut Vec<f64>,
) -> Result<Vec<f64>, NetworkError> {
    let m = paths.len();
    lambda.resize(m, 0.0);
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, path) in paths.iter().enumerate() {
        for &v in path {
            by_vertex[v].push(p);
        }
    }
    for list in &by_vertex {
        for (ai, &a) in list.iter().enumerate() {
            for &b in &list[ai..] {
                gram[(a, b)] += 0.5;
                if a != b {
                    gram[(b, a)] += 0.5;
                }
            }
        }
    }
    let eta_of = |lam: &[f64]| -> Vec<f64> {
        let mut eta = vec![0.0; n];
        for (p, path) in paths.iter().enumerate() {
            if lam[p] != 0.0 {
                for &v in path {
                    eta[v] += 0.5 * lam[p];
                }
            }
        }
        eta
    };
    let mut active: Vec<bool> = lambda.iter().map(|&l| l > 0.0).collect();
    if !active.iter().any(|&a| a) {
        active[m - 1] = true;
    }
    let max_iter = 100 + 10 * m;
    for _ in 0..max_iter {
        let idx: Vec<usize> = (0..m).filter(|&p| active[p]).collect();
        let k = idx.len();
        let mut sub = DMatrix::<f64>::zeros(k, k);
        for (a, &pa) in idx.iter().enumerate() {
            for (b, &pb) in idx.iter().enumerate() {
                sub[(a, b)] = gram[(pa, pb)];
            }
        }
        let rhs = DVector::from_element(k, 1.0);
        let mut target = None;
        let mut ridge = 0.0;
        for _ in 0..5 {
            let mut reg = sub.clone();
            for d in 0..k {
                reg[(d, d)] += ridge;
            }
            if let Some(ch) = reg.cholesky() {
                target = Some(ch.solve(&rhs));
                break;
            }
            ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
        }
        let target =
            target.ok_or_else(|| NetworkError::NumericalFailure("path Gram matrix is singular".into()))?;
        if target.iter().all(|&l| l >= -1e-12) {
            for (a, &p) in idx.iter().enumerate() {
                lambda[p] = target[a].max(0.0);
            }
            // optimal on the active set; activate the most violated
            // remaining constraint, if any
            let eta = eta_of(lambda);
            let mut worst: Option<(f64, usize)> = None;
            for (p, path) in paths.iter().enumerate() {
                if active[p] {
                    continue;
                }
                let s: f64 = path.iter().map(|&v| eta[v]).sum();
                if s < 1.0 - 1e-12 && worst.map_or(true, |(ws, _)| s < ws) {
                    worst = Some((s, p));
                }
            }
            match worst {
                Some((_, p)) => active[p] = true,
                None => return Ok(eta),
            }
        } else {
            // blocked: step as far as feasibility allows, deactivate the
            // first multiplier to hit zero
            let mut alpha = 1.0f64;
            let mut blocker = None;
            for (a, &p) in idx.iter().enumerate() {
                if target[a] < 0.0 {
                    let step = lambda[p] / (lambda[p] - target[a]);
                    if step < alpha {
                        alpha = step;
                        blocker = Some(p);
                    }
                }
            }
            for (a, &p) in idx.iter().enumerate() {
                lambda[p] = (lambda[p] + alpha * (target[a] - lambda[p])).max(0.0);
            }
            let blocker = blocker
                .ok_or_else(|| NetworkError::NumericalFailure("active-set step found no blocker".into()))?;
            lambda[blocker] = 0.0;
            active[blocker] = false;
        }
    }
    Err(NetworkError::NumericalFailure("active-set iteration cap reached".into()))
}

fn build_solution(
    n: usize,
    paths: &[Vec<usize>],
    lambda: &[f64],
    eta: Vec<f64>,
    min_path_weight: f64,
) -> ModulusSolution {
    let objective: f64 = eta.iter().map(|x| x * x).sum();
    let active_paths: Vec<Vec<usize>> = paths
        .iter()
        .zip(lambda)
        .filter(|(_, &l)| l > 1e-12)
        .map(|(p, _)| p.clone())
        .collect();
    let dual: f64 = lambda.iter().sum::<f64>() - objective;
    let feasible_scale = 1.0 / min_path_weight.min(1.0);
    let gap = (objective * feasible_scale * feasible_scale - dual).abs();
    let _ = n;
    ModulusSolution { mode: MetricMode::Vertex, values: eta, objective, active_paths, gap }
}

/// `Mod(V1,V2) = inf { Σ_v η(v)² : Σ_{v∈γ} η(v) ≥ 1 on every joining path }`
/// by constraint generation.
pub fn vertex_modulus(
    g: &WeightedGraph,
    v1: &[usize],
    v2: &[usize],
) -> Result<ModulusSolution, NetworkError> {
    let n = g.n_vertices();
    let (v1, v2) = canonical_terminals(n, v1, v2)?;
    let mut sink = vec![false; n];
    for &v in &v2 {
        sink[v] = true;
    }
    let mut eta = vec![0.0; n];
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    loop {
        let (w, path) = min_weight_path(g, &eta, &v1, &sink).ok_or(NetworkError::DisconnectedTerminals)?;
        if !paths.is_empty() && w >= 1.0 - SEPARATION_TOL {
            return Ok(build_solution(n, &paths, &lambda, eta, w));
        }
        if paths.len() >= MAX_CONSTRAINTS {
            // rescale to exact feasibility and hand the best point back
            let scale = 1.0 / w;
            let scaled: Vec<f64> = eta.iter().map(|x| x * scale).collect();
            let sol = build_solution(n, &paths, &lambda, scaled, 1.0);
            return Err(NetworkError::IterationLimit {
                objective: sol.objective,
                solution: Box::new(sol),
            });
        }
        paths.push(path);
        eta = solve_dual_qp(n, &paths, &mut lambda)?;
    }
}

/// `VEL(V1,V2) = 1/Mod(V1,V2)`.
pub fn vel(g: &WeightedGraph, v1: &[usize], v2: &[usize]) -> Result<f64, NetworkError> {
    Ok(1.0 / vertex_modulus(g, v1, v2)?.objective)
}

fn conductance_with_potential(
    g: &WeightedGraph,
    v1: &[usize],
    v2: &[usize],
) -> Result<(f64, Vec<f64>), NetworkError> {
    let n = g.n_vertices();
    // restrict to the vertices reachable from the terminals through
    // positive-weight edges; anything else carries no current
    let mut reach = vec![false; n];
    let mut queue: std::collections::VecDeque<usize> = v1.iter().chain(v2).copied().collect();
    for &v in &queue {
        reach[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &(u, e) in g.neighbors(v) {
            if g.weights()[e] > 0.0 && !reach[u] {
                reach[u] = true;
                queue.push_back(u);
            }
        }
    }
    let new_id: Vec<Option<usize>> = {
        let mut next = 0usize;
        reach
            .iter()
            .map(|&r| {
                if r {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    };
    let m = reach.iter().filter(|&&r| r).count();
    let list: Vec<((usize, usize), f64)> = g
        .edges()
        .iter()
        .zip(g.weights())
        .filter(|(&(i, j), &w)| w > 0.0 && reach[i] && reach[j])
        .map(|(&(i, j), &w)| ((new_id[i].unwrap(), new_id[j].unwrap()), w))
        .collect();
    let sub = WeightedGraph::new(m, &list)?;
    let mut boundary = vec![false; m];
    let mut values = vec![0.0; m];
    for &v in v1 {
        boundary[new_id[v].unwrap()] = true;
    }
    for &v in v2 {
        let s = new_id[v].unwrap();
        boundary[s] = true;
        values[s] = 1.0;
    }
    let interior: Vec<usize> = (0..m).filter(|&v| !boundary[v]).collect();
    let u = harmonic::dirichlet_solve(&sub, &interior, &values)?;
    let cond: f64 = sub
        .edges()
        .iter()
        .zip(sub.weights())
        .map(|(&(i, j), &w)| w * (u[i] - u[j]) * (u[i] - u[j]))
        .sum();
    let mut full = vec![0.0; n];
    for v in 0..n {
        if let Some(s) = new_id[v] {
            full[v] = u[s];
        }
    }
    Ok((cond, full))
}

/// `Cond(V1,V2) = inf Σ μ(e) m(e)²` over edge metrics admissible for the
/// joining paths; computed from the unit-potential energy and cross-checked
/// against `1/effective_resistance`.
pub fn edge_conductance(g: &WeightedGraph, v1: &[usize], v2: &[usize]) -> Result<f64, NetworkError> {
    let (v1, v2) = canonical_terminals(g.n_vertices(), v1, v2)?;
    let (cond, _) = match conductance_with_potential(g, &v1, &v2) {
        Ok(x) => x,
        Err(NetworkError::Harmonic(HarmonicError::DisconnectedTerminals)) => {
            return Err(NetworkError::DisconnectedTerminals)
        }
        Err(e) => return Err(e),
    };
    let res = match harmonic::effective_resistance(g, &v1, &v2) {
        Ok(r) => r,
        Err(HarmonicError::DisconnectedTerminals) => return Err(NetworkError::DisconnectedTerminals),
        Err(e) => return Err(e.into()),
    };
    let agreement = (cond * res.resistance - 1.0).abs();
    if agreement > 1e-6 {
        return Err(NetworkError::NumericalFailure(format!(
            "variational and potential values disagree: cond·res − 1 = {agreement:e}"
        )));
    }
    Ok(cond)
}

/// Outcome of [`he_inequality_check`].
#[derive(Debug, Clone)]
pub struct HeReport {
    pub ok: bool,
    /// `2C·Res − VEL`.
    pub slack: f64,
    pub vel: f64,
    pub resistance: f64,
    pub c: f64,
}

/// Checks `VEL(V1,V2) ≤ 2C·Res(V1,V2)` for a graph whose per-vertex weight
/// sums are bounded by `C`.
pub fn he_inequality_check(
    g: &WeightedGraph,
    v1: &[usize],
    v2: &[usize],
    c: f64,
) -> Result<HeReport, NetworkError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(NetworkError::InvalidParameter(format!("weight-sum bound must be positive, got {c}")));
    }
    for v in 0..g.n_vertices() {
        let s = g.weight_sum(v);
        if s > c + 1e-12 * (1.0 + c) {
            return Err(NetworkError::HypothesisViolated {
                vertex: v,
                detail: format!("weight sum {s} exceeds the bound {c}"),
            });
        }
    }
    let vel_val = vel(g, v1, v2)?;
    let res = match harmonic::effective_resistance(g, v1, v2) {
        Ok(r) => r.resistance,
        Err(HarmonicError::DisconnectedTerminals) => return Err(NetworkError::DisconnectedTerminals),
        Err(e) => return Err(e.into()),
    };
    let slack = 2.0 * c * res - vel_val;
    Ok(HeReport { ok: slack >= -1e-6, slack, vel: vel_val, resistance: res, c })
}

/// `Mod(A_{r,r2}) = ln(r2/r)/(2π)` for the round annulus.
pub fn annulus_modulus(r: f64, r2: f64) -> Result<f64, NetworkError> {
    if !(r > 0.0 && r.is_finite() && r2 > r && r2.is_finite()) {
        return Err(NetworkError::BadRadii { r, r2 });
    }
    Ok((r2 / r).ln() / (2.0 * std::f64::consts::PI))
}

/// Unit-weight graph on the 1-skeleton of a triangulation (boundary edges
/// included — paths may run along the boundary).
pub fn skeleton_graph(tri: &Triangulation) -> WeightedGraph {
    let list: Vec<((usize, usize), f64)> = tri.edges().iter().map(|&e| (e, 1.0)).collect();
    WeightedGraph::new(tri.n_vertices(), &list).expect("triangulation edges form a simple graph")
}

/// Outcome of [`vel_annulus_bound_check`].
#[derive(Debug, Clone)]
pub struct VelAnnulusReport {
    pub ok: bool,
    pub vel: f64,
    /// `1/Σ η(i)²` for the explicit admissible metric `η(i) = d(i)/(r2−r1)`
    /// with `d(i)` the longest incident edge in the embedding.
    pub proof_bound: f64,
}

/// Lower bound on VEL across an embedded annulus: `V1` inside the `r1`-disk,
/// `V2` outside the `r2`-disk, every 1-ring of `V1` inside the `r2`-disk.
/// The proof's metric `η(i) = d(i)/(r2−r1)` is evaluated, its admissibility
/// re-checked by separation, and `VEL ≥ 1/Ση²` confirmed.
pub fn vel_annulus_bound_check(
    tri: &Triangulation,
    phi: &PlanarEmbedding,
    v1: &[usize],
    v2: &[usize],
    r1: f64,
    r2: f64,
) -> Result<VelAnnulusReport, NetworkError> {
    if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
        return Err(NetworkError::BadRadii { r: r1, r2 });
    }
    let n = tri.n_vertices();
    let (v1, v2) = canonical_terminals(n, v1, v2)?;
    let slack = 1e-12 * (1.0 + r2);
    for &v in &v1 {
        if phi.at(v).norm() > r1 + slack {
            return Err(NetworkError::HypothesisViolated {
                vertex: v,
                detail: format!("|φ| = {} exceeds r1 = {r1}", phi.at(v).norm()),
            });
        }
        for u in tri.one_ring(v).neighbors {
            if phi.at(u).norm() >= r2 - slack {
                return Err(NetworkError::HypothesisViolated {
                    vertex: u,
                    detail: format!("1-ring of V1 escapes the r2-disk at |φ| = {}", phi.at(u).norm()),
                });
            }
        }
    }
    for &v in &v2 {
        if phi.at(v).norm() < r2 - slack {
            return Err(NetworkError::HypothesisViolated {
                vertex: v,
                detail: format!("|φ| = {} is below r2 = {r2}", phi.at(v).norm()),
            });
        }
    }
    let g = skeleton_graph(tri);
    let sol = vertex_modulus(&g, &v1, &v2)?;
    let vel_val = 1.0 / sol.objective;
    let eta: Vec<f64> = (0..n)
        .map(|v| {
            tri.one_ring(v)
                .neighbors
                .iter()
                .map(|&u| (phi.at(v) - phi.at(u)).norm())
                .fold(0.0f64, f64::max)
                / (r2 - r1)
        })
        .collect();
    let mut sink = vec![false; n];
    for &v in &v2 {
        sink[v] = true;
    }
    let (w, _) = min_weight_path(&g, &eta, &v1, &sink).ok_or(NetworkError::DisconnectedTerminals)?;
    assert!(
        w >= 1.0 - 1e-9,
        "proof metric must be admissible under the lemma hypotheses; lightest path {w}"
    );
    let proof_bound = 1.0 / eta.iter().map(|x| x * x).sum::<f64>();
    Ok(VelAnnulusReport { ok: vel_val >= proof_bound - 1e-9, vel: vel_val, proof_bound })
}

/// Outcome of [`vel_additivity_check`].
#[derive(Debug, Clone)]
pub struct AdditivityReport {
    pub ok: bool,
    /// `VEL(V1, V_{2m}) − Σ_k VEL(V_{2k−1}, V_{2k})`.
    pub slack: f64,
    pub total: f64,
    pub parts: Vec<f64>,
}

/// `VEL(V_1, V_{2m}) ≥ Σ_k VEL(V_{2k−1}, V_{2k})` for a chain of sets in
/// which every intermediate set separates those before it from those after
/// it; separation is verified combinatorially first.
pub fn vel_additivity_check(
    g: &WeightedGraph,
    sets: &[Vec<usize>],
) -> Result<AdditivityReport, NetworkError> {
    let m2 = sets.len();
    if m2 < 2 || m2 % 2 != 0 {
        return Err(NetworkError::InvalidParameter(format!(
            "need an even number (≥ 2) of sets, got {m2}"
        )));
    }
    let n = g.n_vertices();
    for (k, s) in sets.iter().enumerate() {
        if s.is_empty() {
            return Err(NetworkError::InvalidParameter(format!("set {k} is empty")));
        }
        if let Some(&bad) = s.iter().find(|&&v| v >= n) {
            return Err(NetworkError::InvalidParameter(format!("set {k} contains out-of-range vertex {bad}")));
        }
    }
    // every middle set must block all paths from the earlier to the later sets
    for k in 1..m2 - 1 {
        let mut removed = vec![false; n];
        for &v in &sets[k] {
            removed[v] = true;
        }
        let mut reach = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for s in &sets[..k] {
            for &v in s {
                if !removed[v] && !reach[v] {
                    reach[v] = true;
                    queue.push_back(v);
                }
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(u, _) in g.neighbors(v) {
                if !removed[u] && !reach[u] {
                    reach[u] = true;
                    queue.push_back(u);
                }
            }
        }
        for s in &sets[k + 1..] {
            if let Some(&bad) = s.iter().find(|&&v| !removed[v] && reach[v]) {
                let _ = bad;
                return Err(NetworkError::SeparationViolated { layer: k });
            }
        }
    }
    let total = vel(g, &sets[0], &sets[m2 - 1])?;
    let parts = (0..m2 / 2)
        .map(|k| vel(g, &sets[2 * k], &sets[2 * k + 1]))
        .collect::<Result<Vec<_>, _>>()?;
    let slack = total - parts.iter().sum::<f64>();
    Ok(AdditivityReport { ok: slack >= -1e-6, slack, total, parts })
}

/// One row of a [`parabolicity_growth`] table.
#[derive(Debug, Clone)]
pub struct GrowthRow {
    pub k: usize,
    pub radius: f64,
    pub ring_vertices: usize,
    /// `VEL(V0, ring_k)`.
    pub vel: f64,
    /// `VEL(V0, ring_1) + Σ_j VEL(ring_{2j}, ring_{2j+1})` over the
    /// alternating pairwise-disjoint annuli fitting below `ring_k` — the
    /// superadditive lower bound (the lemma needs disjoint pairs, so
    /// consecutive terms cannot share a ring).
    pub cumulative: f64,
}

/// VEL growth from the unit ball about `center` to rings at doubling radii
/// `2^k`, `k = 1..=k_max`. Ring `k` is the shell `2^k ≤ |φ−φ(center)| <
/// 2^k + w` with `w` just above the longest embedded edge, so every path
/// outward passes through each shell. Monotonicity in `k` and
/// superadditivity against the cumulative sum are asserted (they are
/// theorems); the table is returned for inspection.
pub fn parabolicity_growth(
    tri: &Triangulation,
    phi: &PlanarEmbedding,
    center: usize,
    k_max: usize,
) -> Result<Vec<GrowthRow>, NetworkError> {
    if k_max == 0 {
        return Err(NetworkError::InvalidParameter("need at least one ring".into()));
    }
    if center >= tri.n_vertices() {
        return Err(NetworkError::InvalidParameter(format!("center {center} out of range")));
    }
    let c0 = phi.at(center);
    let w = 1.01
        * tri
            .edges()
            .iter()
            .map(|&(i, j)| (phi.at(i) - phi.at(j)).norm())
            .fold(0.0f64, f64::max);
    if w >= 2.0 {
        return Err(NetworkError::InvalidParameter(format!(
            "edges of length up to {w} are too long for unit-scale shells"
        )));
    }
    let dist: Vec<f64> = (0..tri.n_vertices()).map(|v| (phi.at(v) - c0).norm()).collect();
    let ball: Vec<usize> = (0..tri.n_vertices()).filter(|&v| dist[v] <= 1.0).collect();
    let shell = |k: usize| -> Vec<usize> {
        let r = (1u64 << k) as f64;
        (0..tri.n_vertices()).filter(|&v| dist[v] >= r && dist[v] < r + w).collect()
    };
    let shells: Vec<Vec<usize>> = (1..=k_max).map(shell).collect();
    for (k, s) in shells.iter().enumerate() {
        if s.is_empty() {
            return Err(NetworkError::InvalidParameter(format!(
                "embedding does not cover ring {} (radius {})",
                k + 1,
                (1u64 << (k + 1))
            )));
        }
    }
    let g = skeleton_graph(tri);
    // VEL(V0, ring_k) and the alternating-pair steps, in parallel over k.
    // Rows k = 1 contribute VEL(V0, ring_1); rows with odd k ≥ 3 contribute
    // VEL(ring_{k−1}, ring_k); even rows add nothing, keeping the summed
    // pairs disjoint as the superadditivity lemma requires.
    let computed: Vec<Result<(f64, f64), NetworkError>> = par::map_indexed(k_max, |i| {
        let v = vel(&g, &ball, &shells[i])?;
        let k = i + 1;
        let step = if k == 1 {
            v
        } else if k % 2 == 1 {
            vel(&g, &shells[i - 1], &shells[i])?
        } else {
            0.0
        };
        Ok((v, step))
    });
    let mut rows = Vec::with_capacity(k_max);
    let mut cumulative = 0.0;
    let mut prev = 0.0;
    for (i, res) in computed.into_iter().enumerate() {
        let (v, step) = res?;
        cumulative += step;
        assert!(
            v >= prev - 1e-6,
            "VEL growth must be nondecreasing: ring {} fell from {prev} to {v}",
            i + 1
        );
        assert!(
            v >= cumulative - 1e-6,
            "VEL must dominate the superadditive sum: ring {} has {v} vs {cumulative}",
            i + 1
        );
        rows.push(GrowthRow {
            k: i + 1,
            radius: (1u64 << (i + 1)) as f64,
            ring_vertices: shells[i].len(),
            vel: v,
            cumulative,
        });
        prev = v;
    }
    Ok(rows)
}
