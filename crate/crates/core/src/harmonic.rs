//! Weighted-graph Laplacians, Dirichlet problems, and effective resistance.
//!
//! The Laplacian is `(Δ_μ u)_i = Σ_j μ_ij (u_j − u_i)`. Dirichlet problems
//! fix `u` off the interior set and solve `Δ_μ u = 0` on it; with strictly
//! positive weights on every edge touching an unknown the system is
//! symmetric positive definite, the solution unique, and its values enclosed
//! by the boundary data (discrete maximum principle). Effective resistance
//! between two terminal sets comes from the unit-potential problem:
//! `Res = 1/energy`.
//!
//! Solver policy: dense Cholesky below [`DENSE_LIMIT`] unknowns, otherwise
//! Jacobi-preconditioned conjugate gradients at 1e−12 relative residual with
//! at most `10·unknowns` iterations. Both paths are deterministic.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::complex::Triangulation;
use crate::metric::EdgeWeights;

/// Unknown-count threshold separating the dense and iterative solver paths.
pub const DENSE_LIMIT: usize = 2000;

/// Weights in `[−ZERO_WEIGHT_THRESHOLD, 0)` are treated as exact zeros
/// (cocircular rounding); anything lower is rejected as genuinely negative.
pub const ZERO_WEIGHT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum HarmonicError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge {i}-{j} has negative weight {mu}")]
    NegativeWeight { i: usize, j: usize, mu: f64 },
    #[error("duplicate edge {i}-{j}")]
    DuplicateEdge { i: usize, j: usize },
    #[error("zero-weight edge {i}-{j} touches an interior unknown")]
    ZeroWeightAtInterior { i: usize, j: usize },
    #[error("singular Dirichlet system: interior component with no boundary contact")]
    SingularSystem,
    #[error("iterative solver stalled after {iterations} iterations at relative residual {residual}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no positive-weight connection between the terminal sets")]
    DisconnectedTerminals,
    #[error("u is not harmonic at vertex {vertex}: residual {residual}")]
    NotHarmonic { vertex: usize, residual: f64 },
}

/// Simple graph with nonnegative edge weights.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    mu: Vec<f64>,
    adj: Vec<Vec<(usize, usize)>>, // (neighbor, edge id)
}

impl WeightedGraph {
    pub fn new(n: usize, weighted_edges: &[((usize, usize), f64)]) -> Result<Self, HarmonicError> {
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(weighted_edges.len());
        let mut mu = Vec::with_capacity(weighted_edges.len());
        for &((a, b), w) in weighted_edges {
            if a == b {
                return Err(HarmonicError::InvalidParameter(format!("self-loop at {a}")));
            }
            if a >= n || b >= n {
                return Err(HarmonicError::InvalidParameter(format!(
                    "edge {a}-{b} out of range for {n} vertices"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(HarmonicError::NegativeWeight { i: a.min(b), j: a.max(b), mu: w });
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(HarmonicError::DuplicateEdge { i: key.0, j: key.1 });
            }
            edges.push(key);
            mu.push(w);
        }
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&e| edges[e]);
        let edges: Vec<_> = order.iter().map(|&e| edges[e]).collect();
        let mu: Vec<_> = order.iter().map(|&e| mu[e]).collect();
        let mut adj = vec![Vec::new(); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        Ok(WeightedGraph { n, edges, mu, adj })
    }

    /// Cotangent network of a mesh: every two-face edge of the triangulation
    /// (interior edges and chords), with boundary-loop edges dropped — their
    /// half-cotangent weights can be negative and they never touch an
    /// interior unknown. Weights within [`ZERO_WEIGHT_THRESHOLD`] of zero are
    /// clamped to zero; weights below that are rejected.
    pub fn from_mesh(tri: &Triangulation, weights: &EdgeWeights) -> Result<Self, HarmonicError> {
        let mut list = Vec::new();
        for (e, &(i, j)) in tri.edges().iter().enumerate() {
            if !tri.is_interior_edge(e) {
                continue;
            }
            let w = weights.at(e);
            if w < -ZERO_WEIGHT_THRESHOLD {
                return Err(HarmonicError::NegativeWeight { i, j, mu: w });
            }
            list.push(((i, j), w.max(0.0)));
        }
        WeightedGraph::new(tri.n_vertices(), &list)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.mu
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    /// Σ of incident weights at `v` (the Laplacian diagonal).
    pub fn weight_sum(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|&(_, e)| self.mu[e]).sum()
    }

    /// Clone with one edge's weight replaced.
    pub fn with_weight(&self, e: usize, w: f64) -> Result<Self, HarmonicError> {
        let mut list: Vec<_> = self.edges.iter().copied().zip(self.mu.iter().copied()).collect();
        list[e].1 = w;
        WeightedGraph::new(self.n, &list.iter().map(|&(k, w)| (k, w)).collect::<Vec<_>>())
    }
}

/// `(Δ_μ u)_i = Σ_j μ_ij (u_j − u_i)` at every vertex.
pub fn laplacian_apply(g: &WeightedGraph, u: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), g.n, "function must be defined on all vertices");
    (0..g.n)
        .map(|i| g.adj[i].iter().map(|&(j, e)| g.mu[e] * (u[j] - u[i])).sum())
        .collect()
}

fn interior_mask(g: &WeightedGraph, interior: &[usize]) -> Result<Vec<bool>, HarmonicError> {
    let mut mask = vec![false; g.n];
    for &v in interior {
        if v >= g.n {
            return Err(HarmonicError::InvalidParameter(format!("interior vertex {v} out of range")));
        }
        if std::mem::replace(&mut mask[v], true) {
            return Err(HarmonicError::InvalidParameter(format!("interior vertex {v} repeated")));
        }
    }
    if interior.len() == g.n {
        return Err(HarmonicError::InvalidParameter("interior must be a proper subset".into()));
    }
    Ok(mask)
}

/// Solves `Δ_μ u = 0` on `interior` with `u = values` elsewhere.
///
/// `values` must be defined on every vertex; entries on the interior are
/// ignored and replaced by the solution.
pub fn dirichlet_solve(
    g: &WeightedGraph,
    interior: &[usize],
    values: &[f64],
) -> Result<Vec<f64>, HarmonicError> {
    if values.len() != g.n {
        return Err(HarmonicError::InvalidParameter(format!(
            "expected {} boundary values, got {}",
            g.n,
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(HarmonicError::InvalidParameter(format!("non-finite boundary value {bad}")));
    }
    let mask = interior_mask(g, interior)?;
    if interior.is_empty() {
        return Ok(values.to_vec());
    }
    for (e, &(a, b)) in g.edges.iter().enumerate() {
        if g.mu[e] == 0.0 && (mask[a] || mask[b]) {
            return Err(HarmonicError::ZeroWeightAtInterior { i: a, j: b });
        }
    }
    // each interior component must see the boundary, else the block is singular
    let mut reached = vec![false; g.n];
    let mut queue: Vec<usize> = (0..g.n).filter(|&v| !mask[v]).collect();
    for &v in &queue {
        reached[v] = true;
    }
    while let Some(v) = queue.pop() {
        for &(w, e) in &g.adj[v] {
            if g.mu[e] > 0.0 && mask[w] && !reached[w] {
                reached[w] = true;
                queue.push(w);
            }
        }
    }
    if interior.iter().any(|&v| !reached[v]) {
        return Err(HarmonicError::SingularSystem);
    }

    let mut ids: Vec<usize> = interior.to_vec();
    ids.sort_unstable();
    let row_of: Vec<Option<usize>> = {
        let mut r = vec![None; g.n];
        for (k, &v) in ids.iter().enumerate() {
            r[v] = Some(k);
        }
        r
    };
    let m = ids.len();
    let mut rhs = vec![0.0; m];
    for (k, &v) in ids.iter().enumerate() {
        for &(w, e) in &g.adj[v] {
            if !mask[w] {
                rhs[k] += g.mu[e] * values[w];
            }
        }
    }
    let x = if m < DENSE_LIMIT {
        let mut a = DMatrix::zeros(m, m);
        for (k, &v) in ids.iter().enumerate() {
            a[(k, k)] = g.weight_sum(v);
            for &(w, e) in &g.adj[v] {
                if let Some(c) = row_of[w] {
                    a[(k, c)] = -g.mu[e];
                }
            }
        }
        let chol = a.cholesky().ok_or(HarmonicError::SingularSystem)?;
        chol.solve(&DVector::from_vec(rhs)).as_slice().to_vec()
    } else {
        pcg(g, &ids, &row_of, &rhs)?
    };
    let mut u = values.to_vec();
    for (k, &v) in ids.iter().enumerate() {
        u[v] = x[k];
    }
    Ok(u)
}

/// Jacobi-preconditioned conjugate gradients on the interior block.
fn pcg(
    g: &WeightedGraph,
    ids: &[usize],
    row_of: &[Option<usize>],
    b: &[f64],
) -> Result<Vec<f64>, HarmonicError> {
    let m = ids.len();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, &v) in ids.iter().enumerate() {
            let mut acc = g.weight_sum(v) * x[k];
            for &(w, e) in &g.adj[v] {
                if let Some(c) = row_of[w] {
                    acc -= g.mu[e] * x[c];
                }
            }
            out[k] = acc;
        }
    };
    let diag: Vec<f64> = ids.iter().map(|&v| g.weight_sum(v)).collect();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let mut x = vec![0.0; m];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; m];
    let max_iter = 10 * m;
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(HarmonicError::SingularSystem);
        }
        let alpha = rz / pap;
        for k in 0..m {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let norm_r = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm_r <= 1e-12 * norm_b {
            return Ok(x);
        }
        for k in 0..m {
            z[k] = r[k] / diag[k];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    let norm_r = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    Err(HarmonicError::NoConvergence { iterations: max_iter, residual: norm_r / norm_b })
}

/// Verdict of [`max_principle_check`].
#[derive(Debug, Clone)]
pub struct MaxPrinciple {
    pub ok: bool,
    /// Interior vertex carrying a strict extremum when `ok` is false.
    pub witness: Option<usize>,
    pub interior_min: f64,
    pub interior_max: f64,
    pub boundary_min: f64,
    pub boundary_max: f64,
}

/// Checks that a (verified-)harmonic function attains its extrema off the
/// interior set, within an absolute comparison slack of 1e−12.
pub fn max_principle_check(
    g: &WeightedGraph,
    interior: &[usize],
    u: &[f64],
) -> Result<MaxPrinciple, HarmonicError> {
    if u.len() != g.n {
        return Err(HarmonicError::InvalidParameter(format!("expected {} values, got {}", g.n, u.len())));
    }
    let mask = interior_mask(g, interior)?;
    let scale = 1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for &v in interior {
        let residual: f64 = g.adj[v].iter().map(|&(j, e)| g.mu[e] * (u[j] - u[v])).sum();
        if residual.abs() > 1e-8 * scale * (1.0 + g.weight_sum(v)) {
            return Err(HarmonicError::NotHarmonic { vertex: v, residual });
        }
    }
    let (mut imin, mut imax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in 0..g.n {
        if mask[v] {
            imin = imin.min(u[v]);
            imax = imax.max(u[v]);
        } else {
            bmin = bmin.min(u[v]);
            bmax = bmax.max(u[v]);
        }
    }
    let mut witness = None;
    for &v in interior {
        if u[v] > bmax + 1e-12 || u[v] < bmin - 1e-12 {
            witness = Some(v);
            break;
        }
    }
    Ok(MaxPrinciple {
        ok: witness.is_none(),
        witness,
        interior_min: imin,
        interior_max: imax,
        boundary_min: bmin,
        boundary_max: bmax,
    })
}

/// Result of the two-terminal potential problem.
#[derive(Debug, Clone)]
pub struct ResistanceReport {
    pub resistance: f64,
    /// Dirichlet energy of the unit potential = conductance = 1/resistance.
    pub conductance: f64,
    /// Potential on the original vertices: 0 on `v1`, 1 on `v2`, harmonic on
    /// the conducting component, 0 on vertices that carry no current.
    pub potential: Vec<f64>,
}

/// Effective resistance between two disjoint terminal sets: both sets are
/// contracted to single nodes, the unit-potential Dirichlet problem is solved
/// on the positive-weight component joining them, and `Res = 1/energy`.
pub fn effective_resistance(
    g: &WeightedGraph,
    v1: &[usize],
    v2: &[usize],
) -> Result<ResistanceReport, HarmonicError> {
    if v1.is_empty() || v2.is_empty() {
        return Err(HarmonicError::InvalidParameter("terminal sets must be nonempty".into()));
    }
    let mut role = vec![0u8; g.n]; // 1 = source set, 2 = sink set
    for &v in v1 {
        if v >= g.n {
            return Err(HarmonicError::InvalidParameter(format!("terminal {v} out of range")));
        }
        role[v] = 1;
    }
    for &v in v2 {
        if v >= g.n {
            return Err(HarmonicError::InvalidParameter(format!("terminal {v} out of range")));
        }
        if role[v] == 1 {
            return Err(HarmonicError::InvalidParameter(format!("terminal sets overlap at {v}")));
        }
        role[v] = 2;
    }
    // contract: source → node n, sink → node n+1
    let node = |v: usize| match role[v] {
        1 => g.n,
        2 => g.n + 1,
        _ => v,
    };
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (e, &(a, b)) in g.edges.iter().enumerate() {
        if g.mu[e] <= 0.0 {
            continue;
        }
        let (x, y) = (node(a), node(b));
        if x == y {
            continue;
        }
        *merged.entry((x.min(y), x.max(y))).or_insert(0.0) += g.mu[e];
    }
    let nn = g.n + 2;
    let mut adj = vec![Vec::new(); nn];
    for (&(a, b), &w) in &merged {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    // component of the source node
    let mut comp = vec![false; nn];
    comp[g.n] = true;
    let mut queue = vec![g.n];
    while let Some(v) = queue.pop() {
        for &(w, _) in &adj[v] {
            if !comp[w] {
                comp[w] = true;
                queue.push(w);
            }
        }
    }
    if !comp[g.n + 1] {
        return Err(HarmonicError::DisconnectedTerminals);
    }
    let edge_list: Vec<_> = merged
        .iter()
        .filter(|(&(a, _), _)| comp[a])
        .map(|(&k, &w)| (k, w))
        .collect();
    let cg = WeightedGraph::new(nn, &edge_list)?;
    let interior: Vec<usize> = (0..g.n).filter(|&v| comp[v] && role[v] == 0).collect();
    let mut values = vec![0.0; nn];
    values[g.n + 1] = 1.0;
    let sol = dirichlet_solve(&cg, &interior, &values)?;
    let energy: f64 = cg
        .edges()
        .iter()
        .zip(cg.weights())
        .map(|(&(a, b), &w)| w * (sol[a] - sol[b]).powi(2))
        .sum();
    if !(energy > 0.0) {
        return Err(HarmonicError::DisconnectedTerminals);
    }
    let potential = (0..g.n).map(|v| sol[node(v)]).collect();
    Ok(ResistanceReport { resistance: 1.0 / energy, conductance: energy, potential })
}

/// Least-squares solve of the overdetermined edge-sum system
/// `u_i + u_j ≈ t_e`: normal equations `(D + A) u = rhs`, positive definite
/// whenever some connected component contains an odd cycle (every
/// triangulated component does). `None` when the factorization fails.
pub(crate) fn edge_sum_least_squares(
    n: usize,
    edges: &[(usize, usize)],
    t: &[f64],
) -> Option<Vec<f64>> {
    let mut m = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (&(i, j), &te) in edges.iter().zip(t) {
        m[(i, i)] += 1.0;
        m[(j, j)] += 1.0;
        m[(i, j)] += 1.0;
        m[(j, i)] += 1.0;
        rhs[i] += te;
        rhs[j] += te;
    }
    m.cholesky().map(|c| c.solve(&rhs).as_slice().to_vec())
}

/// Connectivity of the subgraph left after deleting edges with
/// `μ ≤ ZERO_WEIGHT_THRESHOLD`.
pub fn positive_subgraph_connected(g: &WeightedGraph) -> bool {
    if g.n == 0 {
        return true;
    }
    let mut seen = vec![false; g.n];
    seen[0] = true;
    let mut queue = vec![0];
    let mut count = 1;
    while let Some(v) = queue.pop() {
        for &(w, e) in &g.adj[v] {
            if g.mu[e] > ZERO_WEIGHT_THRESHOLD && !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push(w);
            }
        }
    }
    count == g.n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    fn path(n: usize) -> WeightedGraph {
        let edges: Vec<_> = (0..n - 1).map(|i| ((i, i + 1), 1.0)).collect();
        WeightedGraph::new(n, &edges).unwrap()
    }

    fn grid(w: usize, h: usize, weights: impl Fn(usize) -> f64) -> WeightedGraph {
        let id = |x: usize, y: usize| y * w + x;
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    edges.push(((id(x, y), id(x + 1, y)), 0.0));
                }
                if y + 1 < h {
                    edges.push(((id(x, y), id(x, y + 1)), 0.0));
                }
            }
        }
        let edges: Vec<_> = edges.iter().enumerate().map(|(k, &(e, _))| (e, weights(k))).collect();
        WeightedGraph::new(w * h, &edges).unwrap()
    }

    /// Dense Gaussian elimination with partial pivoting — an independent
    /// check on the production Cholesky/CG paths.
    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    fn dirichlet_oracle(g: &WeightedGraph, interior: &[usize], values: &[f64]) -> Vec<f64> {
        let mut ids = interior.to_vec();
        ids.sort_unstable();
        let mut row = vec![usize::MAX; g.n_vertices()];
        for (k, &v) in ids.iter().enumerate() {
            row[v] = k;
        }
        let m = ids.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for (k, &v) in ids.iter().enumerate() {
            a[k][k] = g.weight_sum(v);
            for &(w, e) in g.neighbors(v) {
                if row[w] != usize::MAX {
                    a[k][row[w]] = -g.weights()[e];
                } else {
                    b[k] += g.weights()[e] * values[w];
                }
            }
        }
        let x = gauss_solve(a, b);
        let mut u = values.to_vec();
        for (k, &v) in ids.iter().enumerate() {
            u[v] = x[k];
        }
        u
    }

    /// Node-elimination (star-mesh) reduction of a resistor network down to
    /// the two contracted terminals.
    fn elimination_resistance(g: &WeightedGraph, v1: &[usize], v2: &[usize]) -> f64 {
        let n = g.n_vertices();
        let node = |v: usize| {
            if v1.contains(&v) {
                n
            } else if v2.contains(&v) {
                n + 1
            } else {
                v
            }
        };
        let mut w = vec![vec![0.0; n + 2]; n + 2];
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let (x, y) = (node(a), node(b));
            if x != y {
                w[x][y] += g.weights()[e];
                w[y][x] += g.weights()[e];
            }
        }
        let mut alive: Vec<usize> = (0..n).filter(|&v| node(v) == v).collect();
        while let Some(k) = alive.pop() {
            let total: f64 = w[k].iter().sum();
            if total == 0.0 {
                continue;
            }
            let others: Vec<usize> = (0..n + 2).filter(|&j| j != k && w[k][j] > 0.0).collect();
            for (ai, &i) in others.iter().enumerate() {
                for &j in &others[ai + 1..] {
                    let add = w[k][i] * w[k][j] / total;
                    w[i][j] += add;
                    w[j][i] += add;
                }
            }
            for j in 0..n + 2 {
                w[k][j] = 0.0;
                w[j][k] = 0.0;
            }
        }
        1.0 / w[n][n + 1]
    }

    #[test]
    fn laplacian_basics() {
        let g = path(3);
        assert_eq!(laplacian_apply(&g, &[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(laplacian_apply(&g, &[0.0, 1.0, 2.0]), vec![1.0, 0.0, -1.0]);
        let u = [0.3, -1.0, 2.0];
        let v = [1.0, 0.5, -0.25];
        let lin: Vec<f64> = laplacian_apply(&g, &u)
            .iter()
            .zip(laplacian_apply(&g, &v))
            .map(|(a, b)| 2.0 * a + 3.0 * b)
            .collect();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 2.0 * a + 3.0 * b).collect();
        for (a, b) in lin.iter().zip(laplacian_apply(&g, &combo)) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn graph_validation() {
        assert!(matches!(
            WeightedGraph::new(3, &[((0, 0), 1.0)]),
            Err(HarmonicError::InvalidParameter(_))
        ));
        assert!(matches!(
            WeightedGraph::new(3, &[((0, 1), 1.0), ((1, 0), 2.0)]),
            Err(HarmonicError::DuplicateEdge { i: 0, j: 1 })
        ));
        assert!(matches!(
            WeightedGraph::new(3, &[((0, 1), -0.5)]),
            Err(HarmonicError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn dirichlet_path_interpolates() {
        let g = path(4);
        let u = dirichlet_solve(&g, &[1, 2], &[0.0, 9.0, 9.0, 1.0]).unwrap();
        assert_relative_eq!(u[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(u[2], 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(u[0], 0.0);
        assert_eq!(u[3], 1.0);
    }

    #[test]
    fn dirichlet_constant_data() {
        let g = grid(4, 4, |_| 1.0);
        let interior: Vec<usize> = (0..16).filter(|&v| ![0, 3, 12, 15].contains(&v)).collect();
        let u = dirichlet_solve(&g, &interior, &vec![2.5; 16]).unwrap();
        for x in u {
            assert_relative_eq!(x, 2.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn dirichlet_matches_elimination_oracle() {
        let mut rng = SplitMix64::new(42);
        for trial in 0..5 {
            let g = grid(5, 5, |_| 0.0);
            let g = {
                let edges: Vec<_> = g
                    .edges()
                    .iter()
                    .map(|&e| (e, rng.range(0.2, 3.0)))
                    .collect();
                WeightedGraph::new(25, &edges).unwrap()
            };
            let boundary: Vec<usize> =
                (0..25).filter(|&v| v < 5 || v >= 20 || v % 5 == 0 || v % 5 == 4).collect();
            let interior: Vec<usize> = (0..25).filter(|v| !boundary.contains(v)).collect();
            let values: Vec<f64> = (0..25).map(|_| rng.range(-2.0, 2.0)).collect();
            let u = dirichlet_solve(&g, &interior, &values).unwrap();
            let oracle = dirichlet_oracle(&g, &interior, &values);
            for (a, b) in u.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-10, "trial {trial}");
            }
            // residual and enclosure postconditions
            let lap = laplacian_apply(&g, &u);
            let f_inf = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for &v in &interior {
                assert!(lap[v].abs() <= 1e-10 * (1.0 + f_inf));
            }
            let bvals: Vec<f64> = boundary.iter().map(|&v| values[v]).collect();
            let (bmin, bmax) = (
                bvals.iter().cloned().fold(f64::INFINITY, f64::min),
                bvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            for &v in &interior {
                assert!(u[v] >= bmin - 1e-12 && u[v] <= bmax + 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_permutation_invariant() {
        let mut rng = SplitMix64::new(5);
        let g = {
            let base = grid(4, 4, |_| 0.0);
            let edges: Vec<_> = base.edges().iter().map(|&e| (e, rng.range(0.5, 2.0))).collect();
            WeightedGraph::new(16, &edges).unwrap()
        };
        let interior = [5usize, 6, 9, 10];
        let values: Vec<f64> = (0..16).map(|v| (v as f64).sin()).collect();
        let u = dirichlet_solve(&g, &interior, &values).unwrap();

        // relabel vertices by a permutation and solve the relabeled problem
        let perm: Vec<usize> = vec![3, 7, 11, 15, 2, 6, 10, 14, 1, 5, 9, 13, 0, 4, 8, 12];
        let edges_p: Vec<_> = g
            .edges()
            .iter()
            .zip(g.weights())
            .map(|(&(a, b), &w)| ((perm[a], perm[b]), w))
            .collect();
        let gp = WeightedGraph::new(16, &edges_p).unwrap();
        let interior_p: Vec<usize> = interior.iter().map(|&v| perm[v]).collect();
        let mut values_p = vec![0.0; 16];
        for v in 0..16 {
            values_p[perm[v]] = values[v];
        }
        let up = dirichlet_solve(&gp, &interior_p, &values_p).unwrap();
        for v in 0..16 {
            assert!((u[v] - up[perm[v]]).abs() <= 1e-12);
        }
    }

    #[test]
    fn dirichlet_rejects_zero_weight_at_interior() {
        let g = WeightedGraph::new(3, &[((0, 1), 1.0), ((1, 2), 0.0)]).unwrap();
        assert!(matches!(
            dirichlet_solve(&g, &[1], &[0.0, 0.0, 1.0]),
            Err(HarmonicError::ZeroWeightAtInterior { i: 1, j: 2 })
        ));
    }

    #[test]
    fn dirichlet_detects_floating_interior() {
        // vertex 2 is interior but disconnected from the boundary
        let g = WeightedGraph::new(4, &[((0, 1), 1.0), ((2, 3), 1.0)]).unwrap();
        assert!(matches!(
            dirichlet_solve(&g, &[2, 3], &[0.0, 1.0, 0.0, 0.0]),
            Err(HarmonicError::SingularSystem)
        ));
    }

    #[test]
    fn pcg_matches_dense_on_large_grid() {
        // 50×46 grid: 2112 interior unknowns forces the iterative path;
        // compare against the same solve split into dense-sized pieces via
        // the harmonic-average residual instead of an O(n³) oracle.
        let (w, h) = (50, 46);
        let mut rng = SplitMix64::new(9);
        let base = grid(w, h, |_| 0.0);
        let edges: Vec<_> = base.edges().iter().map(|&e| (e, rng.range(0.5, 2.0))).collect();
        let g = WeightedGraph::new(w * h, &edges).unwrap();
        let boundary: Vec<usize> = (0..w * h)
            .filter(|&v| v < w || v >= w * (h - 1) || v % w == 0 || v % w == w - 1)
            .collect();
        let interior: Vec<usize> = (0..w * h).filter(|v| !boundary.contains(v)).collect();
        assert!(interior.len() > DENSE_LIMIT);
        let values: Vec<f64> = (0..w * h).map(|v| ((v % w) as f64 / w as f64).cos()).collect();
        let u = dirichlet_solve(&g, &interior, &values).unwrap();
        let lap = laplacian_apply(&g, &u);
        let f_inf = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for &v in &interior {
            assert!(lap[v].abs() <= 1e-10 * (1.0 + f_inf), "residual {} at {v}", lap[v]);
        }
    }

    #[test]
    fn max_principle_on_solver_output() {
        let g = grid(4, 4, |k| 0.5 + (k % 3) as f64);
        let boundary = [0usize, 1, 2, 3, 4, 7, 8, 11, 12, 13, 14, 15];
        let interior = [5usize, 6, 9, 10];
        let mut values = vec![0.0; 16];
        for (k, &v) in boundary.iter().enumerate() {
            values[v] = (k as f64 * 1.3).sin();
        }
        let u = dirichlet_solve(&g, &interior, &values).unwrap();
        let mp = max_principle_check(&g, &interior, &u).unwrap();
        assert!(mp.ok);
        assert!(mp.witness.is_none());
        assert!(mp.interior_max <= mp.boundary_max + 1e-12);

        // constant function: fine everywhere
        let mp = max_principle_check(&g, &interior, &vec![1.0; 16]).unwrap();
        assert!(mp.ok);

        // a strict interior max is not harmonic
        let mut bad = vec![0.0; 16];
        bad[5] = 1.0;
        assert!(matches!(
            max_principle_check(&g, &interior, &bad),
            Err(HarmonicError::NotHarmonic { .. })
        ));
    }

    #[test]
    fn resistance_series_and_parallel() {
        let g = path(3);
        let r = effective_resistance(&g, &[0], &[2]).unwrap();
        assert_relative_eq!(r.resistance, 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.potential[1], 0.5, epsilon = 1e-12);

        // parallel via terminal-set contraction: edges 0-1 and 0-2 with the
        // far ends shorted into one terminal
        let g = WeightedGraph::new(3, &[((0, 1), 1.0), ((0, 2), 1.0)]).unwrap();
        let r = effective_resistance(&g, &[0], &[1, 2]).unwrap();
        assert_relative_eq!(r.resistance, 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.conductance, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn resistance_matches_elimination_oracle() {
        let mut rng = SplitMix64::new(31);
        let base = grid(4, 4, |_| 0.0);
        for trial in 0..5 {
            let edges: Vec<_> = base.edges().iter().map(|&e| (e, rng.range(0.3, 2.5))).collect();
            let g = WeightedGraph::new(16, &edges).unwrap();
            let r = effective_resistance(&g, &[0], &[15]).unwrap();
            let oracle = elimination_resistance(&g, &[0], &[15]);
            assert!((r.resistance - oracle).abs() <= 1e-10, "trial {trial}");
        }
    }

    #[test]
    fn resistance_rayleigh_monotone() {
        let mut rng = SplitMix64::new(77);
        let base = grid(3, 3, |_| 0.0);
        let edges: Vec<_> = base.edges().iter().map(|&e| (e, rng.range(0.3, 2.0))).collect();
        let g = WeightedGraph::new(9, &edges).unwrap();
        let r0 = effective_resistance(&g, &[0], &[8]).unwrap().resistance;
        for e in 0..g.edges().len() {
            let bumped = g.with_weight(e, g.weights()[e] + 0.5).unwrap();
            let r1 = effective_resistance(&bumped, &[0], &[8]).unwrap().resistance;
            assert!(r1 <= r0 + 1e-12, "edge {e}: {r1} > {r0}");
            let oracle = elimination_resistance(&bumped, &[0], &[8]);
            assert!((r1 - oracle).abs() <= 1e-10);
        }
    }

    #[test]
    fn resistance_disconnected_terminals() {
        let g = WeightedGraph::new(4, &[((0, 1), 1.0), ((2, 3), 1.0)]).unwrap();
        assert!(matches!(
            effective_resistance(&g, &[0], &[3]),
            Err(HarmonicError::DisconnectedTerminals)
        ));
        // zero-weight bridge conducts nothing
        let g = WeightedGraph::new(3, &[((0, 1), 1.0), ((1, 2), 0.0)]).unwrap();
        assert!(matches!(
            effective_resistance(&g, &[0], &[2]),
            Err(HarmonicError::DisconnectedTerminals)
        ));
    }

    #[test]
    fn smooth_dependence_on_weights() {
        // |u(μ+tδ) − u(μ)| scales linearly in t (Lipschitz, no fixed constant)
        let mut rng = SplitMix64::new(12);
        let base = grid(4, 4, |_| 0.0);
        let edges: Vec<_> = base.edges().iter().map(|&e| (e, rng.range(0.5, 2.0))).collect();
        let g = WeightedGraph::new(16, &edges).unwrap();
        let interior = [5usize, 6, 9, 10];
        let values: Vec<f64> = (0..16).map(|v| ((v * v) as f64).sin()).collect();
        let u0 = dirichlet_solve(&g, &interior, &values).unwrap();
        let diff = |t: f64| {
            let bumped = g.with_weight(7, g.weights()[7] * (1.0 + t)).unwrap();
            let u = dirichlet_solve(&bumped, &interior, &values).unwrap();
            u.iter().zip(&u0).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max)
        };
        let (d1, d2) = (diff(1e-3), diff(5e-4));
        assert!(d1 > 0.0);
        let ratio = d2 / d1;
        assert!((0.4..=0.6).contains(&ratio), "halving the perturbation gave ratio {ratio}");
    }

    #[test]
    fn positive_subgraph_connectivity() {
        let g = grid(3, 3, |_| 1.0);
        assert!(positive_subgraph_connected(&g));
        let star = WeightedGraph::new(4, &[((0, 1), 0.0), ((0, 2), 0.0), ((0, 3), 0.0)]).unwrap();
        assert!(!positive_subgraph_connected(&star));

        // square with zero diagonal: rim keeps it connected
        let t = crate::complex::build_triangulation(4, &[[0, 1, 2], [0, 2, 3]]).unwrap();
        let pos = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let m = crate::metric::PlMetric::from_positions(&t, &pos).unwrap();
        let w = crate::metric::cot_weights(&t, &m);
        // graph over all edges with clamped weights (rim edges positive here)
        let list: Vec<_> = t
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(i, j))| ((i, j), w.at(e).max(0.0)))
            .collect();
        let g = WeightedGraph::new(4, &list).unwrap();
        let diag = t.edge_id(0, 2).unwrap();
        assert!(g.weights()[diag].abs() <= 1e-15);
        assert!(positive_subgraph_connected(&g));
    }
}
