//! Triangulated disk patches: the combinatorial substrate.
//!
//! A [`Triangulation`] is a finite simplicial disk with consistently
//! counterclockwise faces, dense 0-based vertex indices, and edges stored as
//! sorted pairs. Validation happens once at construction; downstream modules
//! assume a manifold disk and never re-check.
//!
//! A vertex is *interior* when its link is a single closed cycle (its 1-ring
//! neighborhood is a disk); otherwise its link is a single path and the
//! vertex lies on the unique boundary loop.

use std::collections::HashMap;

use crate::delaunay;
use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum ComplexError {
    #[error("face {face} references vertex {vertex}, but only {vertices} vertices exist")]
    VertexOutOfRange { face: usize, vertex: usize, vertices: usize },
    #[error("face {face} repeats a vertex: {corners:?}")]
    DegenerateFace { face: usize, corners: [usize; 3] },
    #[error("edge {i}-{j} borders more than two faces")]
    NonManifoldEdge { i: usize, j: usize },
    #[error("edge {i}-{j} is traversed twice in the same direction; face orientations are inconsistent")]
    InconsistentOrientation { i: usize, j: usize },
    #[error("vertex {vertex} has a non-disk link (isolated, pinched, or split fan)")]
    NonManifoldVertex { vertex: usize },
    #[error("the complex is disconnected")]
    Disconnected,
    #[error("not a disk patch: Euler characteristic {euler}, boundary loops {boundary_loops}")]
    NotADisk { euler: i64, boundary_loops: usize },
    #[error("subcomplex generated by the given vertex set contains no faces")]
    EmptySubcomplex,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// An ordered 1-ring neighborhood. `neighbors` are counterclockwise; for an
/// interior center they form a cycle (`is_disk`), for a boundary center a
/// path whose ends sit on the boundary loop.
#[derive(Debug, Clone)]
pub struct OneRing {
    pub center: usize,
    pub neighbors: Vec<usize>,
    /// Faces in ccw order; face `t` is (center, neighbors[t], neighbors[t+1 mod]).
    pub faces: Vec<usize>,
    pub is_disk: bool,
}

/// A vertex set split against the ambient triangulation: `interior` holds
/// members that are interior in the triangulation with every neighbor also a
/// member; the rest are `boundary`.
#[derive(Debug, Clone)]
pub struct VertexSubset {
    pub members: Vec<usize>,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

/// The subcomplex generated by a vertex set, reindexed densely.
/// `vertex_map[new] = old`, `face_map[new] = old`.
#[derive(Debug, Clone)]
pub struct SubComplex {
    pub tri: Triangulation,
    pub vertex_map: Vec<usize>,
    pub face_map: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    n: usize,
    faces: Vec<[usize; 3]>,
    /// Sorted vertex pairs in lexicographic order.
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    /// Per edge: incident (face, opposite-vertex) pairs, 1 or 2 of them.
    edge_faces: Vec<Vec<(usize, usize)>>,
    vertex_faces: Vec<Vec<usize>>,
    interior: Vec<bool>,
    /// Directed boundary edge a->b per boundary vertex a (ccw around the patch).
    boundary_next: HashMap<usize, usize>,
    boundary_loop: Vec<usize>,
    /// face containing directed edge (a, b) -> (face, third vertex).
    directed: HashMap<(usize, usize), (usize, usize)>,
}

/// Validates faces as a manifold disk patch with consistent counterclockwise
/// orientation and builds all adjacency structure.
pub fn build_triangulation(n_vertices: usize, faces: &[[usize; 3]]) -> Result<Triangulation, ComplexError> {
    if faces.is_empty() {
        return Err(ComplexError::InvalidParameter("a triangulation needs at least one face".into()));
    }
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        for v in [a, b, c] {
            if v >= n_vertices {
                return Err(ComplexError::VertexOutOfRange { face: f, vertex: v, vertices: n_vertices });
            }
        }
        if a == b || b == c || a == c {
            return Err(ComplexError::DegenerateFace { face: f, corners: [a, b, c] });
        }
    }

    let mut directed: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut edge_faces: Vec<Vec<(usize, usize)>> = Vec::new();
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        for (s, t, opp) in [(a, b, c), (b, c, a), (c, a, b)] {
            let key = (s.min(t), s.max(t));
            let e = *edge_index.entry(key).or_insert_with(|| {
                edges.push(key);
                edge_faces.push(Vec::new());
                edges.len() - 1
            });
            if edge_faces[e].len() >= 2 {
                return Err(ComplexError::NonManifoldEdge { i: key.0, j: key.1 });
            }
            if directed.insert((s, t), (f, opp)).is_some() {
                // Same direction twice; if the edge had a third face we
                // would have bailed above, so this is an orientation flip.
                return Err(ComplexError::InconsistentOrientation { i: s, j: t });
            }
            edge_faces[e].push((f, opp));
        }
    }

    // Re-sort edges lexicographically (discovery order above is face order).
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&e| edges[e]);
    let edges: Vec<(usize, usize)> = order.iter().map(|&e| edges[e]).collect();
    let edge_faces: Vec<Vec<(usize, usize)>> = order.iter().map(|&e| edge_faces[e].clone()).collect();
    let edge_index: HashMap<(usize, usize), usize> = edges.iter().copied().enumerate().map(|(k, e)| (e, k)).collect();

    let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        for v in [a, b, c] {
            vertex_faces[v].push(f);
        }
    }

    // Vertex links: walk fans through the directed-edge map. A manifold
    // vertex is consumed by a single walk covering all its faces.
    let mut interior = vec![false; n_vertices];
    for v in 0..n_vertices {
        let fan = walk_fan(v, &vertex_faces[v], faces, &directed).ok_or(ComplexError::NonManifoldVertex { vertex: v })?;
        interior[v] = fan.is_disk;
    }

    // Connectivity over vertices through edges.
    let mut seen = vec![false; n_vertices];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for &(i, j) in &edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(ComplexError::Disconnected);
    }

    // Boundary structure: directed edges whose reverse has no face run ccw
    // around the patch; a disk has exactly one such loop and Euler number 1.
    let mut boundary_next: HashMap<usize, usize> = HashMap::new();
    for (&(s, t), _) in directed.iter() {
        if !directed.contains_key(&(t, s)) {
            boundary_next.insert(s, t);
        }
    }
    let euler = n_vertices as i64 - edges.len() as i64 + faces.len() as i64;
    let mut boundary_loop = Vec::new();
    let mut boundary_loops = 0usize;
    if !boundary_next.is_empty() {
        let start = *boundary_next.keys().min().unwrap();
        let mut at = start;
        loop {
            boundary_loop.push(at);
            at = boundary_next[&at];
            if at == start {
                break;
            }
        }
        boundary_loops = 1;
        if boundary_loop.len() != boundary_next.len() {
            boundary_loops = 2; // at least; exact count not needed to reject
        }
    }
    if euler != 1 || boundary_loops != 1 {
        return Err(ComplexError::NotADisk { euler, boundary_loops });
    }

    Ok(Triangulation {
        n: n_vertices,
        faces: faces.to_vec(),
        edges,
        edge_index,
        edge_faces,
        vertex_faces,
        interior,
        boundary_next,
        boundary_loop,
        directed,
    })
}

/// Walks the fan of faces around `v`. Returns the ring if the link is a
/// single cycle (interior) or single path (boundary); `None` otherwise.
fn walk_fan(
    v: usize,
    incident: &[usize],
    faces: &[[usize; 3]],
    directed: &HashMap<(usize, usize), (usize, usize)>,
) -> Option<OneRing> {
    if incident.is_empty() {
        return None;
    }
    // In ccw face (v, a, b) the sector runs from spoke a to spoke b; the ccw
    // successor face shares directed edge (v, b).
    let outgoing = |f: usize| -> (usize, usize) {
        let [x, y, z] = faces[f];
        if x == v {
            (y, z)
        } else if y == v {
            (z, x)
        } else {
            (x, y)
        }
    };
    // Start spoke: a spoke (v, a) whose predecessor face (containing (a, v))
    // is absent — a boundary start. If none, the fan is closed; start at the
    // lowest-indexed incident face for determinism.
    let mut start_face = None;
    for &f in incident {
        let (a, _) = outgoing(f);
        if !directed.contains_key(&(a, v)) {
            start_face = Some(f);
            break;
        }
    }
    let closed = start_face.is_none();
    let f0 = start_face.unwrap_or_else(|| *incident.iter().min().unwrap());

    let (a0, b0) = outgoing(f0);
    let mut neighbors = vec![a0, b0];
    let mut ring_faces = vec![f0];
    let mut r = b0;
    loop {
        match directed.get(&(v, r)) {
            Some(&(f, third)) => {
                if closed && third == a0 && ring_faces.len() + 1 == incident.len() {
                    ring_faces.push(f);
                    break;
                }
                if ring_faces.len() >= incident.len() {
                    return None; // looped without consuming the fan: pinched
                }
                ring_faces.push(f);
                neighbors.push(third);
                r = third;
            }
            None => break,
        }
    }
    if ring_faces.len() != incident.len() {
        return None; // split fan: a second component exists
    }
    // cycle: m faces and m distinct spokes; path: m faces, m+1 spokes
    let expected = if closed { ring_faces.len() } else { ring_faces.len() + 1 };
    if neighbors.len() != expected {
        return None;
    }
    let mut uniq = neighbors.clone();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != neighbors.len() {
        return None;
    }
    Some(OneRing { center: v, neighbors, faces: ring_faces, is_disk: closed })
}

impl Triangulation {
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Edges as sorted vertex pairs in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_index.get(&(i.min(j), i.max(j))).copied()
    }

    /// (face, opposite vertex) pairs bordering edge `e`: two for an interior
    /// edge, one for a boundary edge.
    pub fn edge_faces(&self, e: usize) -> &[(usize, usize)] {
        &self.edge_faces[e]
    }

    pub fn is_interior_edge(&self, e: usize) -> bool {
        self.edge_faces[e].len() == 2
    }

    pub fn is_interior_vertex(&self, v: usize) -> bool {
        self.interior[v]
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.interior[v]).collect()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| !self.interior[v]).collect()
    }

    /// The boundary cycle, counterclockwise, starting at its least vertex.
    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    /// Successor along the ccw boundary loop, if `v` is a boundary vertex.
    pub fn boundary_successor(&self, v: usize) -> Option<usize> {
        self.boundary_next.get(&v).copied()
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.one_ring(v).neighbors.len()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.one_ring(v).neighbors
    }

    /// Ordered 1-ring around `v` (ccw). Always succeeds on a built
    /// triangulation; manifoldness was established at construction.
    pub fn one_ring(&self, v: usize) -> OneRing {
        walk_fan(v, &self.vertex_faces[v], &self.faces, &self.directed)
            .expect("validated triangulation has manifold links")
    }

    /// Splits `members` into interior (all neighbors inside, 1-ring disk)
    /// and boundary parts. Duplicates are dropped.
    pub fn classify_subset(&self, members: &[usize]) -> Result<VertexSubset, ComplexError> {
        let mut ms: Vec<usize> = members.to_vec();
        ms.sort_unstable();
        ms.dedup();
        if let Some(&v) = ms.iter().find(|&&v| v >= self.n) {
            return Err(ComplexError::VertexOutOfRange { face: usize::MAX, vertex: v, vertices: self.n });
        }
        let inside = |v: usize| ms.binary_search(&v).is_ok();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for &v in &ms {
            let ring_disk = self.interior[v];
            if ring_disk && self.one_ring(v).neighbors.iter().all(|&w| inside(w)) {
                interior.push(v);
            } else {
                boundary.push(v);
            }
        }
        Ok(VertexSubset { members: ms, interior, boundary })
    }

    /// Subcomplex spanned by the faces whose three corners all lie in `v0`,
    /// densely reindexed. Errors if no face survives or the result is not
    /// itself a disk patch.
    pub fn subcomplex_generated_by(&self, v0: &[usize]) -> Result<SubComplex, ComplexError> {
        let mut ms: Vec<usize> = v0.to_vec();
        ms.sort_unstable();
        ms.dedup();
        let inside = |v: usize| ms.binary_search(&v).is_ok();
        let mut face_map = Vec::new();
        let mut kept = Vec::new();
        for (f, &[a, b, c]) in self.faces.iter().enumerate() {
            if inside(a) && inside(b) && inside(c) {
                face_map.push(f);
                kept.push([a, b, c]);
            }
        }
        if kept.is_empty() {
            return Err(ComplexError::EmptySubcomplex);
        }
        let mut vertex_map = Vec::new();
        let mut new_id: HashMap<usize, usize> = HashMap::new();
        for face in &kept {
            for &v in face {
                new_id.entry(v).or_insert_with(|| {
                    vertex_map.push(v);
                    vertex_map.len() - 1
                });
            }
        }
        let faces: Vec<[usize; 3]> = kept.iter().map(|&[a, b, c]| [new_id[&a], new_id[&b], new_id[&c]]).collect();
        let tri = build_triangulation(vertex_map.len(), &faces)?;
        Ok(SubComplex { tri, vertex_map, face_map })
    }
}

/// A generated mesh: combinatorics plus the reference plane positions.
#[derive(Debug, Clone)]
pub struct GeneratedMesh {
    pub tri: Triangulation,
    pub positions: Vec<[f64; 2]>,
}

/// Hexagonal lattice patch of combinatorial radius `r`: 1 + 3r(r+1)
/// vertices, unit edges, all interior angles π/3.
#[derive(Debug, Clone)]
pub struct HexPatch {
    pub tri: Triangulation,
    pub positions: Vec<[f64; 2]>,
    /// rings[k] = vertices at hex distance k from the center, k = 0..=r.
    pub rings: Vec<Vec<usize>>,
    pub center: usize,
}

/// Builds the hexagonal patch of radius `r ≥ 1` centered at the origin.
pub fn gen_hex_patch(r: u32) -> Result<HexPatch, ComplexError> {
    if r == 0 {
        return Err(ComplexError::InvalidParameter("hex patch radius must be ≥ 1".into()));
    }
    let r = r as i64;
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut rings: Vec<Vec<usize>> = vec![Vec::new(); (r + 1) as usize];
    for row in -r..=r {
        for q in (-r).max(-row - r)..=r.min(-row + r) {
            let id = positions.len();
            index.insert((q, row), id);
            positions.push([q as f64 + row as f64 / 2.0, row as f64 * 3f64.sqrt() / 2.0]);
            let dist = q.abs().max(row.abs()).max((q + row).abs()) as usize;
            rings[dist].push(id);
        }
    }
    let mut faces = Vec::new();
    // anchor cells run one step past the hexagon: a triangle belongs to the
    // patch whenever all three corners exist, even if its anchor does not
    for row in -r - 1..=r {
        for q in -r - 1..=r + 1 {
            // up-triangle (q,row) (q+1,row) (q,row+1); down-triangle shares
            // the diagonal; both ccw in the reference embedding.
            if let (Some(&a), Some(&b), Some(&c)) =
                (index.get(&(q, row)), index.get(&(q + 1, row)), index.get(&(q, row + 1)))
            {
                faces.push([a, b, c]);
            }
            if let (Some(&a), Some(&b), Some(&c)) =
                (index.get(&(q + 1, row)), index.get(&(q + 1, row + 1)), index.get(&(q, row + 1)))
            {
                faces.push([a, b, c]);
            }
        }
    }
    let tri = build_triangulation(positions.len(), &faces)?;
    let center = index[&(0, 0)];
    Ok(HexPatch { tri, positions, rings, center })
}

/// Samples `n` points uniformly in the unit disk from a SplitMix64 stream
/// and returns their Delaunay triangulation. Deterministic in `(n, seed)`.
/// Degenerate samples (all collinear, coincident points) are resampled from
/// a split stream, up to 10 attempts.
pub fn gen_random_delaunay_disk(n: usize, seed: u64) -> Result<GeneratedMesh, ComplexError> {
    gen_disk_mesh(n, seed, 10)
}

/// Like [`gen_random_delaunay_disk`], but built for quality: resamples until
/// every corner angle is at least `min_angle` (up to 64 attempts). Plain
/// uniform sampling almost always contains sliver triangles whose huge
/// cotangent derivatives drown any fixed finite-difference or containment
/// tolerance, so experiment harnesses draw their instances from this gated
/// variant — mirroring the standing ε-nondegeneracy hypothesis of the
/// estimates being tested.
///
/// Construction: a jittered ring of points on the unit circle plus
/// min-spacing random fill inside. Since any three ring points are concyclic
/// on the sampling circle itself, no face can have all corners on the ring
/// once a single interior point exists — which removes the near-collinear
/// hull slivers that dominate plain uniform samples.
pub fn gen_random_delaunay_disk_nondegenerate(
    n: usize,
    seed: u64,
    min_angle: f64,
) -> Result<GeneratedMesh, ComplexError> {
    if !(min_angle > 0.0 && min_angle <= std::f64::consts::PI / 3.0) {
        return Err(ComplexError::InvalidParameter(format!(
            "angle floor must lie in (0, π/3], got {min_angle}"
        )));
    }
    if n < 3 {
        return Err(ComplexError::InvalidParameter(format!("need at least 3 points, got {n}")));
    }
    let spacing = 0.9 / (n as f64).sqrt();
    let rim = ((std::f64::consts::PI / spacing).round() as usize).clamp(3, (2 * n / 3).max(3)).min(n);
    let step = 2.0 * std::f64::consts::PI / rim as f64;
    let mut stream = SplitMix64::new(seed);
    for _attempt in 0..64 {
        let mut rng = stream.split();
        let rot = rng.range(0.0, step);
        let mut pts: Vec<[f64; 2]> = (0..rim)
            .map(|j| {
                let th = rot + (j as f64 + rng.range(-0.3, 0.3)) * step;
                [th.cos(), th.sin()]
            })
            .collect();
        let mut throws = 0usize;
        while pts.len() < n && throws < 400 * n {
            throws += 1;
            let x = rng.range(-1.0, 1.0);
            let y = rng.range(-1.0, 1.0);
            if x * x + y * y >= 1.0 {
                continue;
            }
            if pts.iter().all(|p| (p[0] - x).powi(2) + (p[1] - y).powi(2) >= spacing * spacing) {
                pts.push([x, y]);
            }
        }
        if pts.len() < n {
            continue;
        }
        if let Ok(faces) = delaunay::triangulate(&pts) {
            if faces.iter().all(|f| min_corner_angle(&pts, f) >= min_angle) {
                let tri = build_triangulation(n, &faces)?;
                return Ok(GeneratedMesh { tri, positions: pts });
            }
        }
    }
    Err(ComplexError::DegenerateInput("64 consecutive rejected samples".into()))
}

fn gen_disk_mesh(n: usize, seed: u64, attempts: usize) -> Result<GeneratedMesh, ComplexError> {
    if n < 3 {
        return Err(ComplexError::InvalidParameter(format!("need at least 3 points, got {n}")));
    }
    let mut stream = SplitMix64::new(seed);
    for _attempt in 0..attempts {
        let mut rng = stream.split();
        let mut pts = Vec::with_capacity(n);
        while pts.len() < n {
            let x = rng.range(-1.0, 1.0);
            let y = rng.range(-1.0, 1.0);
            if x * x + y * y < 1.0 {
                pts.push([x, y]);
            }
        }
        match delaunay::triangulate(&pts) {
            Ok(faces) => {
                let tri = build_triangulation(n, &faces)?;
                return Ok(GeneratedMesh { tri, positions: pts });
            }
            Err(delaunay::DelaunayError::AllCollinear | delaunay::DelaunayError::DuplicatePoint { .. }) => continue,
        }
    }
    Err(ComplexError::DegenerateInput(format!("{attempts} consecutive degenerate samples")))
}

fn min_corner_angle(pts: &[[f64; 2]], face: &[usize; 3]) -> f64 {
    let mut min = f64::INFINITY;
    for c in 0..3 {
        let p = pts[face[c]];
        let a = pts[face[(c + 1) % 3]];
        let b = pts[face[(c + 2) % 3]];
        let u = [a[0] - p[0], a[1] - p[1]];
        let v = [b[0] - p[0], b[1] - p[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        min = min.min(cross.abs().atan2(dot));
    }
    min
}
