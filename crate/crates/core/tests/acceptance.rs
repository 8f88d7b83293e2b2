//! Release gate: every blocking numerical property at its published
//! tolerance. One test per property, each printing a single PASS/FAIL line
//! (visible under `--nocapture`); the assertion message repeats the line.
//!
//! Budgets: the finite-difference sweep gets 60 s, every other gate 25 s,
//! keeping the whole run under five minutes even on one core.

use std::f64::consts::{FRAC_PI_6, PI, TAU};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use dcg_core::complex::{
    build_triangulation, gen_hex_patch, gen_random_delaunay_disk_nondegenerate, Triangulation,
};
use dcg_core::flow::{self, BoundaryProfile, FlowOptions};
use dcg_core::harmonic::{self, WeightedGraph};
use dcg_core::hyperbolic::{induced_hyp_embedding, DiskEmbedding, HypRingCheck};
use dcg_core::metric::{self, ConformalFactor, PlMetric};
use dcg_core::network;
use dcg_core::rng::SplitMix64;
use dcg_core::suites::{run_suite, SuiteOptions, SuiteReport};

fn verdict(name: &str, pass: bool, detail: &str, t0: Instant, budget_s: f64) {
    let dt = t0.elapsed().as_secs_f64();
    let ok = pass && dt <= budget_s;
    let line = format!("{} {name}: {detail} ({dt:.1} s)", if ok { "PASS" } else { "FAIL" });
    println!("{line}");
    assert!(pass, "{line}");
    assert!(dt <= budget_s, "{line} — over the {budget_s} s budget");
}

fn suite(name: &str, instances: usize) -> SuiteReport {
    let opts = SuiteOptions {
        instances: Some(instances),
        seed: 7,
        artifact_dir: None,
        stable_output: true,
    };
    run_suite(name, &opts).expect("known suite")
}

fn min_margin(rep: &SuiteReport) -> f64 {
    rep.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
}

fn failures(rep: &SuiteReport) -> String {
    rep.checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {}", c.id, c.detail))
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn curvature_jacobian_matches_central_differences() {
    let t0 = Instant::now();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for seed in 1..=100u64 {
        let mesh = gen_random_delaunay_disk_nondegenerate(50, seed, 0.18).expect("generator");
        let tri = &mesh.tri;
        let l = PlMetric::from_positions(tri, &mesh.positions).unwrap();
        let mut rng = SplitMix64::for_instance(seed, 0);
        let base: Vec<f64> = (0..50).map(|_| rng.range(-0.2, 0.2)).collect();
        // shrink until the changed metric keeps an angle floor; truncation of
        // the central difference grows like 1/θ⁵ near a collapsing corner
        let mut scale = 1.0f64;
        let u = loop {
            let u: Vec<f64> = base.iter().map(|x| x * scale).collect();
            let gated = ConformalFactor::new(tri, u.clone())
                .and_then(|cf| metric::conformal_change(tri, &l, &cf))
                .and_then(|ch| metric::validate_nondegeneracy(tri, &ch, 0.15))
                .map(|rep| rep.ok)
                .unwrap_or(false);
            if gated {
                break u;
            }
            scale *= 0.5;
            assert!(scale > 1e-12, "no usable factor scale for seed {seed}");
        };
        let cf = ConformalFactor::new(tri, u.clone()).unwrap();
        let jac = metric::curvature_jacobian(tri, &l, &cf).unwrap();
        for j in 0..tri.n_vertices() {
            let mut up = u.clone();
            let mut un = u.clone();
            up[j] += h;
            un[j] -= h;
            let kp = metric::curvature(
                tri,
                &metric::conformal_change(tri, &l, &ConformalFactor::new(tri, up).unwrap()).unwrap(),
            );
            let kn = metric::curvature(
                tri,
                &metric::conformal_change(tri, &l, &ConformalFactor::new(tri, un).unwrap()).unwrap(),
            );
            for (r, &v) in jac.rows.iter().enumerate() {
                let fd = (kp.at(v) - kn.at(v)) / (2.0 * h);
                worst = worst.max((jac.matrix[(r, j)] - fd).abs());
            }
        }
    }
    verdict(
        "curvature differential vs central differences",
        worst <= 1e-6,
        &format!("max |J − FD| = {worst:.3e} over 100 meshes (n=50, step 1e-5)"),
        t0,
        60.0,
    );
}

#[test]
fn euclidean_maximum_principle_on_conformal_pairs() {
    let t0 = Instant::now();
    let rep = suite("max-principle", 200);
    verdict(
        "euclidean maximum principle on developed conformal pairs",
        rep.ok(),
        &format!("0 violations in {} one-ring pairs, min margin {:.3e}{}", rep.instances, min_margin(&rep), failures(&rep)),
        t0,
        25.0,
    );
}

#[test]
fn hyperbolic_conversion_satisfies_the_sinh_relation() {
    let t0 = Instant::now();
    let rep = suite("hyperbolic", 100);
    verdict(
        "euclidean-to-hyperbolic factor conversion",
        rep.ok(),
        &format!("sinh residual within 1e-9 on {} fans, min margin {:.3e}{}", rep.instances, min_margin(&rep), failures(&rep)),
        t0,
        25.0,
    );
}

#[test]
fn induced_hyperbolic_turns_wind_once() {
    let t0 = Instant::now();
    let eps = FRAC_PI_6;
    let mut rng = SplitMix64::new(401);
    let mut worst_sum = 0.0f64;
    for k in 0..100 {
        let (tri, pos) = feasible_fan(&mut rng, eps);
        let phi = DiskEmbedding::from_positions(&pos).expect("in-disk fan");
        let ring = tri.one_ring(0);
        match induced_hyp_embedding(&ring, &phi, eps).expect("hypotheses hold by construction") {
            HypRingCheck::Feasible { turns } => {
                for &t in &turns {
                    assert!(t > 0.0 && t < PI, "fan {k}: turn {t} outside (0, π)");
                }
                worst_sum = worst_sum.max((turns.iter().sum::<f64>() - TAU).abs());
            }
            HypRingCheck::ConditionViolated { spokes } => {
                panic!("fan {k} violates the spoke condition at {spokes:?}")
            }
        }
    }
    verdict(
        "hyperbolic turns of feasible one-rings",
        worst_sum <= 1e-8,
        &format!("each turn in (0, π); max |Σ − 2π| = {worst_sum:.3e} over 100 fans"),
        t0,
        25.0,
    );
}

/// Random in-disk fan satisfying the spoke-budget condition
/// `l ≤ (1 − |z₀|²) sin ε` with all corner angles comfortably above ε.
fn feasible_fan(rng: &mut SplitMix64, eps: f64) -> (Triangulation, Vec<[f64; 2]>) {
    let rho = rng.range(0.0, 0.45);
    let arg = rng.range(0.0, TAU);
    let z0 = [rho * arg.cos(), rho * arg.sin()];
    let budget = (1.0 - rho * rho) * eps.sin();
    let d = 6 + rng.below(2) as usize;
    let raw: Vec<f64> = (0..d).map(|_| rng.range(0.85, 1.15)).collect();
    let total: f64 = raw.iter().sum();
    let mut pos = vec![z0];
    let mut theta = rng.range(0.0, TAU);
    for g in &raw {
        theta += g / total * TAU;
        let r = rng.range(0.6, 0.95) * budget;
        pos.push([z0[0] + r * theta.cos(), z0[1] + r * theta.sin()]);
    }
    let faces: Vec<[usize; 3]> = (0..d).map(|k| [0, 1 + k, 1 + (k + 1) % d]).collect();
    (build_triangulation(d + 1, &faces).expect("fan is a disk"), pos)
}

#[test]
fn dirichlet_solver_encloses_and_matches_dense_elimination() {
    let t0 = Instant::now();
    let mut worst_res = 0.0f64;
    let mut worst_osc = 0.0f64; // enclosure violation
    let mut worst_dense = 0.0f64;
    let mut largest = 0usize;
    let mut rng = SplitMix64::new(505);
    let mut cases: Vec<(Triangulation, PlMetric)> = Vec::new();
    for seed in [1u64, 2, 3, 4, 5] {
        let m = gen_random_delaunay_disk_nondegenerate(60, seed, 0.15).unwrap();
        let l = PlMetric::from_positions(&m.tri, &m.positions).unwrap();
        cases.push((m.tri, l));
    }
    for r in [4u32, 12, 26] {
        // radius 26 gives 1951 interior unknowns, just under the 2000 cap
        let hp = gen_hex_patch(r).unwrap();
        let l = PlMetric::uniform(&hp.tri, 1.0).unwrap();
        cases.push((hp.tri, l));
    }
    for (tri, l) in &cases {
        let w = metric::cot_weights(tri, l);
        let g = WeightedGraph::from_mesh(tri, &w).expect("Delaunay weights");
        let n = tri.n_vertices();
        let interior = tri.interior_vertices();
        largest = largest.max(interior.len());
        let mut values = vec![0.0; n];
        for v in tri.boundary_vertices() {
            values[v] = rng.range(-1.0, 1.0);
        }
        let (bmin, bmax) = tri
            .boundary_vertices()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(values[v]), hi.max(values[v]))
            });
        let u = harmonic::dirichlet_solve(&g, &interior, &values).expect("solvable");
        let mut is_interior = vec![false; n];
        for &v in &interior {
            is_interior[v] = true;
        }
        let mut residual = vec![0.0; n];
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let flow = g.weights()[e] * (u[b] - u[a]);
            residual[a] += flow;
            residual[b] -= flow;
        }
        for &v in &interior {
            worst_res = worst_res.max(residual[v].abs());
            worst_osc = worst_osc.max((u[v] - bmax).max(bmin - u[v]).max(0.0));
        }
        // independent dense elimination on the interior block
        let idx: Vec<Option<usize>> = {
            let mut idx = vec![None; n];
            for (k, &v) in interior.iter().enumerate() {
                idx[v] = Some(k);
            }
            idx
        };
        let m = interior.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for (e, &(p, q)) in g.edges().iter().enumerate() {
            let mu = g.weights()[e];
            match (idx[p], idx[q]) {
                (Some(i), Some(j)) => {
                    a[(i, i)] += mu;
                    a[(j, j)] += mu;
                    a[(i, j)] -= mu;
                    a[(j, i)] -= mu;
                }
                (Some(i), None) => {
                    a[(i, i)] += mu;
                    rhs[i] += mu * values[q];
                }
                (None, Some(j)) => {
                    a[(j, j)] += mu;
                    rhs[j] += mu * values[p];
                }
                (None, None) => {}
            }
        }
        let dense = a.lu().solve(&rhs).expect("interior block is SPD");
        for (k, &v) in interior.iter().enumerate() {
            worst_dense = worst_dense.max((dense[k] - u[v]).abs());
        }
    }
    let pass = worst_res <= 1e-10 && worst_osc <= 1e-12 && worst_dense <= 1e-10;
    verdict(
        "dirichlet solve: residual, enclosure, dense oracle",
        pass,
        &format!(
            "max residual {worst_res:.3e}, enclosure excess {worst_osc:.3e}, dense mismatch {worst_dense:.3e} up to {largest} unknowns"
        ),
        t0,
        25.0,
    );
}

#[test]
fn conformal_flow_stays_flat_at_fourth_order() {
    let t0 = Instant::now();
    let mut worst_k = 0.0f64;
    let mut worst_vel = 0.0f64;
    let mut ratios = Vec::new();
    for r in [2u32, 3, 4] {
        let hp = gen_hex_patch(r).unwrap();
        let tri = &hp.tri;
        let l = PlMetric::uniform(tri, 1.0).unwrap();
        let mut bv = vec![0.0; tri.n_vertices()];
        for (k, &v) in tri.boundary_loop().iter().enumerate() {
            bv[v] = if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        let traj = flow::conformal_flow(tri, &l, &bv, 0.05, 0.25).expect("flow completes");
        let interior = tri.interior_vertices();
        for s in &traj.states {
            worst_k = worst_k.max(s.flatness_residual);
            for &v in &interior {
                worst_vel = worst_vel.max(s.velocity[v].abs() - 1.0);
            }
        }
        // integrator order, measured without the flatness projection
        let endpoint = |steps: usize| {
            let opts = FlowOptions { steps: Some(steps), project: false };
            flow::conformal_flow_with_options(tri, &l, &bv, 0.05, 0.25, opts)
                .expect("flow completes")
                .endpoint()
                .u
                .values()
                .to_vec()
        };
        let (u1, u2, u4) = (endpoint(5), endpoint(10), endpoint(20));
        let sup = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max)
        };
        ratios.push(sup(&u1, &u2) / sup(&u2, &u4));
    }
    let order_ok = ratios.iter().all(|r| (12.0..=20.0).contains(r));
    let pass = worst_k <= 1e-8 && worst_vel <= 1e-10 && order_ok;
    verdict(
        "conformal flow flatness and integrator order",
        pass,
        &format!(
            "max interior |K| {worst_k:.3e}, velocity excess {worst_vel:.3e}, halving ratios {:?}",
            ratios.iter().map(|r| (r * 10.0).round() / 10.0).collect::<Vec<_>>()
        ),
        t0,
        25.0,
    );
}

#[test]
fn conductance_resistance_duality_and_he_bound() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(707);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (w, h) = (3 + rng.below(4) as usize, 3 + rng.below(4) as usize);
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
        let g = WeightedGraph::new(w * h, &edges).unwrap();
        let v1: Vec<usize> = (0..h).map(|y| y * w).collect();
        let v2: Vec<usize> = (0..h).map(|y| y * w + w - 1).collect();
        let c = network::edge_conductance(&g, &v1, &v2).unwrap();
        let r = harmonic::effective_resistance(&g, &v1, &v2).unwrap().resistance;
        worst = worst.max((c * r - 1.0).abs());
    }
    let rep = suite("vel", 50);
    let pass = worst <= 1e-6 && rep.ok();
    verdict(
        "conductance–resistance duality and the VEL upper bound",
        pass,
        &format!(
            "max |C·R − 1| = {worst:.3e} on 50 grids; VEL ≤ 2C·Res with nonnegative slack on {} instances{}",
            rep.instances,
            failures(&rep)
        ),
        t0,
        25.0,
    );
}

#[test]
fn vertex_extremal_length_identities() {
    let t0 = Instant::now();
    // three-vertex path: one constraint η₀+η₁+η₂ ≥ 1, so the optimum is the
    // uniform metric with Ση² = 1/3 exactly
    let g = WeightedGraph::new(3, &[((0, 1), 1.0), ((1, 2), 1.0)]).unwrap();
    let sol = network::vertex_modulus(&g, &[0], &[2]).unwrap();
    let path_err = (sol.objective - 1.0 / 3.0).abs();

    let hp = gen_hex_patch(6).unwrap();
    let skel = network::skeleton_graph(&hp.tri);
    let sets: Vec<Vec<usize>> = [0usize, 2, 4, 6].iter().map(|&k| hp.rings[k].clone()).collect();
    let add = network::vel_additivity_check(&skel, &sets).unwrap();

    let hp9 = gen_hex_patch(9).unwrap();
    let phi = dcg_core::layout::PlanarEmbedding::from_positions(&hp9.tri, &hp9.positions).unwrap();
    let rows = network::parabolicity_growth(&hp9.tri, &phi, hp9.center, 3).unwrap();
    let monotone = rows.windows(2).all(|w| w[1].vel >= w[0].vel)
        && rows.iter().all(|r| r.vel >= r.cumulative - 1e-12);

    let pass = path_err <= 1e-8 && add.slack >= -1e-6 && monotone;
    verdict(
        "vertex extremal length: exact path value, additivity, growth",
        pass,
        &format!(
            "|Mod(path₃) − 1/3| = {path_err:.3e}; ring-chain slack {:.3e}; growth table {}",
            add.slack,
            rows.iter().map(|r| format!("{:.4}", r.vel)).collect::<Vec<_>>().join(" ≤ ")
        ),
        t0,
        25.0,
    );
}

#[test]
fn distortion_bound_holds_on_conformal_pairs() {
    let t0 = Instant::now();
    let rep = suite("schwarz", 50);
    let negatives = rep.checks.iter().filter(|c| c.margin < 0.0).count();
    verdict(
        "distortion lower bound on flat conformal pairs",
        rep.ok() && negatives == 0,
        &format!("{negatives} negative margins over {} pairs, min margin {:.4}{}", rep.instances, min_margin(&rep), failures(&rep)),
        t0,
        25.0,
    );
}

#[test]
fn boundary_influence_decays_with_patch_radius() {
    let t0 = Instant::now();
    let radii = [2u32, 4, 8];
    let constant = flow::rigidity_experiment(&radii, &BoundaryProfile::Constant(0.1)).unwrap();
    let zero = flow::rigidity_experiment(&radii, &BoundaryProfile::Zero).unwrap();
    let flat_osc = constant
        .rows
        .iter()
        .chain(&zero.rows)
        .map(|r| r.oscillation)
        .fold(0.0f64, f64::max);
    let dipole = flow::rigidity_experiment(&radii, &BoundaryProfile::Dipole(0.1)).unwrap();
    let oscs: Vec<f64> = dipole.rows.iter().map(|r| r.oscillation).collect();
    let decreasing = oscs.windows(2).all(|w| w[1] < w[0]);
    let pass = flat_osc <= 1e-10 && decreasing;
    verdict(
        "boundary influence on a fixed window decays in the patch radius",
        pass,
        &format!(
            "constant-profile oscillation ≤ {flat_osc:.3e}; dipole oscillation {} over radii {radii:?}",
            oscs.iter().map(|o| format!("{o:.5}")).collect::<Vec<_>>().join(" > ")
        ),
        t0,
        25.0,
    );
}
