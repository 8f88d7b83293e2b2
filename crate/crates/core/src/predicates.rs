//! Exact-sign geometric predicates (adaptive-precision, via `robust`).
//!
//! Every combinatorial decision taken from coordinates — point location,
//! cavity membership during Delaunay insertion, point-in-polygon — goes
//! through these, so cocircular and collinear inputs produce exact zeros
//! instead of noise-sign flips.

use robust::Coord;

fn c(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Sign of twice the signed area of (a, b, c): > 0 counterclockwise,
/// < 0 clockwise, exactly 0 collinear.
pub fn orient2d(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    robust::orient2d(c(a), c(b), c(p))
}

/// > 0 iff `p` lies strictly inside the circumcircle of the
/// counterclockwise triangle (a, b, c); exactly 0 iff concyclic.
pub fn incircle(a: [f64; 2], b: [f64; 2], c3: [f64; 2], p: [f64; 2]) -> f64 {
    robust::incircle(c(a), c(b), c(c3), c(p))
}

/// Winding-number point-in-polygon with exact on-boundary detection.
/// Returns `Inside`, `Outside`, or `OnBoundary` for a simple closed
/// polygon given as its vertex cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    OnBoundary,
    Outside,
}

pub fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> Containment {
    let n = poly.len();
    let mut winding = 0i64;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let side = orient2d(a, b, p);
        if side == 0.0 {
            // On the supporting line: on the segment iff between endpoints.
            let within = |lo: f64, hi: f64, x: f64| (lo.min(hi)..=lo.max(hi)).contains(&x);
            if within(a[0], b[0], p[0]) && within(a[1], b[1], p[1]) {
                return Containment::OnBoundary;
            }
        }
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            winding -= 1;
        }
    }
    if winding != 0 {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_signs() {
        assert!(orient2d([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]) > 0.0);
        assert!(orient2d([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]) < 0.0);
        assert_eq!(orient2d([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]), 0.0);
    }

    #[test]
    fn incircle_square_is_exactly_cocircular() {
        let (a, b, c3, d) = ([0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]);
        assert_eq!(incircle(a, b, c3, d), 0.0);
        assert!(incircle(a, b, c3, [0.5, 0.5]) > 0.0);
        assert!(incircle(a, b, c3, [2.0, 2.0]) < 0.0);
    }

    #[test]
    fn incircle_resolves_tiny_perturbations() {
        // 2^-52-scale displacement must flip the exact sign, not vanish.
        let eps = f64::EPSILON;
        let (a, b, c3) = ([0.0, 0.0], [1.0, 0.0], [1.0, 1.0]);
        assert!(incircle(a, b, c3, [0.0, 1.0 - eps]) > 0.0);
        assert!(incircle(a, b, c3, [0.0, 1.0 + eps]) < 0.0);
    }

    #[test]
    fn polygon_containment() {
        let sq = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert_eq!(point_in_polygon(&sq, [1.0, 1.0]), Containment::Inside);
        assert_eq!(point_in_polygon(&sq, [3.0, 1.0]), Containment::Outside);
        assert_eq!(point_in_polygon(&sq, [2.0, 1.0]), Containment::OnBoundary);
        assert_eq!(point_in_polygon(&sq, [0.0, 0.0]), Containment::OnBoundary);
        // Nonconvex: a C-shape where the bounding box is misleading.
        let cshape = [
            [0.0, 0.0],
            [3.0, 0.0],
            [3.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [3.0, 2.0],
            [3.0, 3.0],
            [0.0, 3.0],
        ];
        assert_eq!(point_in_polygon(&cshape, [2.0, 1.5]), Containment::Outside);
        assert_eq!(point_in_polygon(&cshape, [0.5, 1.5]), Containment::Inside);
    }
}
