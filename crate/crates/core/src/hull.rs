//! Monotone-chain convex hull with the interior-pruning preprocessing step
//! the synthetic generator uses before rasterizing random polygons.

use crate::error::{Error, Result};

/// A point in real 2-D coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Cross product of `(a - o) x (b - o)`: positive for a counter-clockwise
/// turn at `o`.
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// A convex polygon in counter-clockwise vertex order, starting at the
/// lexicographically least vertex, with no three consecutive collinear
/// vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True when `p` lies inside or on the boundary (within `eps` of it).
    pub fn contains(&self, p: Point, eps: f64) -> bool {
        self.vertices.iter().enumerate().all(|(i, &a)| {
            let b = self.vertices[(i + 1) % self.vertices.len()];
            cross(a, b, p) >= -eps
        })
    }
}

fn lex_cmp(a: &Point, b: &Point) -> std::cmp::Ordering {
    a.x.partial_cmp(&b.x)
        .expect("finite coordinates")
        .then(a.y.partial_cmp(&b.y).expect("finite coordinates"))
}

/// Andrew's monotone chain. Collinear boundary points are excluded, so the
/// result is strictly convex. Fails when fewer than three non-collinear
/// points remain.
pub fn monotone_chain(points: &[Point]) -> Result<Polygon> {
    let mut pts = points.to_vec();
    pts.sort_by(lex_cmp);
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "convex hull needs at least 3 distinct points, got {}",
            pts.len()
        )));
    }

    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);

    if lower.len() < 3 {
        return Err(Error::DegenerateInput(
            "points are collinear: hull has no area".into(),
        ));
    }
    Ok(Polygon { vertices: lower })
}

/// Drop points strictly inside the quadrilateral spanned by the four axis
/// extremes (min-x, min-y, max-x, max-y). Pruning never changes the hull:
/// anything strictly inside that quadrilateral is interior to it.
pub fn interior_prune(points: &[Point]) -> Vec<Point> {
    if points.len() < 4 {
        return points.to_vec();
    }
    // Tie-breaking keeps the tour convex and the quadrilateral as large as
    // possible: min-x prefers low y, min-y prefers high x, max-x prefers
    // high y, max-y prefers low x (the rotational order of the corners).
    let extreme = |primary: fn(&Point) -> f64, secondary: fn(&Point) -> f64| -> Point {
        *points
            .iter()
            .min_by(|a, b| {
                primary(a)
                    .partial_cmp(&primary(b))
                    .expect("finite coordinates")
                    .then(
                        secondary(a)
                            .partial_cmp(&secondary(b))
                            .expect("finite coordinates"),
                    )
            })
            .expect("nonempty")
    };
    let min_x = extreme(|p| p.x, |p| p.y);
    let min_y = extreme(|p| p.y, |p| -p.x);
    let max_x = extreme(|p| -p.x, |p| -p.y);
    let max_y = extreme(|p| -p.y, |p| p.x);

    // counter-clockwise tour of the extremes: left, bottom, right, top
    let mut quad = vec![min_x, min_y, max_x, max_y];
    quad.dedup();
    if quad.len() > 1 && quad[0] == quad[quad.len() - 1] {
        quad.pop();
    }
    if quad.len() < 3 {
        return points.to_vec();
    }

    points
        .iter()
        .copied()
        .filter(|&p| {
            let strictly_inside = quad.iter().enumerate().all(|(i, &a)| {
                let b = quad[(i + 1) % quad.len()];
                cross(a, b, p) > 0.0
            });
            !strictly_inside
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point> {
        coords.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    /// O(n^3) hull oracle: `(a, b)` is a hull edge when every other point
    /// lies strictly left of the directed line a->b (collinear points are
    /// tolerated only between the endpoints, which excludes them from the
    /// vertex set). The hull vertices are the endpoints of hull edges.
    fn brute_force_hull(points: &[Point]) -> Vec<Point> {
        let mut verts: Vec<Point> = Vec::new();
        for (i, &a) in points.iter().enumerate() {
            for (j, &b) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let is_edge = points.iter().enumerate().all(|(k, &q)| {
                    if k == i || k == j {
                        return true;
                    }
                    let c = cross(a, b, q);
                    let between = c == 0.0
                        && q.x >= a.x.min(b.x)
                        && q.x <= a.x.max(b.x)
                        && q.y >= a.y.min(b.y)
                        && q.y <= a.y.max(b.y);
                    c > 0.0 || between
                });
                if is_edge {
                    verts.push(a);
                    verts.push(b);
                }
            }
        }
        verts.sort_by(lex_cmp);
        verts.dedup();
        verts
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
        (0..n)
            .map(|_| Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)))
            .collect()
    }

    #[test]
    fn square_with_center_point() {
        let points = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]);
        let hull = monotone_chain(&points).unwrap();
        assert_eq!(
            hull.vertices(),
            pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).as_slice()
        );
    }

    #[test]
    fn triangle_is_its_own_hull_ccw() {
        let points = pts(&[(2.0, 0.0), (0.0, 0.0), (1.0, 2.0)]);
        let hull = monotone_chain(&points).unwrap();
        assert_eq!(hull.len(), 3);
        assert_eq!(hull.vertices()[0], Point::new(0.0, 0.0));
        for i in 0..3 {
            let a = hull.vertices()[i];
            let b = hull.vertices()[(i + 1) % 3];
            let c = hull.vertices()[(i + 2) % 3];
            assert!(cross(a, b, c) > 0.0, "hull not counter-clockwise");
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(monotone_chain(&pts(&[(0.0, 0.0), (1.0, 1.0)])).is_err());
        assert!(monotone_chain(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])).is_err());
        assert!(monotone_chain(&pts(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)])).is_err());
    }

    #[test]
    fn collinear_boundary_points_are_excluded() {
        let points = pts(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (0.0, 2.0),
        ]);
        let hull = monotone_chain(&points).unwrap();
        assert!(!hull.vertices().contains(&Point::new(1.0, 0.0)));
        assert_eq!(hull.len(), 4);
    }

    #[test]
    fn hull_matches_brute_force_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..60 {
            let n = rng.random_range(3..60);
            let points = random_points(&mut rng, n);
            let hull = monotone_chain(&points).unwrap();
            let mut got: Vec<Point> = hull.vertices().to_vec();
            got.sort_by(lex_cmp);
            let want = brute_force_hull(&points);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn hull_is_idempotent_and_contains_all_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let points = random_points(&mut rng, 30);
            let hull = monotone_chain(&points).unwrap();
            let again = monotone_chain(hull.vertices()).unwrap();
            assert_eq!(hull, again);
            for &p in &points {
                assert!(hull.contains(p, 1e-9));
            }
        }
    }

    #[test]
    fn prune_keeps_circle_points() {
        let n = 24;
        let points: Vec<Point> = (0..n)
            .map(|k| {
                let t = k as f64 / n as f64 * std::f64::consts::TAU;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let kept = interior_prune(&points);
        assert_eq!(kept.len(), points.len());
    }

    #[test]
    fn prune_removes_strict_interior_point() {
        let points = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (2.0, 1.9)]);
        let kept = interior_prune(&points);
        assert_eq!(kept.len(), 4);
        assert!(!kept.contains(&Point::new(2.0, 1.9)));
    }

    #[test]
    fn prune_preserves_hull_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..200 {
            let n = rng.random_range(4..100);
            let points = random_points(&mut rng, n);
            let direct = monotone_chain(&points).unwrap();
            let pruned = interior_prune(&points);
            let via_prune = monotone_chain(&pruned).unwrap();
            assert_eq!(direct, via_prune);
        }
    }
}
