//! Incremental Bowyer–Watson with a single vertex at infinity.
//!
//! Each convex hull edge `a -> b` (interior on the left) is paired with a
//! ghost triangle `(b, a, GHOST)`. A ghost triangle conflicts with points
//! strictly outside its hull edge or strictly inside the edge segment.
//! Points are inserted along a Hilbert curve with exact coordinate
//! tie-breaks, so the output does not depend on the input order.

use crate::error::{Error, Result};
use crate::geometry::{orient, Point};

use super::TriMesh;

const GHOST: usize = usize::MAX;
const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Delaunay triangulation of the convex hull of `points`. Hull vertices are
/// flagged as boundary nodes.
pub fn delaunay(points: &[Point]) -> Result<TriMesh> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "delaunay needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(k) = points.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinite(format!("point {k}")));
    }
    check_duplicates(points)?;
    let order = insertion_order(points);
    let mut b = Builder::start(points, &order)?;
    for &v in &order {
        if !b.inserted[v] {
            b.insert(v)?;
        }
    }
    b.finish()
}

fn check_duplicates(points: &[Point]) -> Result<()> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)));
    for (k, &a) in idx.iter().enumerate() {
        for &b in &idx[k + 1..] {
            if points[b].x - points[a].x > DUPLICATE_TOLERANCE {
                break;
            }
            if points[a].dist(points[b]) <= DUPLICATE_TOLERANCE {
                let (lo, hi) = (a.min(b), a.max(b));
                return Err(Error::DegenerateInput(format!(
                    "duplicate points {lo} and {hi} at ({}, {})",
                    points[a].x, points[a].y
                )));
            }
        }
    }
    Ok(())
}

fn hilbert_key(x: u32, y: u32, bits: u32) -> u64 {
    let n = 1u64 << bits;
    let (mut x, mut y) = (x as u64, y as u64);
    let mut d = 0u64;
    let mut s = n >> 1;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

fn insertion_order(points: &[Point]) -> Vec<usize> {
    const BITS: u32 = 16;
    let (lo, hi) = crate::geometry::bounding_box(points);
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
    let max = ((1u32 << BITS) - 1) as f64;
    let keys: Vec<u64> = points
        .iter()
        .map(|p| {
            let qx = ((p.x - lo.x) / span * max).round().clamp(0.0, max) as u32;
            let qy = ((p.y - lo.y) / span * max).round().clamp(0.0, max) as u32;
            hilbert_key(qx, qy, BITS)
        })
        .collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .cmp(&keys[b])
            .then(points[a].x.total_cmp(&points[b].x))
            .then(points[a].y.total_cmp(&points[b].y))
    });
    order
}

struct Builder<'a> {
    pts: &'a [Point],
    tri: Vec<[usize; 3]>,
    nbr: Vec<[usize; 3]>,
    alive: Vec<bool>,
    free: Vec<usize>,
    mark: Vec<u64>,
    stamp: u64,
    last: usize,
    inserted: Vec<bool>,
}

impl<'a> Builder<'a> {
    fn start(pts: &'a [Point], order: &[usize]) -> Result<Self> {
        let (a, b) = (order[0], order[1]);
        let c = order[2..]
            .iter()
            .copied()
            .find(|&c| orient(pts[a], pts[b], pts[c]) != 0.0)
            .ok_or_else(|| Error::DegenerateInput("all points are collinear".into()))?;
        let (a, b) = if orient(pts[a], pts[b], pts[c]) > 0.0 { (a, b) } else { (b, a) };
        let mut s = Self {
            pts,
            tri: Vec::new(),
            nbr: Vec::new(),
            alive: Vec::new(),
            free: Vec::new(),
            mark: Vec::new(),
            stamp: 0,
            last: 0,
            inserted: vec![false; pts.len()],
        };
        let t = [[a, b, c], [b, a, GHOST], [c, b, GHOST], [a, c, GHOST]];
        let ids: Vec<usize> = t.iter().map(|&v| s.alloc(v)).collect();
        s.link(&ids, &[]);
        s.last = ids[0];
        for v in [a, b, c] {
            s.inserted[v] = true;
        }
        Ok(s)
    }

    fn alloc(&mut self, v: [usize; 3]) -> usize {
        if let Some(t) = self.free.pop() {
            self.tri[t] = v;
            self.nbr[t] = [GHOST; 3];
            self.alive[t] = true;
            t
        } else {
            self.tri.push(v);
            self.nbr.push([GHOST; 3]);
            self.alive.push(true);
            self.mark.push(0);
            self.tri.len() - 1
        }
    }

    fn edge(&self, t: usize, k: usize) -> (usize, usize) {
        (self.tri[t][(k + 1) % 3], self.tri[t][(k + 2) % 3])
    }

    /// Links the new triangles `ids` to each other and to the `outer`
    /// triangles across matching directed edges.
    fn link(&mut self, ids: &[usize], outer: &[(usize, usize, usize)]) {
        let mut edges: Vec<((usize, usize), usize, usize)> = Vec::with_capacity(3 * ids.len());
        for &t in ids {
            for k in 0..3 {
                edges.push((self.edge(t, k), t, k));
            }
        }
        for &((u, v), t, k) in &edges {
            if let Some(&(_, s, _)) = edges.iter().find(|e| e.0 == (v, u)) {
                self.nbr[t][k] = s;
            }
        }
        for &(u, v, o) in outer {
            let &(_, t, k) = edges
                .iter()
                .find(|e| e.0 == (u, v))
                .expect("cavity edge has a new triangle");
            self.nbr[t][k] = o;
            let ko = (0..3)
                .find(|&ko| self.edge(o, ko) == (v, u))
                .expect("outer triangle shares the cavity edge");
            self.nbr[o][ko] = t;
        }
    }

    fn is_ghost(&self, t: usize) -> bool {
        self.tri[t].contains(&GHOST)
    }

    fn conflict(&self, t: usize, p: Point) -> bool {
        let [a, b, c] = self.tri[t];
        if a == GHOST || b == GHOST || c == GHOST {
            // ghost (x, y, G) stands for hull edge y -> x
            let (x, y) = match (a == GHOST, b == GHOST) {
                (true, _) => (b, c),
                (_, true) => (c, a),
                _ => (a, b),
            };
            let (px, py) = (self.pts[x], self.pts[y]);
            let o = orient(py, px, p);
            return o < 0.0 || (o == 0.0 && (p - py).dot(px - py) > 0.0 && (p - px).dot(py - px) > 0.0);
        }
        let (pa, pb, pc) = (self.pts[a], self.pts[b], self.pts[c]);
        robust::incircle(pa.coord(), pb.coord(), pc.coord(), p.coord()) > 0.0
    }

    /// A triangle in conflict with `p`: visibility walk from the last new
    /// triangle, with a linear scan if the walk fails.
    fn locate(&self, p: Point) -> Option<usize> {
        let mut t = self.last;
        let limit = 4 * self.tri.len() + 16;
        'walk: for _ in 0..limit {
            if self.is_ghost(t) {
                break;
            }
            for k in 0..3 {
                let (u, v) = self.edge(t, k);
                if orient(self.pts[u], self.pts[v], p) < 0.0 {
                    t = self.nbr[t][k];
                    if self.is_ghost(t) {
                        break 'walk;
                    }
                    continue 'walk;
                }
            }
            break;
        }
        if self.alive[t] && self.conflict(t, p) {
            return Some(t);
        }
        (0..self.tri.len()).find(|&s| self.alive[s] && self.conflict(s, p))
    }

    fn insert(&mut self, v: usize) -> Result<()> {
        let p = self.pts[v];
        let start = self
            .locate(p)
            .ok_or_else(|| Error::DegenerateInput(format!("cannot locate point {v}")))?;
        self.stamp += 1;
        let yes = 2 * self.stamp;
        let no = yes + 1;
        self.mark[start] = yes;
        let mut stack = vec![start];
        let mut cavity = Vec::new();
        let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
        while let Some(t) = stack.pop() {
            cavity.push(t);
            for k in 0..3 {
                let nb = self.nbr[t][k];
                let (a, b) = self.edge(t, k);
                if self.mark[nb] == yes {
                    continue;
                }
                if self.mark[nb] != no && self.conflict(nb, p) {
                    self.mark[nb] = yes;
                    stack.push(nb);
                } else {
                    self.mark[nb] = no;
                    boundary.push((a, b, nb));
                }
            }
        }
        for &t in &cavity {
            self.alive[t] = false;
            self.free.push(t);
        }
        let mut ids = Vec::with_capacity(boundary.len());
        for &(a, b, _) in &boundary {
            let t = self.alloc([a, b, v]);
            if a != GHOST && b != GHOST {
                let o = orient(self.pts[a], self.pts[b], p);
                if !(o > 0.0) {
                    return Err(Error::DegenerateInput(format!(
                        "non-positive triangle while inserting point {v}"
                    )));
                }
                self.last = t;
            }
            ids.push(t);
        }
        self.link(&ids, &boundary);
        self.inserted[v] = true;
        Ok(())
    }

    fn finish(self) -> Result<TriMesh> {
        let mut boundary = vec![false; self.pts.len()];
        let mut out = Vec::new();
        for t in 0..self.tri.len() {
            if !self.alive[t] {
                continue;
            }
            let tri = self.tri[t];
            if tri.contains(&GHOST) {
                for v in tri {
                    if v != GHOST {
                        boundary[v] = true;
                    }
                }
                continue;
            }
            let r = (0..3).min_by_key(|&k| tri[k]).expect("three vertices");
            out.push([tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]]);
        }
        out.sort_unstable();
        TriMesh::new(self.pts.to_vec(), out, boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::triangle_signed_area;
    use proptest::prelude::*;

    /// Brute force: no input point strictly inside any circumcircle, up to a
    /// relative tolerance.
    pub(crate) fn empty_circumcircles(m: &TriMesh) -> bool {
        let pts = m.nodes();
        for t in 0..m.element_count() {
            let [a, b, c] = m.triangle_points(t);
            let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
            let sq = |p: Point| p.x * p.x + p.y * p.y;
            let ux = (sq(a) * (b.y - c.y) + sq(b) * (c.y - a.y) + sq(c) * (a.y - b.y)) / d;
            let uy = (sq(a) * (c.x - b.x) + sq(b) * (a.x - c.x) + sq(c) * (b.x - a.x)) / d;
            let center = Point::new(ux, uy);
            let r = center.dist(a);
            for p in pts {
                if center.dist(*p) < r * (1.0 - 1e-10) {
                    return false;
                }
            }
        }
        true
    }

    fn canonical(m: &TriMesh) -> Vec<[(u64, u64); 3]> {
        let mut out: Vec<[(u64, u64); 3]> = m
            .triangles()
            .iter()
            .map(|t| {
                let mut v = t.map(|k| (m.nodes()[k].x.to_bits(), m.nodes()[k].y.to_bits()));
                v.sort_unstable();
                v
            })
            .collect();
        out.sort_unstable();
        out
    }

    #[test]
    fn unit_square_corners() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let m = delaunay(&pts).unwrap();
        assert_eq!(m.element_count(), 2);
        assert!(empty_circumcircles(&m));
        assert!(m.boundary_flags().iter().all(|b| *b));
    }

    #[test]
    fn three_points_one_triangle() {
        let pts = [Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        let m = delaunay(&pts).unwrap();
        assert_eq!(m.element_count(), 1);
        assert!(m.triangle_area(0) > 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<Point> = (0..5).map(|k| Point::new(k as f64, 2.0 * k as f64)).collect();
        assert!(matches!(delaunay(&line), Err(Error::DegenerateInput(_))));
        let dup = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 5e-13),
        ];
        assert!(matches!(delaunay(&dup), Err(Error::DegenerateInput(_))));
        assert!(delaunay(&dup[..2]).is_err());
    }

    #[test]
    fn collinear_runs_and_lattices() {
        // many collinear points plus one off the line
        let mut pts: Vec<Point> = (0..10).map(|k| Point::new(k as f64, 0.0)).collect();
        pts.push(Point::new(4.5, 1.0));
        let m = delaunay(&pts).unwrap();
        assert_eq!(m.element_count(), 9);
        assert!(empty_circumcircles(&m));

        // cocircular lattice
        let mut pts = Vec::new();
        for j in 0..12 {
            for i in 0..12 {
                pts.push(Point::new(i as f64, j as f64));
            }
        }
        let m = delaunay(&pts).unwrap();
        assert_eq!(m.element_count(), 2 * 11 * 11);
        assert!(empty_circumcircles(&m));
        let total: f64 = (0..m.element_count()).map(|t| m.triangle_area(t)).sum();
        assert!((total - 121.0).abs() < 1e-9);
    }

    #[test]
    fn nearly_collinear_hull_vertex() {
        // the middle point is strictly convex, but the naive area rounds to 0
        let a = Point::new(0.1, 0.7);
        let b = Point::new(0.9, 0.3);
        let c = Point::new(0.4563097552438412, 0.5218451223780793);
        assert_eq!(triangle_signed_area(a, c, b), 0.0);
        assert!(orient(a, c, b) > 0.0);
        let m = delaunay(&[a, b, c, Point::new(0.5, 0.9)]).unwrap();
        assert_eq!(m.element_count(), 2);
        assert_eq!(m.interior_count(), 0);
    }

    #[test]
    fn hilbert_key_is_a_bijection_on_small_grids() {
        let mut keys: Vec<u64> = (0..16).flat_map(|x| (0..16).map(move |y| hilbert_key(x, y, 4))).collect();
        keys.sort_unstable();
        assert_eq!(keys, (0..256).collect::<Vec<u64>>());
    }

    fn lcg_points(seed: u64, n: usize) -> Vec<Point> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n).map(|_| Point::new(next(), next())).collect()
    }

    #[test]
    fn random_sets_are_delaunay_and_order_invariant() {
        for seed in 0..20 {
            let pts = lcg_points(seed, 50);
            let m = delaunay(&pts).unwrap();
            assert!(empty_circumcircles(&m), "seed {seed}");
            let mut rev = pts.clone();
            rev.reverse();
            assert_eq!(canonical(&m), canonical(&delaunay(&rev).unwrap()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn permutation_invariance(seed in 0u64..10_000, n in 3usize..80, shift in 0usize..80) {
            let pts = lcg_points(seed, n);
            let mut rotated = pts.clone();
            rotated.rotate_left(shift % n);
            let a = delaunay(&pts).unwrap();
            let b = delaunay(&rotated).unwrap();
            prop_assert!(empty_circumcircles(&a));
            prop_assert_eq!(canonical(&a), canonical(&b));
            // Euler: t = 2n - 2 - h for a triangulated point set
            let h = a.boundary_flags().iter().filter(|b| **b).count();
            prop_assert_eq!(a.element_count(), 2 * n - 2 - h);
        }
    }
}
