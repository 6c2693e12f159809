//! Planar primitives: points, simple polygons, signed areas, signed distance.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::textio::{self, DataLines};

/// Points closer than this to a polygon edge are reported on the boundary.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub(crate) fn coord(self) -> robust::Coord<f64> {
        robust::Coord {
            x: self.x,
            y: self.y,
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// `((b - a) x (c - a)) / 2`; positive iff `a, b, c` run counterclockwise.
pub fn triangle_signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Exact orientation sign of `a, b, c` (adaptive-precision predicate).
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(a.coord(), b.coord(), c.coord())
}

/// Shoelace area of a closed vertex loop; positive for counterclockwise order.
pub fn polygon_signed_area(vertices: &[Point]) -> f64 {
    let k = vertices.len();
    if k < 3 {
        return 0.0;
    }
    let origin = vertices[0];
    let mut twice = 0.0;
    for i in 0..k {
        let a = vertices[i] - origin;
        let b = vertices[(i + 1) % k] - origin;
        twice += a.cross(b);
    }
    0.5 * twice
}

/// Distance from `q` to the closed segment `[a, b]`, plus the closest point.
pub fn segment_distance(q: Point, a: Point, b: Point) -> (f64, Point) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        ((q - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = a + ab * t;
    (q.dist(c), c)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test with exact orientation predicates.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// A simple, positively oriented polygon. The closing edge from the last
/// vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates and normalizes to counterclockwise orientation.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        let k = vertices.len();
        if k < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {k}"
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon(format!("non-finite vertex {p}")));
        }
        for i in 0..k {
            if vertices[i] == vertices[(i + 1) % k] {
                return Err(Error::InvalidPolygon(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % k
                )));
            }
        }
        check_simple(&vertices)?;
        let area = polygon_signed_area(&vertices);
        if area == 0.0 {
            return Err(Error::InvalidPolygon("zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let k = self.vertices.len();
        (0..k).map(move |i| (self.vertices[i], self.vertices[(i + 1) % k]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.dist(hi)
    }

    /// Even/odd crossing test with a half-open edge convention; boundary
    /// points are not classified specially here.
    pub fn crossing_inside(&self, q: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > q.y) != (b.y > q.y) {
                let x = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if q.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Closest boundary point and its distance.
    pub fn closest_boundary_point(&self, q: Point) -> (f64, Point) {
        let mut best = (f64::INFINITY, q);
        for (a, b) in self.edges() {
            let cand = segment_distance(q, a, b);
            if cand.0 < best.0 {
                best = cand;
            }
        }
        best
    }

    /// Distance to the boundary, negative strictly inside and zero within
    /// [`BOUNDARY_EPS`] of an edge.
    pub fn signed_distance(&self, q: Point) -> f64 {
        let (d, _) = self.closest_boundary_point(q);
        if d <= BOUNDARY_EPS {
            0.0
        } else if self.crossing_inside(q) {
            -d
        } else {
            d
        }
    }

    /// Uniform scaling and translation into `[0, 1]^2`, touching both ends
    /// of the unit interval along the longer bounding-box axis.
    pub fn scale_to_unit(&self) -> Result<Polygon> {
        let (lo, hi) = self.bounding_box();
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        if !(extent > 0.0) {
            return Err(Error::DegenerateInput(
                "polygon bounding box has zero width and height".into(),
            ));
        }
        let inv = 1.0 / extent;
        let vertices = self
            .vertices
            .iter()
            .map(|&p| (p - lo) * inv)
            .collect::<Vec<_>>();
        Polygon::new(vertices)
    }

    /// Parses the plain-text polygon format: a vertex count followed by one
    /// `x y` line per vertex.
    pub fn parse(text: &str) -> Result<Polygon> {
        let mut lines = DataLines::new(text);
        let (line, fields) = lines.next_fields("vertex count")?;
        textio::expect_len(&fields, 1, line)?;
        let k: usize = textio::field(&fields, 0, line, "vertex count")?;
        let mut vertices = Vec::new();
        for _ in 0..k {
            let (line, fields) = lines.next_fields("vertex")?;
            textio::expect_len(&fields, 2, line)?;
            let x = textio::finite_field(&fields, 0, line, "x")?;
            let y = textio::finite_field(&fields, 1, line, "y")?;
            vertices.push(Point::new(x, y));
        }
        lines.expect_end()?;
        Polygon::new(vertices)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.vertices.len());
        for p in &self.vertices {
            out.push_str(&format!("{} {}\n", textio::fmt_f64(p.x), textio::fmt_f64(p.y)));
        }
        out
    }
}

pub fn bounding_box(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// O(k^2) pairwise edge test.
fn check_simple(v: &[Point]) -> Result<()> {
    let k = v.len();
    for i in 0..k {
        let (a, b) = (v[i], v[(i + 1) % k]);
        for j in (i + 1)..k {
            let (c, d) = (v[j], v[(j + 1) % k]);
            let adjacent = j == i + 1 || (i == 0 && j == k - 1);
            if adjacent {
                // Shared vertex is expected; a collinear fold-back is not.
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient(p, shared, q) == 0.0 && (p - shared).dot(q - shared) > 0.0 {
                    return Err(Error::InvalidPolygon(format!(
                        "edges {i} and {j} overlap"
                    )));
                }
                if k == 3 {
                    continue;
                }
            } else if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidPolygon(format!(
                    "edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn triangle_area_examples() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(triangle_signed_area(o, Point::new(1.0, 0.0), Point::new(0.0, 1.0)), 0.5);
        assert_eq!(triangle_signed_area(o, Point::new(0.0, 1.0), Point::new(1.0, 0.0)), -0.5);
        assert_eq!(triangle_signed_area(o, Point::new(1.0, 1.0), Point::new(2.0, 2.0)), 0.0);
    }

    #[test]
    fn polygon_area_examples() {
        let ccw = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert_eq!(polygon_signed_area(&ccw), 1.0);
        let mut cw = ccw;
        cw.reverse();
        assert_eq!(polygon_signed_area(&cw), -1.0);
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert_eq!(polygon_signed_area(&tri), 0.5);
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(p.signed_area(), 1.0);
    }

    #[test]
    fn rejects_bad_polygons() {
        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(matches!(Polygon::new(bowtie), Err(Error::InvalidPolygon(_))));
        let dup = vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(Polygon::new(dup).is_err());
        let two = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(Polygon::new(two).is_err());
        let flat = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(Polygon::new(flat).is_err());
        let spike = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
        ];
        assert!(Polygon::new(spike).is_err());
    }

    #[test]
    fn signed_distance_examples() {
        let sq = unit_square();
        assert_eq!(sq.signed_distance(Point::new(0.5, 0.5)), -0.5);
        assert_eq!(sq.signed_distance(Point::new(2.0, 0.5)), 1.0);
        assert_eq!(sq.signed_distance(Point::new(1.0, 0.5)), 0.0);
        assert_eq!(sq.signed_distance(Point::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn scale_examples() {
        let sq = Polygon::new(vec![
            Point::new(2.0, 2.0),
            Point::new(4.0, 2.0),
            Point::new(4.0, 4.0),
            Point::new(2.0, 4.0),
        ])
        .unwrap();
        assert_eq!(sq.scale_to_unit().unwrap(), unit_square());

        let rect = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let (lo, hi) = rect.scale_to_unit().unwrap().bounding_box();
        assert_eq!((lo, hi), (Point::new(0.0, 0.0), Point::new(1.0, 0.5)));

        assert_eq!(unit_square().scale_to_unit().unwrap(), unit_square());
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let text = "3\n0 0\n1 0\n0 1\n";
        let p = Polygon::parse(text).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(Polygon::parse(&p.to_text()).unwrap(), p);
        assert!(matches!(Polygon::parse("3\n0 0\n1 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(Polygon::parse("3\n0 0\n1 0\n0 x\n"), Err(Error::Parse { line: 4, .. })));
        assert!(Polygon::parse("3\n0 0\n1 0\n0 1\n5 5\n").is_err());
        assert!(Polygon::parse("2\n0 0\n1 nan\n").is_err());
        assert!(Polygon::parse("").is_err());
    }

    fn pt() -> impl Strategy<Value = Point> {
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #[test]
        fn triangle_area_antisymmetric(a in pt(), b in pt(), c in pt()) {
            let s = triangle_signed_area(a, b, c);
            let tol = 1e-12 * (1.0 + s.abs()) * 100.0;
            prop_assert!((triangle_signed_area(b, a, c) + s).abs() <= tol);
            prop_assert!((triangle_signed_area(a, c, b) + s).abs() <= tol);
            prop_assert!((triangle_signed_area(c, b, a) + s).abs() <= tol);
        }

        #[test]
        fn fan_triangulation_matches_shoelace(
            k in 3usize..12, r in 0.5..3.0f64, cx in -5.0..5.0f64, start in 0usize..12
        ) {
            // regular k-gon: convex, so any fan works
            let v: Vec<Point> = (0..k)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / k as f64;
                    Point::new(cx + r * t.cos(), r * t.sin())
                })
                .collect();
            let s = start % k;
            let fan: f64 = (1..k - 1)
                .map(|i| triangle_signed_area(v[s], v[(s + i) % k], v[(s + i + 1) % k]))
                .sum();
            prop_assert!((fan - polygon_signed_area(&v)).abs() < 1e-12);
        }

        #[test]
        fn distance_sign_agrees_with_crossing(q in pt()) {
            let poly = Polygon::new(vec![
                Point::new(-4.0, -4.0), Point::new(4.0, -4.0), Point::new(4.0, 4.0),
                Point::new(1.0, 4.0), Point::new(1.0, -1.0), Point::new(-1.0, -1.0),
                Point::new(-1.0, 4.0), Point::new(-4.0, 4.0),
            ]).unwrap();
            let d = poly.signed_distance(q);
            if d != 0.0 {
                prop_assert_eq!(d < 0.0, poly.crossing_inside(q));
            }
        }

        #[test]
        fn scale_is_idempotent(
            sx in 0.1..50.0f64, sy in 0.1..50.0f64, tx in -100.0..100.0f64, ty in -100.0..100.0f64
        ) {
            let base = [(0.0, 0.0), (1.0, 0.2), (1.3, 1.0), (0.5, 0.6), (-0.2, 1.1)];
            let p = Polygon::new(base.iter().map(|&(x, y)| Point::new(tx + sx * x, ty + sy * y)).collect()).unwrap();
            let once = p.scale_to_unit().unwrap();
            let twice = once.scale_to_unit().unwrap();
            for (a, b) in once.vertices().iter().zip(twice.vertices()) {
                prop_assert!(a.dist(*b) <= 1e-12);
            }
        }
    }
}
