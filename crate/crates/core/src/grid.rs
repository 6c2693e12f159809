//! Logically rectangular grids: boundary distribution, transfinite
//! initialization, corner-triangle decomposition and convexity.
//!
//! Indexing: `i` runs horizontally over `0..n`, `j` vertically over `0..m`,
//! and node storage is j-major (`index = j * n + i`). Cell `(i, j)` has the
//! counterclockwise corners `A = P[i][j]`, `B = P[i+1][j]`, `C = P[i+1][j+1]`,
//! `D = P[i][j+1]`.

use crate::error::{Error, Result};
use crate::geometry::{polygon_signed_area, triangle_signed_area, Point, Polygon};
use crate::textio::{self, DataLines};

/// Positively oriented boundary loop of an `m x n` grid, starting at the
/// bottom-left corner: bottom (n points), right (m), top (n), left (m),
/// with corners shared between sides.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    m: usize,
    n: usize,
    nodes: Vec<Point>,
}

impl BoundarySpec {
    pub fn new(m: usize, n: usize, nodes: Vec<Point>) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid sides need at least 2 points, got m={m}, n={n}"
            )));
        }
        let expected = 2 * (m + n - 2);
        if nodes.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "boundary of a {m}x{n} grid needs {expected} nodes, got {}",
                nodes.len()
            )));
        }
        // validates simplicity; a clockwise loop would come back reversed
        let poly = Polygon::new(nodes.clone())?;
        if poly.vertices() != nodes.as_slice() {
            return Err(Error::InvalidPolygon("grid boundary is clockwise".into()));
        }
        Ok(Self { m, n, nodes })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Positions of the bottom-left, bottom-right, top-right, top-left corners in `nodes`.
    pub fn corner_indices(&self) -> [usize; 4] {
        let (m, n) = (self.m, self.n);
        [0, n - 1, n + m - 2, 2 * n + m - 3]
    }

    pub fn area(&self) -> f64 {
        polygon_signed_area(&self.nodes)
    }

    /// Boundary node that sits at grid position `(i, j)`; `None` for interior positions.
    pub fn at(&self, i: usize, j: usize) -> Option<Point> {
        let (m, n) = (self.m, self.n);
        let k = if j == 0 {
            i
        } else if i == n - 1 {
            n - 1 + j
        } else if j == m - 1 {
            n + m - 2 + (n - 1 - i)
        } else if i == 0 {
            (2 * n + m - 3 + (m - 1 - j)) % self.nodes.len()
        } else {
            return None;
        };
        Some(self.nodes[k])
    }
}

/// Resamples the four corner-to-corner arcs of `poly` by arc length into
/// `n-1`, `m-1`, `n-1`, `m-1` equal segments.
pub fn distribute_boundary(
    poly: &Polygon,
    corners: [usize; 4],
    m: usize,
    n: usize,
) -> Result<BoundarySpec> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid sides need at least 2 points, got m={m}, n={n}"
        )));
    }
    let k = poly.len();
    if let Some(&c) = corners.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidArgument(format!(
            "corner index {c} out of range for {k} vertices"
        )));
    }
    let offset = |c: usize| (c + k - corners[0]) % k;
    let (o1, o2, o3) = (offset(corners[1]), offset(corners[2]), offset(corners[3]));
    if !(0 < o1 && o1 < o2 && o2 < o3) {
        return Err(Error::InvalidArgument(format!(
            "corners {corners:?} are not distinct and in counterclockwise cyclic order"
        )));
    }
    let v = poly.vertices();
    let segments = [n - 1, m - 1, n - 1, m - 1];
    let mut nodes = Vec::with_capacity(2 * (m + n - 2));
    for side in 0..4 {
        let start = corners[side];
        let end = corners[(side + 1) % 4];
        let len = (end + k - start) % k;
        let arc: Vec<Point> = (0..=len).map(|s| v[(start + s) % k]).collect();
        resample_arc(&arc, segments[side], &mut nodes);
    }
    BoundarySpec::new(m, n, nodes)
}

/// Pushes `segs` points of an equal-arc-length sampling of `arc`, starting
/// with its first vertex and excluding its last.
fn resample_arc(arc: &[Point], segs: usize, out: &mut Vec<Point>) {
    let lengths: Vec<f64> = arc.windows(2).map(|w| w[0].dist(w[1])).collect();
    let total: f64 = lengths.iter().sum();
    out.push(arc[0]);
    let mut seg = 0;
    let mut walked = 0.0;
    for s in 1..segs {
        let target = total * s as f64 / segs as f64;
        while seg + 1 < lengths.len() && walked + lengths[seg] < target {
            walked += lengths[seg];
            seg += 1;
        }
        let t = if lengths[seg] > 0.0 {
            ((target - walked) / lengths[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(arc[seg] + (arc[seg + 1] - arc[seg]) * t);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid {
    m: usize,
    n: usize,
    points: Vec<Point>,
}

impl StructuredGrid {
    /// `points` in j-major order (`m` rows of `n` points).
    pub fn from_points(m: usize, n: usize, points: Vec<Point>) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs m, n >= 2, got m={m}, n={n}"
            )));
        }
        if points.len() != m * n {
            return Err(Error::LengthMismatch(points.len(), m * n));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("grid node {p}")));
        }
        Ok(Self { m, n, points })
    }

    /// Vertical point count.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Horizontal point count.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.m);
        j * self.n + i
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        self.points[self.index(i, j)]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub(crate) fn points_mut(&mut self) -> &mut [Point] {
        &mut self.points
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.m - 1
    }

    pub fn cell_count(&self) -> usize {
        (self.m - 1) * (self.n - 1)
    }

    pub fn interior_count(&self) -> usize {
        (self.m - 2) * (self.n - 2)
    }

    /// Interior node positions `(i, j)` in j-major order.
    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.m.saturating_sub(1))
            .flat_map(move |j| (1..self.n.saturating_sub(1)).map(move |i| (i, j)))
    }

    pub fn interior_points(&self) -> Vec<Point> {
        self.interior_nodes().map(|(i, j)| self.point(i, j)).collect()
    }

    /// Counterclockwise corners `[A, B, C, D]` of cell `(i, j)`.
    pub fn cell_corners(&self, i: usize, j: usize) -> [Point; 4] {
        [
            self.point(i, j),
            self.point(i + 1, j),
            self.point(i + 1, j + 1),
            self.point(i, j + 1),
        ]
    }

    pub fn boundary_nodes(&self) -> Vec<Point> {
        let (m, n) = (self.m, self.n);
        let mut out = Vec::with_capacity(2 * (m + n - 2));
        out.extend((0..n).map(|i| self.point(i, 0)));
        out.extend((1..m).map(|j| self.point(n - 1, j)));
        out.extend((0..n - 1).rev().map(|i| self.point(i, m - 1)));
        out.extend((1..m - 1).rev().map(|j| self.point(0, j)));
        out
    }

    pub fn boundary_spec(&self) -> Result<BoundarySpec> {
        BoundarySpec::new(self.m, self.n, self.boundary_nodes())
    }

    /// Reads the grid format: `m n` then `m*n` lines `x y`, j-major.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = DataLines::new(text);
        let (line, fields) = lines.next_fields("grid header \"m n\"")?;
        textio::expect_len(&fields, 2, line)?;
        let m: usize = textio::field(&fields, 0, line, "m")?;
        let n: usize = textio::field(&fields, 1, line, "n")?;
        if m < 2 || n < 2 {
            return Err(Error::parse(line, format!("grid needs m, n >= 2, got {m} {n}")));
        }
        let count = m
            .checked_mul(n)
            .ok_or_else(|| Error::parse(line, "grid size overflows"))?;
        let mut points = Vec::new();
        for _ in 0..count {
            let (line, fields) = lines.next_fields("grid node")?;
            textio::expect_len(&fields, 2, line)?;
            let x = textio::finite_field(&fields, 0, line, "x")?;
            let y = textio::finite_field(&fields, 1, line, "y")?;
            points.push(Point::new(x, y));
        }
        lines.expect_end()?;
        Self::from_points(m, n, points)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(48 * self.points.len() + 16);
        out.push_str(&format!("{} {}\n", self.m, self.n));
        for p in &self.points {
            out.push_str(&textio::fmt_f64(p.x));
            out.push(' ');
            out.push_str(&textio::fmt_f64(p.y));
            out.push('\n');
        }
        out
    }
}

/// Bilinear Coons patch of the four boundary sides, parameterized by node index.
pub fn transfinite_init(b: &BoundarySpec) -> StructuredGrid {
    let (m, n) = (b.m(), b.n());
    let side = |i: usize, j: usize| b.at(i, j).expect("boundary position");
    let p00 = side(0, 0);
    let p10 = side(n - 1, 0);
    let p11 = side(n - 1, m - 1);
    let p01 = side(0, m - 1);
    let mut points = Vec::with_capacity(m * n);
    for j in 0..m {
        let t = j as f64 / (m - 1) as f64;
        for i in 0..n {
            if let Some(p) = b.at(i, j) {
                points.push(p);
                continue;
            }
            let s = i as f64 / (n - 1) as f64;
            let bottom = side(i, 0);
            let top = side(i, m - 1);
            let left = side(0, j);
            let right = side(n - 1, j);
            let x = (1.0 - t) * bottom.x + t * top.x + (1.0 - s) * left.x + s * right.x
                - ((1.0 - s) * (1.0 - t) * p00.x
                    + s * (1.0 - t) * p10.x
                    + s * t * p11.x
                    + (1.0 - s) * t * p01.x);
            let y = (1.0 - t) * bottom.y + t * top.y + (1.0 - s) * left.y + s * right.y
                - ((1.0 - s) * (1.0 - t) * p00.y
                    + s * (1.0 - t) * p10.y
                    + s * t * p11.y
                    + (1.0 - s) * t * p01.y);
            points.push(Point::new(x, y));
        }
    }
    StructuredGrid { m, n, points }
}

/// Four signed corner-triangle areas per cell, cells in j-major order and
/// corners in the order A, B, C, D.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTriangleAreas {
    pub alpha: Vec<f64>,
}

impl CellTriangleAreas {
    pub fn min(&self) -> f64 {
        self.alpha.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn cell(&self, c: usize) -> [f64; 4] {
        let a = &self.alpha[4 * c..4 * c + 4];
        [a[0], a[1], a[2], a[3]]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        0.5 * self.cell(c).iter().sum::<f64>()
    }
}

/// Areas of the triangles `(A,B,D)`, `(B,C,A)`, `(C,D,B)`, `(D,A,C)`.
pub fn corner_triangles(q: [Point; 4]) -> [f64; 4] {
    let [a, b, c, d] = q;
    [
        triangle_signed_area(a, b, d),
        triangle_signed_area(b, c, a),
        triangle_signed_area(c, d, b),
        triangle_signed_area(d, a, c),
    ]
}

pub fn cell_triangle_areas(g: &StructuredGrid) -> CellTriangleAreas {
    let mut alpha = Vec::with_capacity(4 * g.cell_count());
    for j in 0..g.m() - 1 {
        for i in 0..g.n() - 1 {
            alpha.extend_from_slice(&corner_triangles(g.cell_corners(i, j)));
        }
    }
    CellTriangleAreas { alpha }
}

/// True iff every corner-triangle area exceeds `eps`.
pub fn is_convex(g: &StructuredGrid, eps: f64) -> bool {
    cell_triangle_areas(g).alpha.iter().all(|&a| a > eps)
}

/// Scale-relative zero for convexity tests: `1e-12 * area / cells`.
pub fn default_convexity_eps(g: &StructuredGrid) -> f64 {
    let area = polygon_signed_area(&g.boundary_nodes()).abs();
    1e-12 * area / g.cell_count() as f64
}

/// Quarter of the summed areas of the cells touching each node.
pub fn node_areas(g: &StructuredGrid) -> Result<Vec<f64>> {
    let alphas = cell_triangle_areas(g);
    let min_alpha = alphas.min();
    if !(min_alpha > 0.0) {
        return Err(Error::NonConvex { min_alpha });
    }
    let mut areas = vec![0.0; g.m() * g.n()];
    let mut c = 0;
    for j in 0..g.m() - 1 {
        for i in 0..g.n() - 1 {
            let quarter = 0.25 * alphas.cell_area(c);
            for (ii, jj) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                areas[g.index(ii, jj)] += quarter;
            }
            c += 1;
        }
    }
    Ok(areas)
}
