//! Unstructured triangle meshes: Delaunay triangulation and a force-balance
//! mesh generator.

mod delaunay;
mod distmesh;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{orient, triangle_signed_area, Point};
use crate::grid::StructuredGrid;
use crate::textio::{expect_len, field, finite_field, fmt_f64, DataLines};

pub use delaunay::delaunay;
pub use distmesh::{distmesh_generate, DistMeshOutcome, DistMeshParams, SLIVER_QUALITY};

/// Counterclockwise triangles over a node list; boundary nodes are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

impl TriMesh {
    pub fn new(nodes: Vec<Point>, triangles: Vec<[usize; 3]>, boundary: Vec<bool>) -> Result<Self> {
        if boundary.len() != nodes.len() {
            return Err(Error::LengthMismatch(nodes.len(), boundary.len()));
        }
        if let Some(k) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("mesh node {k}")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nodes.len()) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} references a node outside 0..{}",
                    nodes.len()
                )));
            }
            let [a, b, c] = tri.map(|v| nodes[v]);
            if !(orient(a, b, c) > 0.0) {
                return Err(Error::DegenerateTriangle(triangle_signed_area(a, b, c)));
            }
        }
        Ok(Self {
            nodes,
            triangles,
            boundary,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn interior_count(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Interior node indices in increasing order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| !self.boundary[v]).collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        triangle_signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Undirected edges `(lo, hi)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn quality(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        triangle_quality(a, b, c)
    }

    /// Triangles whose circumcircle strictly contains the opposite vertex of
    /// a neighbor across a shared edge.
    pub fn local_delaunay_violations(&self) -> usize {
        let mut opposite: Vec<((usize, usize), usize, usize)> = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                opposite.push(((a.min(b), a.max(b)), t, tri[k]));
            }
        }
        opposite.sort_unstable();
        let mut bad = vec![false; self.triangles.len()];
        for w in opposite.windows(2) {
            let (e0, t0, v0) = w[0];
            let (e1, t1, v1) = w[1];
            if e0 != e1 {
                continue;
            }
            let [a, b, c] = self.triangle_points(t0);
            if robust::incircle(a.coord(), b.coord(), c.coord(), self.nodes[v1].coord()) > 0.0 {
                bad[t0] = true;
            }
            let [a, b, c] = self.triangle_points(t1);
            if robust::incircle(a.coord(), b.coord(), c.coord(), self.nodes[v0].coord()) > 0.0 {
                bad[t1] = true;
            }
        }
        bad.iter().filter(|b| **b).count()
    }

    /// Reads `nv nt`, `nv` lines `x y b`, `nt` lines of 1-based indices.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = DataLines::new(text);
        let (line, f) = lines.next_fields("header \"nv nt\"")?;
        expect_len(&f, 2, line)?;
        let nv: usize = field(&f, 0, line, "node count")?;
        let nt: usize = field(&f, 1, line, "triangle count")?;
        let mut nodes = Vec::with_capacity(nv.min(1 << 20));
        let mut boundary = Vec::with_capacity(nv.min(1 << 20));
        for _ in 0..nv {
            let (line, f) = lines.next_fields("node line \"x y b\"")?;
            expect_len(&f, 3, line)?;
            nodes.push(Point::new(
                finite_field(&f, 0, line, "x")?,
                finite_field(&f, 1, line, "y")?,
            ));
            boundary.push(match field::<u8>(&f, 2, line, "boundary flag")? {
                0 => false,
                1 => true,
                _ => return Err(Error::parse(line, "boundary flag must be 0 or 1")),
            });
        }
        let mut triangles = Vec::with_capacity(nt.min(1 << 20));
        for _ in 0..nt {
            let (line, f) = lines.next_fields("triangle line \"i1 i2 i3\"")?;
            expect_len(&f, 3, line)?;
            let mut tri = [0usize; 3];
            for (k, v) in tri.iter_mut().enumerate() {
                let idx: usize = field(&f, k, line, "node index")?;
                if idx == 0 || idx > nv {
                    return Err(Error::parse(line, format!("node index {idx} outside 1..={nv}")));
                }
                *v = idx - 1;
            }
            triangles.push(tri);
        }
        lines.expect_end()?;
        TriMesh::new(nodes, triangles, boundary)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.nodes.len(), self.triangles.len());
        for (p, b) in self.nodes.iter().zip(&self.boundary) {
            let _ = writeln!(out, "{} {} {}", fmt_f64(p.x), fmt_f64(p.y), u8::from(*b));
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }
}

/// `2 r_in / r_circ`: 1 for equilateral triangles, 0 for degenerate ones.
pub fn triangle_quality(a: Point, b: Point, c: Point) -> f64 {
    let (la, lb, lc) = (b.dist(c), c.dist(a), a.dist(b));
    let denom = la * lb * lc;
    if denom == 0.0 {
        return 0.0;
    }
    ((lb + lc - la) * (lc + la - lb) * (la + lb - lc) / denom).max(0.0)
}

/// Half of the mean length of all cell diagonals.
pub fn half_average_diagonal(g: &StructuredGrid) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..g.m() - 1 {
        for i in 0..g.n() - 1 {
            let [a, b, c, d] = g.cell_corners(i, j);
            sum += a.dist(c) + b.dist(d);
            count += 2;
        }
    }
    0.5 * sum / count as f64
}
