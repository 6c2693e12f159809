//! Force-balance mesh generation: bars between nodes repel when shorter than
//! their rest length, boundary nodes stay put.

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

use super::{delaunay, triangle_quality, TriMesh};

/// Triangles below this quality are reported as slivers.
pub const SLIVER_QUALITY: f64 = 0.02;

/// Centroids with signed distance above this are outside the region.
const CENTROID_TOLERANCE: f64 = -1e-12;

/// Lattice points closer than this fraction of `h0` to the boundary are
/// dropped from the initial node set.
const LATTICE_MARGIN: f64 = 0.5;

/// Depth, as a fraction of `h0`, at which escaped nodes are put back.
const REENTRY_DEPTH: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct DistMeshParams {
    pub h0: f64,
    /// Rest length is `fscale * h0`.
    pub fscale: f64,
    pub dt: f64,
    /// Retriangulate once some node moved this many `h0` since the last one.
    pub retriangulation_threshold: f64,
    /// Stop once the largest step is below this many `h0`.
    pub move_tol: f64,
    pub max_iters: usize,
}

impl DistMeshParams {
    pub fn new(h0: f64) -> Self {
        Self {
            h0,
            fscale: 1.2,
            dt: 0.2,
            retriangulation_threshold: 0.1,
            move_tol: 0.001,
            max_iters: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.h0,
            self.fscale,
            self.dt,
            self.retriangulation_threshold,
            self.move_tol,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(format!(
                "mesh parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DistMeshOutcome {
    pub mesh: TriMesh,
    pub iterations: usize,
    pub converged: bool,
    pub retriangulations: usize,
    /// Triangles with quality below [`SLIVER_QUALITY`].
    pub slivers: Vec<usize>,
    /// Triangles failing the empty-circumcircle test against a neighbor.
    pub delaunay_violations: usize,
}

impl DistMeshOutcome {
    /// Human-readable quality warnings; empty when there is nothing to say.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.converged {
            w.push(format!(
                "mesh did not reach equilibrium in {} iterations",
                self.iterations
            ));
        }
        if !self.slivers.is_empty() {
            w.push(format!(
                "{} sliver triangles with quality below {SLIVER_QUALITY}",
                self.slivers.len()
            ));
        }
        if self.delaunay_violations > 0 {
            w.push(format!(
                "{} triangles violate the Delaunay condition",
                self.delaunay_violations
            ));
        }
        w
    }
}

/// Polygon boundary resampled with `ceil(len / h0)` segments per edge.
fn boundary_nodes(poly: &Polygon, h0: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for (a, b) in poly.edges() {
        let segs = ((a.dist(b) / h0).ceil() as usize).max(1);
        for k in 0..segs {
            out.push(a + (b - a) * (k as f64 / segs as f64));
        }
    }
    out
}

/// Equilateral lattice of pitch `h0` clipped to the interior with a margin.
fn lattice_nodes(poly: &Polygon, h0: f64) -> Vec<Point> {
    let (lo, hi) = poly.bounding_box();
    let dy = h0 * 3f64.sqrt() / 2.0;
    let rows = ((hi.y - lo.y) / dy).floor() as usize;
    let cols = ((hi.x - lo.x) / h0).floor() as usize + 1;
    let mut out = Vec::new();
    for r in 0..=rows {
        let y = lo.y + r as f64 * dy;
        let shift = if r % 2 == 1 { 0.5 * h0 } else { 0.0 };
        for c in 0..=cols {
            let p = Point::new(lo.x + shift + c as f64 * h0, y);
            if poly.signed_distance(p) < -LATTICE_MARGIN * h0 {
                out.push(p);
            }
        }
    }
    out
}

/// Delaunay triangles of `nodes` whose centroid lies inside the polygon.
fn interior_triangles(poly: &Polygon, nodes: &[Point]) -> Result<Vec<[usize; 3]>> {
    let all = delaunay(nodes)?;
    Ok(all
        .triangles()
        .iter()
        .copied()
        .filter(|t| {
            let c = Point::new(
                (nodes[t[0]].x + nodes[t[1]].x + nodes[t[2]].x) / 3.0,
                (nodes[t[0]].y + nodes[t[1]].y + nodes[t[2]].y) / 3.0,
            );
            poly.signed_distance(c) <= CENTROID_TOLERANCE
        })
        .collect())
}

fn bars(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

/// Meshes `poly`. Interior nodes start at `seeds` when given, otherwise on
/// a lattice of pitch `h0`. Boundary nodes never move.
pub fn distmesh_generate(
    poly: &Polygon,
    params: &DistMeshParams,
    seeds: Option<&[Point]>,
) -> Result<DistMeshOutcome> {
    params.validate()?;
    let h0 = params.h0;
    let fixed = boundary_nodes(poly, h0);
    let nf = fixed.len();
    let interior = match seeds {
        Some(s) => {
            if let Some(p) = s.iter().find(|p| !(poly.signed_distance(**p) < 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "seed point ({}, {}) is not strictly inside the region",
                    p.x, p.y
                )));
            }
            s.to_vec()
        }
        None => lattice_nodes(poly, h0),
    };
    if interior.is_empty() {
        return Err(Error::Meshing(format!(
            "no interior nodes; h0 = {h0} is too large for the region"
        )));
    }
    let mut nodes = fixed;
    nodes.extend(interior);

    let rest = params.fscale * h0;
    let mut last_tri = nodes.clone();
    let mut tris = interior_triangles(poly, &nodes)?;
    let mut edges = bars(&tris);
    let mut retriangulations = 1;
    let mut force = vec![Point::default(); nodes.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        let drift = nodes
            .iter()
            .zip(&last_tri)
            .map(|(p, q)| p.dist(*q))
            .fold(0.0, f64::max);
        if drift > params.retriangulation_threshold * h0 {
            tris = interior_triangles(poly, &nodes)?;
            edges = bars(&tris);
            last_tri.copy_from_slice(&nodes);
            retriangulations += 1;
        }
        iterations += 1;

        force.iter_mut().for_each(|f| *f = Point::default());
        for &(a, b) in &edges {
            let d = nodes[a] - nodes[b];
            let len = d.norm();
            let f = (rest - len).max(0.0);
            if f > 0.0 && len > 0.0 {
                let v = d * (f / len);
                force[a] = force[a] + v;
                force[b] = force[b] - v;
            }
        }
        let mut largest = 0.0f64;
        for k in nf..nodes.len() {
            let old = nodes[k];
            let mut p = old + force[k] * params.dt;
            if poly.signed_distance(p) > 0.0 {
                let (_, c) = poly.closest_boundary_point(p);
                let back = c - p;
                let len = back.norm();
                p = if len > 0.0 { c + back * (REENTRY_DEPTH * h0 / len) } else { old };
                if !(poly.signed_distance(p) < 0.0) {
                    p = old;
                }
            }
            largest = largest.max(p.dist(old));
            nodes[k] = p;
        }
        if largest < params.move_tol * h0 {
            converged = true;
            break;
        }
    }

    let tris = interior_triangles(poly, &nodes)?;
    let (mesh, _) = compact(nodes, tris, nf)?;
    let slivers = (0..mesh.element_count())
        .filter(|&t| {
            let [a, b, c] = mesh.triangle_points(t);
            triangle_quality(a, b, c) < SLIVER_QUALITY
        })
        .collect();
    let delaunay_violations = mesh.local_delaunay_violations();
    Ok(DistMeshOutcome {
        mesh,
        iterations,
        converged,
        retriangulations,
        slivers,
        delaunay_violations,
    })
}

/// Drops nodes no triangle uses and renumbers. The first `nf` nodes are the
/// boundary nodes.
fn compact(nodes: Vec<Point>, tris: Vec<[usize; 3]>, nf: usize) -> Result<(TriMesh, usize)> {
    let mut used = vec![false; nodes.len()];
    for t in &tris {
        for &v in t {
            used[v] = true;
        }
    }
    let mut map = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::new();
    let mut flags = Vec::new();
    for (k, p) in nodes.into_iter().enumerate() {
        if used[k] {
            map[k] = kept.len();
            kept.push(p);
            flags.push(k < nf);
        }
    }
    let dropped = map.iter().filter(|m| **m == usize::MAX).count();
    let tris = tris.into_iter().map(|t| t.map(|v| map[v])).collect();
    if flags.iter().all(|b| *b) {
        return Err(Error::Meshing("mesh has no interior node".into()));
    }
    Ok((TriMesh::new(kept, tris, flags)?, dropped))
}
