//! Linear triangular elements for `-div(K grad u) = f` with Dirichlet data.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{triangle_signed_area, Point};
use crate::problems::{tensor_eval, Problem};
use crate::sparse::SparseSystem;
use crate::triangulation::TriMesh;

pub use crate::sparse::{conjugate_gradient_solve, sparse_direct_solve};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrix {
    pub k_local: [[f64; 3]; 3],
    pub f_local: [f64; 3],
}

/// Constant gradients of the three hat functions of a counterclockwise
/// triangle.
pub fn pyramid_gradient(tri: [Point; 3]) -> Result<[Point; 3]> {
    let [a, b, c] = tri;
    let area = triangle_signed_area(a, b, c);
    if !(area > 0.0) {
        return Err(Error::DegenerateTriangle(area));
    }
    let d = 2.0 * area;
    let grad = |p: Point, q: Point| Point::new((p.y - q.y) / d, (q.x - p.x) / d);
    Ok([grad(b, c), grad(c, a), grad(a, b)])
}

/// One-point (centroid) quadrature for both stiffness and load.
pub fn element_stiffness(tri: [Point; 3], prob: &dyn Problem) -> Result<ElementMatrix> {
    let g = pyramid_gradient(tri)?;
    let [a, b, c] = tri;
    let area = triangle_signed_area(a, b, c);
    let centroid = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
    let k = tensor_eval(prob, centroid)?;
    let mut k_local = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = area * g[j].dot(k.apply(g[i]));
            k_local[i][j] = v;
            k_local[j][i] = v;
        }
    }
    let f = area * prob.source(centroid) / 3.0;
    if !f.is_finite() {
        return Err(Error::NonFinite(format!("source at ({}, {})", centroid.x, centroid.y)));
    }
    Ok(ElementMatrix {
        k_local,
        f_local: [f; 3],
    })
}

/// Stiffness system over the interior nodes in increasing node order;
/// boundary values are eliminated into the right-hand side.
pub fn assemble_fem_system(mesh: &TriMesh, prob: &dyn Problem) -> Result<SparseSystem> {
    let nu = mesh.interior_count();
    if nu == 0 {
        return Err(Error::DegenerateInput("mesh has no interior node".into()));
    }
    let mut unknown = vec![usize::MAX; mesh.node_count()];
    for (k, v) in mesh.interior_nodes().into_iter().enumerate() {
        unknown[v] = k;
    }
    let locals: Vec<ElementMatrix> = (0..mesh.element_count())
        .into_par_iter()
        .map(|t| element_stiffness(mesh.triangle_points(t), prob))
        .collect::<Result<_>>()?;
    let g: Vec<f64> = mesh
        .nodes()
        .iter()
        .zip(mesh.boundary_flags())
        .map(|(p, b)| if *b { prob.dirichlet(*p) } else { 0.0 })
        .collect();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nu];
    let mut rhs = vec![0.0; nu];
    for (tri, el) in mesh.triangles().iter().zip(&locals) {
        for i in 0..3 {
            let r = unknown[tri[i]];
            if r == usize::MAX {
                continue;
            }
            rhs[r] += el.f_local[i];
            for j in 0..3 {
                let c = unknown[tri[j]];
                if c == usize::MAX {
                    rhs[r] -= el.k_local[i][j] * g[tri[j]];
                } else {
                    rows[r].push((c, el.k_local[i][j]));
                }
            }
        }
    }
    SparseSystem::from_rows(rows, rhs)
}

/// Nodal values of the full mesh: interior entries from `x`, boundary
/// entries from the Dirichlet data.
pub fn nodal_values(mesh: &TriMesh, prob: &dyn Problem, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != mesh.interior_count() {
        return Err(Error::LengthMismatch(mesh.interior_count(), x.len()));
    }
    let mut it = x.iter();
    Ok(mesh
        .nodes()
        .iter()
        .zip(mesh.boundary_flags())
        .map(|(p, b)| if *b { prob.dirichlet(*p) } else { *it.next().expect("one value per interior node") })
        .collect())
}
