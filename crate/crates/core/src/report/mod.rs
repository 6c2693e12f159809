//! Error norms, convergence orders and the comparison harness.

mod experiment;
mod svg;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{node_areas, StructuredGrid};
use crate::problems::Problem;
use crate::triangulation::TriMesh;

pub use experiment::{run_experiment, write_outputs, ExperimentConfig, Region};
pub use svg::error_chart;

/// `sqrt(Σ (u_i - U_i)² A_i)`.
pub fn quadratic_error(numeric: &[f64], exact: &[f64], areas: &[f64]) -> Result<f64> {
    if numeric.len() != exact.len() {
        return Err(Error::LengthMismatch(numeric.len(), exact.len()));
    }
    if numeric.len() != areas.len() {
        return Err(Error::LengthMismatch(numeric.len(), areas.len()));
    }
    if let Some(a) = areas.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative sample area {a}")));
    }
    let sum: f64 = numeric
        .iter()
        .zip(exact)
        .zip(areas)
        .map(|((u, v), a)| (u - v) * (u - v) * a)
        .sum();
    Ok(sum.sqrt())
}

/// `log(E_i / E_j) / log(n_j / n_i)`.
pub fn empirical_order(e_i: f64, e_j: f64, n_i: usize, n_j: usize) -> Result<f64> {
    if !(e_i > 0.0 && e_j > 0.0) || n_i == 0 || n_j <= n_i {
        return Err(Error::InvalidArgument(format!(
            "empirical order needs positive errors and n_j > n_i > 0, got E = ({e_i}, {e_j}), n = ({n_i}, {n_j})"
        )));
    }
    Ok((e_i / e_j).ln() / (n_j as f64 / n_i as f64).ln())
}

/// Finite-difference error: interior nodes weighted by their node areas.
/// `x` holds interior values in j-major order.
pub fn fd_error(g: &StructuredGrid, prob: &dyn Problem, x: &[f64]) -> Result<f64> {
    if x.len() != g.interior_count() {
        return Err(Error::LengthMismatch(g.interior_count(), x.len()));
    }
    let areas = node_areas(g)?;
    let nodes: Vec<(usize, usize)> = g.interior_nodes().collect();
    let exact: Vec<f64> = nodes.iter().map(|&(i, j)| prob.exact(g.point(i, j))).collect();
    let a: Vec<f64> = nodes.iter().map(|&(i, j)| areas[g.index(i, j)]).collect();
    quadratic_error(x, &exact, &a)
}

/// Finite-element error: the interpolant at element centroids weighted by
/// element areas. `nodal` holds one value per mesh node.
pub fn fem_error(mesh: &TriMesh, prob: &dyn Problem, nodal: &[f64]) -> Result<f64> {
    if nodal.len() != mesh.node_count() {
        return Err(Error::LengthMismatch(mesh.node_count(), nodal.len()));
    }
    let n = mesh.element_count();
    let mut numeric = Vec::with_capacity(n);
    let mut exact = Vec::with_capacity(n);
    let mut areas = Vec::with_capacity(n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        numeric.push((nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0);
        exact.push(prob.exact(mesh.centroid(t)));
        areas.push(mesh.triangle_area(t));
    }
    quadratic_error(&numeric, &exact, &areas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    StructuredFd,
    DistMeshA,
    DistMeshB,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::StructuredFd, Method::DistMeshA, Method::DistMeshB];

    pub fn name(self) -> &'static str {
        match self {
            Method::StructuredFd => "structured-FD",
            Method::DistMeshA => "distmesh-a-FEM",
            Method::DistMeshB => "distmesh-b-FEM",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method {s:?}; expected structured-FD, distmesh-a-FEM or distmesh-b-FEM"
                ))
            })
    }
}

/// Measured quantities of one successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub elements: usize,
    pub unknowns: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub region: String,
    pub size: usize,
    pub method: Method,
    pub problem: u32,
    /// The measurement, or the diagnostic of the stage that failed.
    pub outcome: std::result::Result<Measurement, String>,
    /// Order against the previous configured size, when both succeeded.
    pub order: Option<f64>,
}

pub const CSV_HEADER: &str = "region,size,method,problem,elements,unknowns,error,order";

/// Successful records as CSV, one row each.
pub fn results_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let Ok(m) = &r.outcome else { continue };
        let order = r.order.map(|o| format!("{o:.4}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6e},{}",
            r.region,
            r.size,
            r.method.name(),
            r.problem,
            m.elements,
            m.unknowns,
            m.error,
            order
        );
    }
    out
}

/// Failed records with their diagnostics.
pub fn failures_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from("region,size,method,problem,diagnostic\n");
    for r in records {
        if let Err(d) = &r.outcome {
            let clean = d.replace([',', '\n'], ";");
            let _ = writeln!(out, "{},{},{},{},{}", r.region, r.size, r.method.name(), r.problem, clean);
        }
    }
    out
}

/// Fills `order` between consecutive configured sizes of each
/// (region, method, problem) series.
pub fn fill_orders(records: &mut [ExperimentRecord], sizes: &[usize]) {
    for k in 0..records.len() {
        records[k].order = None;
        let r = &records[k];
        let Ok(cur) = &r.outcome else { continue };
        let Some(pos) = sizes.iter().position(|&s| s == r.size) else { continue };
        if pos == 0 {
            continue;
        }
        let prev_size = sizes[pos - 1];
        let prev = records.iter().find(|p| {
            p.region == r.region && p.method == r.method && p.problem == r.problem && p.size == prev_size
        });
        if let Some(ExperimentRecord { outcome: Ok(pm), .. }) = prev {
            records[k].order = empirical_order(pm.error, cur.error, prev_size, records[k].size).ok();
        }
    }
}

/// Exact values at `points`, a convenience for solution files.
pub fn exact_values(prob: &dyn Problem, points: &[Point]) -> Vec<f64> {
    points.iter().map(|p| prob.exact(*p)).collect()
}
