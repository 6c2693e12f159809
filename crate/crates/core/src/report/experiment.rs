//! The region x size x method x problem comparison.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_fem_system, nodal_values};
use crate::functionals::{optimize_grid, FunctionalConfig};
use crate::geometry::Polygon;
use crate::gfd::{assemble_fd_system, DEFAULT_GS_MAX_ITERS, DEFAULT_GS_TOLERANCE};
use crate::grid::{distribute_boundary, StructuredGrid};
use crate::problems::{BuiltinProblem, Problem};
use crate::sparse::{solve_system, LinearSolver};
use crate::triangulation::{distmesh_generate, half_average_diagonal, DistMeshParams, TriMesh};

use super::{
    error_chart, failures_csv, fd_error, fem_error, fill_orders, results_csv, ExperimentRecord,
    Measurement, Method,
};

#[derive(Debug, Clone)]
pub struct Region {
    pub name: String,
    pub polygon: Polygon,
    /// Polygon vertex indices of the four grid corners.
    pub corners: [usize; 4],
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub regions: Vec<Region>,
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub problems: Vec<BuiltinProblem>,
    pub functional: FunctionalConfig,
    pub fd_solver: LinearSolver,
    pub fem_solver: LinearSolver,
    pub tol: f64,
    pub max_iters: usize,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(regions: Vec<Region>) -> Self {
        Self {
            regions,
            sizes: vec![21, 41, 81],
            methods: Method::ALL.to_vec(),
            problems: BuiltinProblem::ALL.to_vec(),
            functional: FunctionalConfig::default(),
            fd_solver: LinearSolver::Auto,
            fem_solver: LinearSolver::Direct,
            tol: DEFAULT_GS_TOLERANCE,
            max_iters: DEFAULT_GS_MAX_ITERS,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::InvalidArgument("no regions configured".into()));
        }
        if self.sizes.is_empty() || self.sizes[0] < 3 || self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "sizes must be >= 3 and strictly increasing, got {:?}",
                self.sizes
            )));
        }
        if self.methods.is_empty() || self.problems.is_empty() {
            return Err(Error::InvalidArgument("no methods or no problems configured".into()));
        }
        let mut names: Vec<&str> = self.regions.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("region names must be unique".into()));
        }
        if let Some(r) = self
            .regions
            .iter()
            .find(|r| r.name.is_empty() || r.name.contains([',', '\n']) || r.name.contains(char::is_whitespace))
        {
            return Err(Error::InvalidArgument(format!("invalid region name {:?}", r.name)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument("solver tolerance and budget must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        self.functional.validate()
    }
}

/// Runs every configured combination. Stage failures end up in the
/// records; only configuration errors are returned as `Err`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let cells: Vec<(&Region, usize)> = cfg
        .regions
        .iter()
        .flat_map(|r| cfg.sizes.iter().map(move |&s| (r, s)))
        .collect();
    let per_cell: Vec<Vec<ExperimentRecord>> =
        pool.install(|| cells.par_iter().map(|&(r, s)| run_cell(cfg, r, s)).collect());
    let mut records: Vec<ExperimentRecord> = per_cell.into_iter().flatten().collect();
    fill_orders(&mut records, &cfg.sizes);
    Ok(records)
}

/// Writes `results.csv`, `failures.csv` and one `err_p<k>.svg` per problem.
pub fn write_outputs(records: &[ExperimentRecord], cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path, e))
    };
    write("results.csv", results_csv(records))?;
    write("failures.csv", failures_csv(records))?;
    let largest = *cfg.sizes.last().expect("validated sizes");
    for p in &cfg.problems {
        write(&format!("err_p{}.svg", p.id()), error_chart(records, p.id(), largest))?;
    }
    Ok(())
}

fn structured_grid(region: &Region, poly: &Polygon, size: usize, cfg: &FunctionalConfig) -> Result<(StructuredGrid, bool)> {
    let b = distribute_boundary(poly, region.corners, size, size)?;
    let out = optimize_grid(&b, cfg)?;
    Ok((out.grid, out.convex))
}

fn run_cell(cfg: &ExperimentConfig, region: &Region, size: usize) -> Vec<ExperimentRecord> {
    let poly = region.polygon.scale_to_unit();
    let grid = poly
        .as_ref()
        .map_err(|e| e.to_string())
        .and_then(|p| structured_grid(region, p, size, &cfg.functional).map_err(|e| e.to_string()));
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let stage: std::result::Result<Discretization, String> = match (&poly, &grid) {
            (Err(e), _) => Err(format!("region: {e}")),
            (_, Err(e)) => Err(format!("grid: {e}")),
            (Ok(p), Ok((g, convex))) => build(method, p, g, *convex).map_err(|e| e.to_string()),
        };
        for &prob in &cfg.problems {
            let outcome = stage
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|d| d.solve(cfg, &prob).map_err(|e| format!("solve: {e}")));
            out.push(ExperimentRecord {
                region: region.name.clone(),
                size,
                method,
                problem: prob.id(),
                outcome,
                order: None,
            });
        }
    }
    out
}

enum Discretization {
    Grid(StructuredGrid),
    Mesh(TriMesh),
}

fn build(method: Method, poly: &Polygon, g: &StructuredGrid, convex: bool) -> Result<Discretization> {
    let h0 = half_average_diagonal(g);
    match method {
        Method::StructuredFd => {
            if !convex {
                return Err(Error::NonConvex {
                    min_alpha: crate::grid::cell_triangle_areas(g).min(),
                });
            }
            Ok(Discretization::Grid(g.clone()))
        }
        Method::DistMeshA => Ok(Discretization::Mesh(
            distmesh_generate(poly, &DistMeshParams::new(h0), None)?.mesh,
        )),
        Method::DistMeshB => {
            let seeds = g.interior_points();
            Ok(Discretization::Mesh(
                distmesh_generate(poly, &DistMeshParams::new(h0), Some(&seeds))?.mesh,
            ))
        }
    }
}

impl Discretization {
    fn solve(&self, cfg: &ExperimentConfig, prob: &dyn Problem) -> Result<Measurement> {
        match self {
            Discretization::Grid(g) => {
                let s = assemble_fd_system(g, prob)?;
                let sol = solve_system(&s, cfg.fd_solver, cfg.tol, cfg.max_iters)?;
                Ok(Measurement {
                    elements: 2 * g.cell_count(),
                    unknowns: s.dimension(),
                    error: fd_error(g, prob, &sol.x)?,
                })
            }
            Discretization::Mesh(m) => {
                let s = assemble_fem_system(m, prob)?;
                let sol = solve_system(&s, cfg.fem_solver, cfg.tol, cfg.max_iters)?;
                let nodal = nodal_values(m, prob, &sol.x)?;
                Ok(Measurement {
                    elements: m.element_count(),
                    unknowns: s.dimension(),
                    error: fem_error(m, prob, &nodal)?,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::{c_shape, square};

    fn unit_square() -> Region {
        Region {
            name: "square".into(),
            polygon: square(1.0),
            corners: [0, 1, 2, 3],
        }
    }

    #[test]
    fn protocol_shape() {
        let mut cfg = ExperimentConfig::new(vec![unit_square()]);
        cfg.sizes = vec![11, 21];
        cfg.methods = vec![Method::StructuredFd];
        cfg.problems = vec![BuiltinProblem::Exponential];
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].order.is_none());
        let o = r[1].order.unwrap();
        assert!(o > 1.5 && o < 2.5, "{o}");
        let m = r[1].outcome.as_ref().unwrap();
        assert_eq!((m.elements, m.unknowns), (800, 361));
    }

    #[test]
    fn failures_are_recorded_and_the_run_continues() {
        let (poly, corners) = c_shape();
        let mut cfg = ExperimentConfig::new(vec![Region {
            name: "c".into(),
            polygon: poly,
            corners,
        }]);
        cfg.sizes = vec![11];
        cfg.functional.max_omega_updates = 0;
        cfg.problems = vec![BuiltinProblem::Exponential];
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0].outcome.as_ref().unwrap_err().contains("not convex"));
        assert!(r[1].outcome.is_ok(), "{:?}", r[1].outcome);
        // the tangled grid has nodes outside the region, so seeding from it fails
        assert!(r[2].outcome.as_ref().unwrap_err().contains("not strictly inside"));
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ExperimentConfig::new(vec![]);
        assert!(run_experiment(&cfg).is_err());
        cfg.regions.push(unit_square());
        cfg.sizes = vec![21, 21];
        assert!(run_experiment(&cfg).is_err());
        cfg.sizes = vec![2];
        assert!(run_experiment(&cfg).is_err());
        cfg.sizes = vec![5];
        cfg.regions.push(unit_square());
        assert!(run_experiment(&cfg).is_err());
    }
}
