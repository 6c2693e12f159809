//! The `meshbench` command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 I/O, 4 non-convex
//! grid, 5 solver non-convergence.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fem::{assemble_fem_system, nodal_values};
use crate::functionals::{optimize_grid_traced, write_trace_csv, FunctionalConfig, TraceRow};
use crate::geometry::{Point, Polygon};
use crate::gfd::{assemble_fd_system, DEFAULT_GS_MAX_ITERS, DEFAULT_GS_TOLERANCE};
use crate::grid::{distribute_boundary, StructuredGrid};
use crate::problems::{builtin_problem, Problem};
use crate::report::{fd_error, fem_error, run_experiment, write_outputs};
use crate::sparse::{solve_system, LinearSolver, SparseSystem};
use crate::textio::fmt_f64;
use crate::triangulation::{distmesh_generate, half_average_diagonal, DistMeshParams, TriMesh};

pub use config::{parse_config, CompareConfig, RegionEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NON_CONVEX: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

pub const THREADS_ENV: &str = "MESHBENCH_THREADS";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Io { .. } => EXIT_IO,
        Error::NonConvex { .. } => EXIT_NON_CONVEX,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "meshbench", version, about = "Convex structured grids versus DistMesh triangulations for anisotropic diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a convex structured grid on a polygon.
    GenerateGrid(GenerateGridArgs),
    /// Mesh a polygon with the force-balance generator.
    Triangulate(TriangulateArgs),
    /// Solve a model problem on a grid (fd) or a mesh (fem).
    Solve(SolveArgs),
    /// Run the full comparison described by a configuration file.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateGridArgs {
    #[arg(long)]
    pub polygon: PathBuf,
    /// Polygon vertex indices of the four grid corners, counterclockwise.
    #[arg(long, value_delimiter = ',', required = true)]
    pub corners: Vec<usize>,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Initial barrier scale; defaults to the mean corner-triangle area.
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long, default_value_t = FunctionalConfig::default().max_omega_updates)]
    pub max_omega_updates: usize,
    #[arg(long, default_value_t = FunctionalConfig::default().inner_tol)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = FunctionalConfig::default().inner_max_iters)]
    pub inner_max_iters: usize,
    /// Convergence trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TriangulateArgs {
    #[arg(long)]
    pub polygon: PathBuf,
    #[arg(long, conflicts_with = "from_grid")]
    pub h0: Option<f64>,
    /// Take h0 as half the average cell diagonal of this grid.
    #[arg(long)]
    pub from_grid: Option<PathBuf>,
    /// Start the interior nodes at the inner nodes of this grid.
    #[arg(long)]
    pub seed_grid: Option<PathBuf>,
    #[arg(long, default_value_t = DistMeshParams::new(1.0).max_iters)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Grid or mesh file; the kind is detected from the contents.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
    pub problem: u32,
    #[arg(long, value_parser = ["fd", "fem"])]
    pub method: String,
    /// auto, gauss-seidel, direct or cg.
    #[arg(long)]
    pub solver: Option<LinearSolver>,
    #[arg(long, default_value_t = DEFAULT_GS_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_GS_MAX_ITERS)]
    pub max_iters: usize,
    /// Writes the assembled matrix as `row col value` lines.
    #[arg(long)]
    pub dump_system: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads; overrides the environment variable.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn read_polygon(path: &Path) -> Result<Polygon> {
    Polygon::parse(&read(path)?)
}

fn read_grid(path: &Path) -> Result<StructuredGrid> {
    StructuredGrid::parse(&read(path)?)
}

/// A discretization file: structured grid or triangle mesh.
#[derive(Debug, Clone)]
pub enum Discretization {
    Grid(StructuredGrid),
    Mesh(TriMesh),
}

/// Grid files have two fields on their first vertex line, mesh files three.
pub fn parse_discretization(text: &str) -> Result<Discretization> {
    let second = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .nth(1)
        .ok_or_else(|| Error::parse(1, "file holds no vertex"))?;
    match second.split_whitespace().count() {
        2 => StructuredGrid::parse(text).map(Discretization::Grid),
        3 => TriMesh::parse(text).map(Discretization::Mesh),
        k => Err(Error::parse(
            1,
            format!("cannot tell grid from mesh: first vertex line has {k} fields"),
        )),
    }
}

/// `count` then one `x y u_num u_exact` line per node.
pub fn solution_text(points: &[Point], numeric: &[f64], prob: &dyn Problem) -> String {
    let mut out = format!("{}\n", points.len());
    for (p, u) in points.iter().zip(numeric) {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(*u),
            fmt_f64(prob.exact(*p))
        );
    }
    out
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn generate_grid(a: &GenerateGridArgs) -> Result<()> {
    let corners: [usize; 4] = a
        .corners
        .clone()
        .try_into()
        .map_err(|_| Error::InvalidArgument("--corners needs four indices".into()))?;
    let poly = read_polygon(&a.polygon)?;
    let b = distribute_boundary(&poly, corners, a.m, a.n)?;
    let cfg = FunctionalConfig {
        sigma: a.sigma,
        omega0: a.omega0,
        max_omega_updates: a.max_omega_updates,
        inner_tol: a.inner_tol,
        inner_max_iters: a.inner_max_iters,
        ..FunctionalConfig::default()
    };
    let mut rows: Vec<TraceRow> = Vec::new();
    let res = optimize_grid_traced(&b, &cfg, |r| rows.push(r))?;
    write(&a.out, &res.grid.to_text())?;
    if let Some(t) = &a.trace {
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).map_err(|e| Error::io(t, e))?;
        std::fs::write(t, buf).map_err(|e| Error::io(t, e))?;
    }
    println!(
        "convex {} min_alpha {:e} functional {:e} gradient {:e} omega_updates {} iterations {}",
        res.convex,
        res.min_alpha,
        res.final_functional_value,
        res.final_gradient_norm,
        res.omega_updates_used,
        res.iterations
    );
    if !res.convex {
        return Err(Error::NonConvex {
            min_alpha: res.min_alpha,
        });
    }
    Ok(())
}

fn triangulate(a: &TriangulateArgs) -> Result<()> {
    let poly = read_polygon(&a.polygon)?;
    let seed_grid = a.seed_grid.as_deref().map(read_grid).transpose()?;
    let h0 = match (a.h0, &a.from_grid, &seed_grid) {
        (Some(h), _, _) => h,
        (None, Some(p), _) => half_average_diagonal(&read_grid(p)?),
        (None, None, Some(g)) => half_average_diagonal(g),
        (None, None, None) => {
            return Err(Error::InvalidArgument(
                "one of --h0, --from-grid or --seed-grid is required".into(),
            ))
        }
    };
    let params = DistMeshParams {
        max_iters: a.max_iters,
        ..DistMeshParams::new(h0)
    };
    let seeds = seed_grid.as_ref().map(StructuredGrid::interior_points);
    let out = distmesh_generate(&poly, &params, seeds.as_deref())?;
    write(&a.out, &out.mesh.to_text())?;
    for w in out.warnings() {
        eprintln!("warning: {w}");
    }
    println!(
        "h0 {:e} elements {} interior {} delaunay_violations {} iterations {}",
        h0,
        out.mesh.element_count(),
        out.mesh.interior_count(),
        out.delaunay_violations,
        out.iterations
    );
    Ok(())
}

fn solve(a: &SolveArgs) -> Result<()> {
    let prob = builtin_problem(a.problem)?;
    let disc = parse_discretization(&read(&a.input)?)?;
    let (system, default_solver): (SparseSystem, LinearSolver) = match (&disc, a.method.as_str()) {
        (Discretization::Grid(g), "fd") => (assemble_fd_system(g, &prob)?, LinearSolver::Auto),
        (Discretization::Mesh(m), "fem") => (assemble_fem_system(m, &prob)?, LinearSolver::Direct),
        (Discretization::Grid(_), _) => {
            return Err(Error::InvalidArgument("fem needs a mesh file, got a grid".into()))
        }
        (Discretization::Mesh(_), _) => {
            return Err(Error::InvalidArgument("fd needs a grid file, got a mesh".into()))
        }
    };
    if let Some(p) = &a.dump_system {
        write(p, &system.matrix_dump())?;
    }
    let rep = solve_system(&system, a.solver.unwrap_or(default_solver), a.tol, a.max_iters)?;
    if let Some(r) = &rep.fallback_reason {
        eprintln!("note: fell back to the direct solver ({r})");
    }
    let (points, numeric, error) = match &disc {
        Discretization::Grid(g) => {
            let mut u: Vec<f64> = g.points().iter().map(|p| prob.dirichlet(*p)).collect();
            for ((i, j), v) in g.interior_nodes().zip(&rep.x) {
                u[g.index(i, j)] = *v;
            }
            (g.points().to_vec(), u, fd_error(g, &prob, &rep.x)?)
        }
        Discretization::Mesh(m) => {
            let u = nodal_values(m, &prob, &rep.x)?;
            let e = fem_error(m, &prob, &u)?;
            (m.nodes().to_vec(), u, e)
        }
    };
    write(&a.out, &solution_text(&points, &numeric, &prob))?;
    println!(
        "unknowns {} solver {} iterations {} residual {:e} error {:e}",
        system.dimension(),
        rep.solver.name(),
        rep.iterations,
        rep.residual,
        error
    );
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<()> {
    let cfg = parse_config(&read(&a.config)?)?;
    let threads = match a.threads {
        Some(0) => return Err(Error::InvalidArgument("--threads must be positive".into())),
        Some(t) => Some(t),
        None => threads_from_env()?,
    };
    let base = a.config.parent().unwrap_or(Path::new("."));
    let exp = cfg.load(base, threads)?;
    let records = run_experiment(&exp)?;
    write_outputs(&records, &exp, &a.out)?;
    let failed = records.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "records {} failed {} output {}",
        records.len(),
        failed,
        a.out.display()
    );
    Ok(())
}

fn single_threaded<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(f)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenerateGrid(a) => single_threaded(|| generate_grid(a)),
        Command::Triangulate(a) => single_threaded(|| triangulate(a)),
        Command::Solve(a) => single_threaded(|| solve(a)),
        Command::Compare(a) => compare(a),
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
