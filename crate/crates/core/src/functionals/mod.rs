//! Grid functionals and the convexifying optimizer.
//!
//! The area functional averages `phi_w(a) / w`, with the barrier
//! `phi_w(a) = sqrt(w^2 + a^2) - a`, over every corner-triangle area `a` of
//! the grid. Dividing by `w` makes the penalty on negative areas steepen
//! (slope `2 / w`) as `w` shrinks. The length functional averages the squared
//! lengths of all grid edges. Their convex combination is minimized
//! over the interior node coordinates, shrinking `w` between rounds until
//! the minimizer is a convex grid.

mod lbfgs;

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{self, BoundarySpec, StructuredGrid};

/// Relative decrease below which a minimization round counts as stalled.
const STALL_TOLERANCE: f64 = 1e-13;

/// Value and gradient with respect to the interior node coordinates,
/// interleaved `[x, y]` per interior node in j-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalValue {
    pub value: f64,
    pub gradient: Vec<f64>,
}

impl FunctionalValue {
    pub fn gradient_inf_norm(&self) -> f64 {
        self.gradient.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Barrier applied to each corner-triangle area.
pub fn barrier(alpha: f64, omega: f64) -> f64 {
    let r = omega.hypot(alpha);
    if alpha > 0.0 {
        // avoids cancellation in r - alpha
        omega * omega / (r + alpha)
    } else {
        r - alpha
    }
}

pub fn barrier_derivative(alpha: f64, omega: f64) -> f64 {
    let r = omega.hypot(alpha);
    if alpha > 0.0 {
        -omega * omega / ((r + alpha) * r)
    } else {
        alpha / r - 1.0
    }
}

/// Half the gradient of `cross(q - p, r - p)` with respect to p, q and r.
#[inline]
fn area_gradient(p: Point, q: Point, r: Point) -> [Point; 3] {
    [
        Point::new(0.5 * (q.y - r.y), 0.5 * (r.x - q.x)),
        Point::new(0.5 * (r.y - p.y), 0.5 * (p.x - r.x)),
        Point::new(0.5 * (p.y - q.y), 0.5 * (q.x - p.x)),
    ]
}

/// Evaluates `sigma * S_omega + (1 - sigma) * L` and accumulates the gradient
/// for every node into `grad` (which is zeroed first). Returns the value and
/// the smallest corner-triangle area.
fn evaluate_nodes(
    points: &[Point],
    m: usize,
    n: usize,
    omega: f64,
    sigma: f64,
    grad: &mut [Point],
) -> (f64, f64) {
    grad.iter_mut().for_each(|g| *g = Point::default());
    let idx = |i: usize, j: usize| j * n + i;
    let triangles = 4 * (m - 1) * (n - 1);
    let edges = m * (n - 1) + n * (m - 1);
    let ws = sigma / (triangles as f64 * omega);
    let wl = (1.0 - sigma) / edges as f64;

    let mut area_sum = 0.0;
    let mut min_alpha = f64::INFINITY;
    for j in 0..m - 1 {
        for i in 0..n - 1 {
            let ids = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            let q = ids.map(|k| points[k]);
            // triangle at corner c uses its successor and predecessor
            for c in 0..4 {
                let (pc, pn, pp) = (c, (c + 1) % 4, (c + 3) % 4);
                let alpha = crate::geometry::triangle_signed_area(q[pc], q[pn], q[pp]);
                min_alpha = min_alpha.min(alpha);
                if sigma != 0.0 {
                    area_sum += barrier(alpha, omega);
                    let dphi = ws * barrier_derivative(alpha, omega);
                    let da = area_gradient(q[pc], q[pn], q[pp]);
                    for (slot, d) in [pc, pn, pp].into_iter().zip(da) {
                        let g = &mut grad[ids[slot]];
                        g.x += dphi * d.x;
                        g.y += dphi * d.y;
                    }
                }
            }
        }
    }

    let mut length_sum = 0.0;
    if sigma != 1.0 {
        let mut edge = |a: usize, b: usize| {
            let e = points[b] - points[a];
            length_sum += e.dot(e);
            let d = e * (2.0 * wl);
            grad[b].x += d.x;
            grad[b].y += d.y;
            grad[a].x -= d.x;
            grad[a].y -= d.y;
        };
        for j in 0..m {
            for i in 0..n - 1 {
                edge(idx(i, j), idx(i + 1, j));
            }
        }
        for j in 0..m - 1 {
            for i in 0..n {
                edge(idx(i, j), idx(i, j + 1));
            }
        }
    }
    let value = ws * area_sum + wl * length_sum;
    (value, min_alpha)
}

fn gather_interior(g: &StructuredGrid, node_grad: &[Point]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * g.interior_count());
    for (i, j) in g.interior_nodes() {
        let d = node_grad[g.index(i, j)];
        out.push(d.x);
        out.push(d.y);
    }
    out
}

fn functional(g: &StructuredGrid, omega: f64, sigma: f64) -> FunctionalValue {
    let mut node_grad = vec![Point::default(); g.points().len()];
    let (value, _) = evaluate_nodes(g.points(), g.m(), g.n(), omega, sigma, &mut node_grad);
    FunctionalValue {
        value,
        gradient: gather_interior(g, &node_grad),
    }
}

/// Mean squared length over all horizontal and vertical grid edges.
pub fn length_functional(g: &StructuredGrid) -> FunctionalValue {
    functional(g, 1.0, 0.0)
}

/// Mean of `phi_w(a) / w` over all `4 (m-1)(n-1)` corner-triangle areas.
pub fn area_functional(g: &StructuredGrid, omega: f64) -> FunctionalValue {
    functional(g, omega, 1.0)
}

pub fn combined_functional(g: &StructuredGrid, omega: f64, sigma: f64) -> FunctionalValue {
    functional(g, omega, sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalConfig {
    pub sigma: f64,
    /// Initial barrier scale; `None` uses the mean corner-triangle area of
    /// the initial grid.
    pub omega0: Option<f64>,
    pub omega_shrink: f64,
    /// Number of minimization rounds, each at a new barrier scale.
    pub max_omega_updates: usize,
    /// Relative reduction of the gradient infinity norm that ends a round.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub memory: usize,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            omega0: None,
            omega_shrink: 0.5,
            max_omega_updates: 20,
            inner_tol: 1e-6,
            inner_max_iters: 2000,
            memory: 7,
        }
    }
}

impl FunctionalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::InvalidArgument(format!(
                "sigma must lie in [0, 1], got {}",
                self.sigma
            )));
        }
        if let Some(w) = self.omega0 {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("omega0 must be positive, got {w}")));
            }
        }
        if !(self.omega_shrink > 0.0 && self.omega_shrink < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_shrink must lie in (0, 1), got {}",
                self.omega_shrink
            )));
        }
        if !(self.inner_tol >= 0.0) || self.memory == 0 {
            return Err(Error::InvalidArgument("invalid inner solver settings".into()));
        }
        Ok(())
    }
}

/// One accepted optimizer iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub value: f64,
    pub grad_inf: f64,
    pub min_alpha: f64,
    pub omega: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "iteration,F,grad_inf,min_alpha,omega")?;
    for r in rows {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e}",
            r.iteration, r.value, r.grad_inf, r.min_alpha, r.omega
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub grid: StructuredGrid,
    pub convex: bool,
    pub omega_updates_used: usize,
    pub final_functional_value: f64,
    pub final_gradient_norm: f64,
    pub min_alpha: f64,
    pub omega: f64,
    /// Accepted quasi-Newton steps over all rounds.
    pub iterations: usize,
}

pub fn optimize_grid(b: &BoundarySpec, cfg: &FunctionalConfig) -> Result<OptimizeResult> {
    optimize_grid_traced(b, cfg, |_| {})
}

/// [`optimize_grid`] reporting every accepted iterate to `trace`.
pub fn optimize_grid_traced<T: FnMut(TraceRow)>(
    b: &BoundarySpec,
    cfg: &FunctionalConfig,
    mut trace: T,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    let mut grid = grid::transfinite_init(b);
    let (m, n) = (grid.m(), grid.n());
    let eps = grid::default_convexity_eps(&grid);
    let mean_alpha = b.area() / (2.0 * grid.cell_count() as f64);
    let mut omega = cfg.omega0.unwrap_or(mean_alpha);

    let interior: Vec<usize> = grid.interior_nodes().map(|(i, j)| grid.index(i, j)).collect();
    let mut x: Vec<f64> = interior
        .iter()
        .flat_map(|&k| {
            let p = grid.points()[k];
            [p.x, p.y]
        })
        .collect();
    let min_seg = b
        .nodes()
        .iter()
        .zip(b.nodes().iter().cycle().skip(1))
        .map(|(a, c)| a.dist(*c))
        .fold(f64::INFINITY, f64::min);

    let mut points = grid.points().to_vec();
    let mut node_grad = vec![Point::default(); points.len()];
    let mut eval = |x: &[f64], g: &mut [f64], omega: f64, points: &mut Vec<Point>| -> (f64, f64) {
        for (k, &node) in interior.iter().enumerate() {
            points[node] = Point::new(x[2 * k], x[2 * k + 1]);
        }
        let (f, min_alpha) = evaluate_nodes(points, m, n, omega, cfg.sigma, &mut node_grad);
        for (k, &node) in interior.iter().enumerate() {
            g[2 * k] = node_grad[node].x;
            g[2 * k + 1] = node_grad[node].y;
        }
        (f, min_alpha)
    };

    let mut g0 = vec![0.0; x.len()];
    let (f0, alpha0) = eval(&x, &mut g0, omega, &mut points);
    if !f0.is_finite() {
        return Err(Error::NonFinite("grid functional at the initial grid".into()));
    }
    let g0_inf = g0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // an already balanced grid has a round-off initial gradient, so the
    // tolerance is floored at the gradient scale of one edge length
    let edges = (m * (n - 1) + n * (m - 1)) as f64;
    let g_scale = f0.abs().sqrt() / edges;
    let gtol = cfg.inner_tol * (1.0 + f0.abs()) * g0_inf.max(g_scale);

    let mut value = f0;
    let mut grad_inf = g0_inf;
    let mut min_alpha = alpha0;
    let mut used = 0;
    let mut iteration = 0;
    let mut steps = 0;
    let mut convex = grid::is_convex(&grid, eps);
    while used < cfg.max_omega_updates {
        used += 1;
        let opts = lbfgs::LbfgsOptions {
            memory: cfg.memory,
            max_iters: cfg.inner_max_iters,
            gtol,
            max_sd_step: 0.25 * min_seg,
            ftol: STALL_TOLERANCE,
        };
        let mut scratch = points.clone();
        let outcome = lbfgs::minimize(
            &mut x,
            |xs, g| eval(xs, g, omega, &mut points).0,
            &opts,
            |_, xs, f, gi| {
                iteration += 1;
                for (k, &node) in interior.iter().enumerate() {
                    scratch[node] = Point::new(xs[2 * k], xs[2 * k + 1]);
                }
                let ma = min_corner_area(&scratch, m, n);
                trace(TraceRow {
                    iteration,
                    value: f,
                    grad_inf: gi,
                    min_alpha: ma,
                    omega,
                });
            },
        );
        if !outcome.value.is_finite() {
            return Err(Error::NonFinite("grid functional during minimization".into()));
        }
        for (k, &node) in interior.iter().enumerate() {
            grid.points_mut()[node] = Point::new(x[2 * k], x[2 * k + 1]);
        }
        value = outcome.value;
        steps += outcome.iterations;
        grad_inf = outcome.grad_inf;
        min_alpha = grid::cell_triangle_areas(&grid).min();
        convex = min_alpha > eps;
        if convex {
            break;
        }
        if used < cfg.max_omega_updates {
            omega *= cfg.omega_shrink;
        }
    }
    if used == 0 {
        min_alpha = grid::cell_triangle_areas(&grid).min();
    }
    Ok(OptimizeResult {
        grid,
        convex,
        omega_updates_used: used,
        final_functional_value: value,
        final_gradient_norm: grad_inf,
        min_alpha,
        omega,
        iterations: steps,
    })
}

fn min_corner_area(points: &[Point], m: usize, n: usize) -> f64 {
    let mut min = f64::INFINITY;
    for j in 0..m - 1 {
        for i in 0..n - 1 {
            let q = [
                points[j * n + i],
                points[j * n + i + 1],
                points[(j + 1) * n + i + 1],
                points[(j + 1) * n + i],
            ];
            for a in grid::corner_triangles(q) {
                min = min.min(a);
            }
        }
    }
    min
}
