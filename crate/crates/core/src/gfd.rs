//! Generalized finite differences on the 3x3 subgrid of every interior node.
//!
//! Stencil members are ordered j-major: member `3 * (dj + 1) + (di + 1)` is
//! the node at offset `(di, dj)`, so the center is member 4.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::StructuredGrid;
use crate::problems::{partials_or_differences, Problem, Tensor2, TensorPartials};
use crate::sparse::SparseSystem;

pub use crate::sparse::{gauss_seidel_solve, IterativeSolution};

pub const DEFAULT_GS_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_GS_MAX_ITERS: usize = 1_000_000;

/// Relative singular value below which the moment matrix is rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// `-div(K grad .)` applied at the point to the centered monomials
/// `1, ξ, η, ξ², ξη, η²`.
pub fn operator_moments(k: Tensor2, dk: TensorPartials) -> Result<[f64; 6]> {
    k.check_spd()?;
    let d = [dk.dx_k11, dk.dy_k12, dk.dx_k12, dk.dy_k22];
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tensor partials".into()));
    }
    Ok([
        0.0,
        -(dk.dx_k11 + dk.dy_k12),
        -(dk.dx_k12 + dk.dy_k22),
        -2.0 * k.xx,
        -2.0 * k.xy,
        -2.0 * k.yy,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    /// Grid node `(i, j)` the stencil discretizes.
    pub center: (usize, usize),
    pub points: [Point; 9],
    pub gamma: [f64; 9],
}

impl Stencil {
    /// Grid coordinates of member `k`.
    pub fn member(&self, k: usize) -> (usize, usize) {
        let (i, j) = self.center;
        (i + k % 3 - 1, j + k / 3 - 1)
    }

    /// `Σ Γ_k u(p_k)`.
    pub fn apply(&self, u: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.gamma).map(|(p, g)| g * u(*p)).sum()
    }
}

/// Minimum-norm coefficients reproducing `moments` on all quadratics.
/// `center` only labels the error.
pub fn stencil_coefficients(
    center: (usize, usize),
    points: &[Point; 9],
    moments: &[f64; 6],
) -> Result<Stencil> {
    let c = points[4];
    let s = points.iter().map(|p| p.dist(c)).fold(0.0, f64::max);
    let degenerate = |rank| Error::DegenerateStencil {
        i: center.0,
        j: center.1,
        x: c.x,
        y: c.y,
        rank,
    };
    if !(s > 0.0) || !s.is_finite() {
        return Err(degenerate(1));
    }
    // rows scaled to the stencil size; the solution set is unchanged
    let mut m = SMatrix::<f64, 6, 9>::zeros();
    for (k, p) in points.iter().enumerate() {
        let xi = (p.x - c.x) / s;
        let eta = (p.y - c.y) / s;
        m[(0, k)] = 1.0;
        m[(1, k)] = xi;
        m[(2, k)] = eta;
        m[(3, k)] = xi * xi;
        m[(4, k)] = xi * eta;
        m[(5, k)] = eta * eta;
    }
    let scale = [1.0, s, s, s * s, s * s, s * s];
    let b = SVector::<f64, 6>::from_fn(|r, _| moments[r] / scale[r]);
    let sv = m.singular_values();
    let eps = RANK_TOLERANCE * sv.max();
    let rank = sv.iter().filter(|&&v| v > eps).count();
    if rank < 6 {
        return Err(degenerate(rank));
    }
    // x = Q R^-T b with M^T = QR; nalgebra's SVD solve loses digits when
    // singular values repeat (uniform grids)
    let qr = m.transpose().qr();
    let (q, r) = (qr.q(), qr.r());
    let rt = r.transpose();
    let solve = |rhs: &SVector<f64, 6>| {
        rt.solve_lower_triangular(rhs)
            .map(|y| q * y)
            .ok_or_else(|| Error::NonFinite(format!("stencil solve at node {center:?}")))
    };
    let mut x = solve(&b)?;
    x += solve(&(b - m * x))?;
    let mut gamma = [0.0; 9];
    for (g, v) in gamma.iter_mut().zip(x.iter()) {
        *g = *v;
    }
    if gamma.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("stencil at node {center:?}")));
    }
    Ok(Stencil {
        center,
        points: *points,
        gamma,
    })
}

fn subgrid(g: &StructuredGrid, i: usize, j: usize) -> [Point; 9] {
    let mut pts = [Point::default(); 9];
    for (k, p) in pts.iter_mut().enumerate() {
        *p = g.point(i + k % 3 - 1, j + k / 3 - 1);
    }
    pts
}

fn grid_diameter(g: &StructuredGrid) -> f64 {
    let (lo, hi) = crate::geometry::bounding_box(g.points());
    lo.dist(hi)
}

/// Stencils of all interior nodes in j-major order.
pub fn fd_stencils(g: &StructuredGrid, prob: &dyn Problem) -> Result<Vec<Stencil>> {
    let step = 1e-6 * grid_diameter(g);
    let nodes: Vec<(usize, usize)> = g.interior_nodes().collect();
    nodes
        .par_iter()
        .map(|&(i, j)| {
            let c = g.point(i, j);
            let k = prob.tensor(c);
            let dk = partials_or_differences(prob, c, step);
            let moments = operator_moments(k, dk)?;
            stencil_coefficients((i, j), &subgrid(g, i, j), &moments)
        })
        .collect()
}

/// One row per interior node (j-major); boundary members contribute
/// `-Γ g` to the right-hand side, which also carries `f` at the node.
pub fn assemble_fd_system(g: &StructuredGrid, prob: &dyn Problem) -> Result<SparseSystem> {
    let stencils = fd_stencils(g, prob)?;
    let inner_n = g.n() - 2;
    let unknown = |i: usize, j: usize| (j - 1) * inner_n + (i - 1);
    let mut rows = Vec::with_capacity(stencils.len());
    let mut rhs = Vec::with_capacity(stencils.len());
    for st in &stencils {
        let mut row = Vec::with_capacity(9);
        let mut b = prob.source(st.points[4]);
        for k in 0..9 {
            let (i, j) = st.member(k);
            if g.is_boundary(i, j) {
                b -= st.gamma[k] * prob.dirichlet(st.points[k]);
            } else {
                row.push((unknown(i, j), st.gamma[k]));
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    let s = SparseSystem::from_rows(rows, rhs)?;
    if let Some(r) = (0..s.dimension()).find(|&r| s.diagonal(r) == 0.0) {
        return Err(Error::ZeroDiagonal(r));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{optimize_grid, FunctionalConfig};
    use crate::grid::tests::{c_shape, uniform_square_grid};
    use crate::grid::{distribute_boundary, is_convex, default_convexity_eps};
    use crate::problems::BuiltinProblem;
    use crate::sparse::sparse_direct_solve;
    use proptest::prelude::*;

    fn unit_stencil_points(h: f64) -> [Point; 9] {
        let mut pts = [Point::default(); 9];
        for (k, p) in pts.iter_mut().enumerate() {
            *p = Point::new(h * ((k % 3) as f64 - 1.0), h * ((k / 3) as f64 - 1.0));
        }
        pts
    }

    const LAPLACE: [f64; 6] = [0.0, 0.0, 0.0, -2.0, 0.0, -2.0];

    #[test]
    fn moment_examples() {
        let zero = TensorPartials::default();
        assert_eq!(operator_moments(Tensor2::identity(), zero).unwrap(), LAPLACE);
        assert_eq!(
            operator_moments(Tensor2::symmetric(3.0, 0.0, 3.0), zero).unwrap(),
            [0.0, 0.0, 0.0, -6.0, 0.0, -6.0]
        );
        assert!(operator_moments(Tensor2::symmetric(1.0, 2.0, 1.0), zero).is_err());
        let skew = Tensor2 { xx: 1.0, xy: 0.2, yx: 0.1, yy: 1.0 };
        assert!(operator_moments(skew, zero).is_err());
    }

    #[test]
    fn moments_of_rotated_problem_match_differenced_tensor() {
        let prob = BuiltinProblem::RotatedEighth;
        let p = Point::new(0.5, 0.5);
        let mom = operator_moments(prob.tensor(p), prob.tensor_partials(p).unwrap()).unwrap();
        // independent route: difference the tensor itself
        let h = 1e-5;
        let k = |x: f64, y: f64| prob.tensor(Point::new(x, y));
        let d11x = (k(0.5 + h, 0.5).xx - k(0.5 - h, 0.5).xx) / (2.0 * h);
        let d12y = (k(0.5, 0.5 + h).xy - k(0.5, 0.5 - h).xy) / (2.0 * h);
        let d12x = (k(0.5 + h, 0.5).xy - k(0.5 - h, 0.5).xy) / (2.0 * h);
        let d22y = (k(0.5, 0.5 + h).yy - k(0.5, 0.5 - h).yy) / (2.0 * h);
        let kk = k(0.5, 0.5);
        let oracle = [
            0.0,
            -(d11x + d12y),
            -(d12x + d22y),
            -2.0 * kk.xx,
            -2.0 * kk.xy,
            -2.0 * kk.yy,
        ];
        for (a, b) in mom.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{mom:?} vs {oracle:?}");
        }
    }

    #[test]
    fn uniform_laplace_stencil_is_min_norm_oracle() {
        let st = stencil_coefficients((1, 1), &unit_stencil_points(1.0), &LAPLACE).unwrap();
        // pseudoinverse of the monomial matrix applied to the moments
        let c = -2.0 / 3.0;
        let e = 1.0 / 3.0;
        let oracle = [c, e, c, e, 4.0 / 3.0, e, c, e, c];
        for (a, b) in st.gamma.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-13, "{:?}", st.gamma);
        }
        assert!((st.apply(|p| p.x * p.x + p.y * p.y) + 4.0).abs() < 1e-13);
        assert!(st.gamma.iter().sum::<f64>().abs() < 1e-13);
        assert!(st.apply(|p| p.x).abs() < 1e-13);
    }

    fn moment_residual(st: &Stencil, moments: &[f64; 6]) -> f64 {
        let c = st.points[4];
        let mono = |r: usize, p: Point| {
            let (x, y) = (p.x - c.x, p.y - c.y);
            [1.0, x, y, x * x, x * y, y * y][r]
        };
        (0..6)
            .map(|r| (st.apply(|p| mono(r, p)) - moments[r]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rounded_uniform_subgrid_keeps_its_moments() {
        // an optimized 41x41 square grid; coordinates carry round-off
        let pts = [
            (0.375, 0.15000000000000005),
            (0.4, 0.15),
            (0.42499999999999993, 0.15000000000000005),
            (0.37500000000000006, 0.17500000000000004),
            (0.4, 0.17500000000000004),
            (0.42499999999999993, 0.175),
            (0.37499999999999994, 0.19999999999999996),
            (0.39999999999999997, 0.19999999999999996),
            (0.42500000000000004, 0.19999999999999996),
        ]
        .map(|(x, y)| Point::new(x, y));
        let moments = [0.0, 0.0, 0.0, -4.0, -1.4, -2.6];
        let st = stencil_coefficients((16, 7), &pts, &moments).unwrap();
        assert!(moment_residual(&st, &moments) < 1e-9, "{:?}", st.gamma);
    }

    proptest! {
        #[test]
        fn jittered_uniform_subgrids_keep_their_moments(
            jitter in prop::collection::vec(-4i32..=4, 18),
            kxy in -0.9f64..0.9,
        ) {
            let h = 0.025;
            let mut pts = unit_stencil_points(h);
            for (k, p) in pts.iter_mut().enumerate() {
                *p = Point::new(
                    0.4 + p.x + jitter[2 * k] as f64 * 1e-17,
                    0.2 + p.y + jitter[2 * k + 1] as f64 * 1e-17,
                );
            }
            let moments = [0.0, 0.0, 0.0, -2.0, -2.0 * kxy, -2.0];
            let st = stencil_coefficients((1, 1), &pts, &moments).unwrap();
            prop_assert!(moment_residual(&st, &moments) < 1e-9);
        }
    }

    #[test]
    fn stencil_scales_with_spacing() {
        let a = stencil_coefficients((1, 1), &unit_stencil_points(1.0), &LAPLACE).unwrap();
        let b = stencil_coefficients((1, 1), &unit_stencil_points(1e-3), &LAPLACE).unwrap();
        for (x, y) in a.gamma.iter().zip(&b.gamma) {
            assert!((x * 1e6 - y).abs() < 1e-6 * y.abs().max(1.0));
        }
    }

    #[test]
    fn collinear_subgrid_is_degenerate() {
        let mut pts = [Point::default(); 9];
        for (k, p) in pts.iter_mut().enumerate() {
            *p = Point::new(k as f64, 2.0 * k as f64);
        }
        pts.swap(0, 4);
        match stencil_coefficients((7, 3), &pts, &LAPLACE) {
            Err(Error::DegenerateStencil { i: 7, j: 3, rank, .. }) => assert!(rank < 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Constant SPD tensor with a quadratic manufactured solution.
    struct Quadratic {
        k: Tensor2,
        c: [f64; 6],
    }

    impl Problem for Quadratic {
        fn name(&self) -> String {
            "quadratic".into()
        }
        fn tensor(&self, _: Point) -> Tensor2 {
            self.k
        }
        fn tensor_partials(&self, _: Point) -> Option<TensorPartials> {
            Some(TensorPartials::default())
        }
        fn exact(&self, p: Point) -> f64 {
            let c = self.c;
            c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y
        }
        fn source(&self, _: Point) -> f64 {
            let c = self.c;
            -(2.0 * c[3] * self.k.xx + 2.0 * c[4] * self.k.xy + 2.0 * c[5] * self.k.yy)
        }
    }

    #[test]
    fn single_interior_node_matches_hand_assembly() {
        let g = uniform_square_grid(3);
        let prob = BuiltinProblem::Exponential;
        let s = assemble_fd_system(&g, &prob).unwrap();
        assert_eq!(s.dimension(), 1);
        // hand assembly: min-norm Laplace stencil at spacing h = 1/2
        let h2 = 0.25;
        let corner = -2.0 / 3.0 / h2;
        let edge = 1.0 / 3.0 / h2;
        let center = 4.0 / 3.0 / h2;
        let u = |x: f64, y: f64| prob.exact(Point::new(x, y));
        let corners = u(0.0, 0.0) + u(1.0, 0.0) + u(0.0, 1.0) + u(1.0, 1.0);
        let edges = u(0.5, 0.0) + u(1.0, 0.5) + u(0.5, 1.0) + u(0.0, 0.5);
        let f = prob.source(Point::new(0.5, 0.5));
        let expected = (f - corner * corners - edge * edges) / center;
        assert!((s.diagonal(0) - center).abs() < 1e-12);
        let x = sparse_direct_solve(&s).unwrap();
        assert!((x[0] - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn dimensions_follow_interior_count() {
        for (m, nu) in [(21, 361), (41, 1521)] {
            let g = uniform_square_grid(m);
            let s = assemble_fd_system(&g, &BuiltinProblem::RotatedEighth).unwrap();
            assert_eq!(s.dimension(), nu);
            assert!((0..s.dimension()).all(|r| s.row(r).len() <= 9));
        }
    }

    #[test]
    fn full_stencil_rows_sum_to_zero() {
        let (poly, corners) = c_shape();
        let b = distribute_boundary(&poly, corners, 13, 13).unwrap();
        let g = optimize_grid(&b, &FunctionalConfig::default()).unwrap().grid;
        for st in fd_stencils(&g, &BuiltinProblem::RotatedQuarter).unwrap() {
            let scale = st.gamma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(st.gamma.iter().sum::<f64>().abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn quadratic_exactness_on_optimized_reentrant_grid() {
        let (poly, corners) = c_shape();
        let b = distribute_boundary(&poly, corners, 21, 21).unwrap();
        let g = optimize_grid(&b, &FunctionalConfig::default()).unwrap().grid;
        assert!(is_convex(&g, default_convexity_eps(&g)));
        let prob = Quadratic {
            k: Tensor2::symmetric(2.0, 0.7, 1.5),
            c: [0.3, -1.0, 2.0, 1.5, -0.8, 0.6],
        };
        let s = assemble_fd_system(&g, &prob).unwrap();
        let x = sparse_direct_solve(&s).unwrap();
        let worst = g
            .interior_points()
            .iter()
            .zip(&x)
            .map(|(p, u)| (prob.exact(*p) - u).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-7, "max nodal error {worst:e}");
    }

    #[test]
    fn linearity_in_the_source() {
        let g = uniform_square_grid(9);
        let s1 = assemble_fd_system(&g, &BuiltinProblem::RotatedEighth).unwrap();
        let n = s1.dimension();
        let f2: Vec<f64> = (0..n).map(|k| (k as f64 * 0.37).cos()).collect();
        let sum: Vec<f64> = s1.rhs().iter().zip(&f2).map(|(a, b)| a + b).collect();
        let x1 = sparse_direct_solve(&s1).unwrap();
        let x2 = sparse_direct_solve(&s1.with_rhs(f2).unwrap()).unwrap();
        let x12 = sparse_direct_solve(&s1.with_rhs(sum).unwrap()).unwrap();
        for k in 0..n {
            assert!((x1[k] + x2[k] - x12[k]).abs() < 1e-10 * (1.0 + x12[k].abs()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn stencils_reproduce_quadratics(
            jitter in prop::collection::vec(-0.3f64..0.3, 18),
            h in 0.01f64..2.0,
            coeffs in prop::collection::vec(-2.0f64..2.0, 6),
            kxy in -0.9f64..0.9,
        ) {
            let mut pts = unit_stencil_points(h);
            for (k, p) in pts.iter_mut().enumerate() {
                p.x += h * jitter[2 * k];
                p.y += h * jitter[2 * k + 1];
            }
            let k = Tensor2::symmetric(1.0, kxy, 1.0 + kxy * kxy);
            let prob = Quadratic { k, c: [coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4], coeffs[5]] };
            let mom = operator_moments(k, TensorPartials::default()).unwrap();
            let st = stencil_coefficients((1, 1), &pts, &mom).unwrap();
            let lhs = st.apply(|p| prob.exact(p));
            let rhs = prob.source(pts[4]);
            let scale = st.gamma.iter().fold(0.0f64, |m, v| m.max(v.abs())) * h * h;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + scale) * (1.0 + rhs.abs()));
        }
    }
}
