//! Manufactured test problems for `-div(K grad u) = f` with `u = g` on the
//! boundary.
//!
//! Sources and tensor partials are closed forms; `scripts/derive_problems.py`
//! checks them symbolically and produced the reference values in the tests.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A 2x2 tensor. Diffusion tensors are symmetric; the general form exists so
/// inputs can be validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Tensor2 {
    pub const fn symmetric(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yx: xy, yy }
    }

    pub const fn identity() -> Self {
        Self::symmetric(1.0, 0.0, 1.0)
    }

    pub fn apply(&self, v: Point) -> Point {
        Point::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    pub fn is_symmetric(&self) -> bool {
        let scale = self.xx.abs().max(self.yy.abs()).max(self.xy.abs()).max(1e-300);
        (self.xy - self.yx).abs() <= 1e-12 * scale
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let off = 0.5 * (self.xy + self.yx);
        let mean = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(off);
        (mean - r, mean + r)
    }

    pub fn check_spd(&self) -> Result<()> {
        let finite = [self.xx, self.xy, self.yx, self.yy].iter().all(|v| v.is_finite());
        if !finite || !self.is_symmetric() || !(self.eigenvalues().0 > 0.0) {
            return Err(Error::NotSpd(self.xx, self.xy, self.yx, self.yy));
        }
        Ok(())
    }
}

/// The four tensor partials the discrete operator needs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TensorPartials {
    pub dx_k11: f64,
    pub dy_k12: f64,
    pub dx_k12: f64,
    pub dy_k22: f64,
}

/// A diffusion problem on (a subset of) the unit square.
///
/// Implement this trait to plug in a new problem. `tensor_partials` may be
/// left as `None`, in which case callers fall back to central differences.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;

    fn tensor(&self, p: Point) -> Tensor2;

    fn tensor_partials(&self, _p: Point) -> Option<TensorPartials> {
        None
    }

    fn exact(&self, p: Point) -> f64;

    fn source(&self, p: Point) -> f64;

    fn dirichlet(&self, p: Point) -> f64 {
        self.exact(p)
    }
}

/// Tensor at `p`, rejected unless symmetric positive definite.
pub fn tensor_eval(prob: &dyn Problem, p: Point) -> Result<Tensor2> {
    let k = prob.tensor(p);
    k.check_spd()?;
    Ok(k)
}

/// Analytic partials when the problem has them, else central differences
/// with the given step.
pub fn partials_or_differences(prob: &dyn Problem, p: Point, step: f64) -> TensorPartials {
    if let Some(d) = prob.tensor_partials(p) {
        return d;
    }
    let ex = Point::new(step, 0.0);
    let ey = Point::new(0.0, step);
    let (kxp, kxm) = (prob.tensor(p + ex), prob.tensor(p - ex));
    let (kyp, kym) = (prob.tensor(p + ey), prob.tensor(p - ey));
    let h2 = 2.0 * step;
    TensorPartials {
        dx_k11: (kxp.xx - kxm.xx) / h2,
        dy_k12: (kyp.xy - kym.xy) / h2,
        dx_k12: (kxp.xy - kxm.xy) / h2,
        dy_k22: (kyp.yy - kym.yy) / h2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinProblem {
    /// `K = I`, `u = 2 exp(2x + y)`.
    Exponential,
    /// `K = P^T D P`, rotation by pi/8, `u = sin(pi x) sin(pi y)`.
    RotatedEighth,
    /// `K = P^T D P`, rotation by pi/4 with quintic/cubic terms in `D`.
    RotatedQuarter,
}

pub fn builtin_problem(id: u32) -> Result<BuiltinProblem> {
    match id {
        1 => Ok(BuiltinProblem::Exponential),
        2 => Ok(BuiltinProblem::RotatedEighth),
        3 => Ok(BuiltinProblem::RotatedQuarter),
        _ => Err(Error::InvalidArgument(format!(
            "unknown problem {id}; expected 1, 2 or 3"
        ))),
    }
}

/// `D = diag(d1, d2)` and its partials.
struct Diagonal {
    d1: f64,
    d2: f64,
    d1x: f64,
    d1y: f64,
    d2x: f64,
    d2y: f64,
}

impl BuiltinProblem {
    pub const ALL: [BuiltinProblem; 3] = [
        BuiltinProblem::Exponential,
        BuiltinProblem::RotatedEighth,
        BuiltinProblem::RotatedQuarter,
    ];

    pub fn id(self) -> u32 {
        match self {
            BuiltinProblem::Exponential => 1,
            BuiltinProblem::RotatedEighth => 2,
            BuiltinProblem::RotatedQuarter => 3,
        }
    }

    fn angle(self) -> f64 {
        match self {
            BuiltinProblem::Exponential => 0.0,
            BuiltinProblem::RotatedEighth => PI / 8.0,
            BuiltinProblem::RotatedQuarter => PI / 4.0,
        }
    }

    fn diagonal(self, p: Point) -> Diagonal {
        let (x, y) = (p.x, p.y);
        match self {
            BuiltinProblem::Exponential => Diagonal {
                d1: 1.0,
                d2: 1.0,
                d1x: 0.0,
                d1y: 0.0,
                d2x: 0.0,
                d2y: 0.0,
            },
            BuiltinProblem::RotatedEighth => Diagonal {
                d1: 1.0 + 2.0 * x * x + y * y,
                d2: 1.0 + x * x + 2.0 * y * y,
                d1x: 4.0 * x,
                d1y: 2.0 * y,
                d2x: 2.0 * x,
                d2y: 4.0 * y,
            },
            BuiltinProblem::RotatedQuarter => Diagonal {
                d1: 1.0 + 2.0 * x * x + y * y + y.powi(5),
                d2: 1.0 + x * x + 2.0 * y * y + x.powi(3),
                d1x: 4.0 * x,
                d1y: 2.0 * y + 5.0 * y.powi(4),
                d2x: 2.0 * x + 3.0 * x * x,
                d2y: 4.0 * y,
            },
        }
    }

    /// `(u, u_x, u_y, u_xx, u_xy, u_yy)`.
    fn solution_jet(self, p: Point) -> [f64; 6] {
        match self {
            BuiltinProblem::Exponential => {
                let e = (2.0 * p.x + p.y).exp();
                [2.0 * e, 4.0 * e, 2.0 * e, 8.0 * e, 4.0 * e, 2.0 * e]
            }
            BuiltinProblem::RotatedEighth | BuiltinProblem::RotatedQuarter => {
                let (sx, cx) = (PI * p.x).sin_cos();
                let (sy, cy) = (PI * p.y).sin_cos();
                let pi2 = PI * PI;
                [
                    sx * sy,
                    PI * cx * sy,
                    PI * sx * cy,
                    -pi2 * sx * sy,
                    pi2 * cx * cy,
                    -pi2 * sx * sy,
                ]
            }
        }
    }

    /// Rotation weights `(c^2, s^2, c s)` of `P^T diag(d1, d2) P`.
    fn weights(self) -> (f64, f64, f64) {
        let (s, c) = self.angle().sin_cos();
        (c * c, s * s, c * s)
    }
}

impl Problem for BuiltinProblem {
    fn name(&self) -> String {
        format!("problem {}", self.id())
    }

    fn tensor(&self, p: Point) -> Tensor2 {
        if *self == BuiltinProblem::Exponential {
            return Tensor2::identity();
        }
        let d = self.diagonal(p);
        let (cc, ss, cs) = self.weights();
        Tensor2::symmetric(cc * d.d1 + ss * d.d2, cs * (d.d1 - d.d2), ss * d.d1 + cc * d.d2)
    }

    fn tensor_partials(&self, p: Point) -> Option<TensorPartials> {
        if *self == BuiltinProblem::Exponential {
            return Some(TensorPartials::default());
        }
        let d = self.diagonal(p);
        let (cc, ss, cs) = self.weights();
        Some(TensorPartials {
            dx_k11: cc * d.d1x + ss * d.d2x,
            dy_k12: cs * (d.d1y - d.d2y),
            dx_k12: cs * (d.d1x - d.d2x),
            dy_k22: ss * d.d1y + cc * d.d2y,
        })
    }

    fn exact(&self, p: Point) -> f64 {
        self.solution_jet(p)[0]
    }

    fn source(&self, p: Point) -> f64 {
        let [_, ux, uy, uxx, uxy, uyy] = self.solution_jet(p);
        let k = self.tensor(p);
        let dk = self.tensor_partials(p).expect("built-in partials");
        -(k.xx * uxx
            + 2.0 * k.xy * uxy
            + k.yy * uyy
            + (dk.dx_k11 + dk.dy_k12) * ux
            + (dk.dx_k12 + dk.dy_k22) * uy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn unknown_id_is_rejected() {
        assert!(builtin_problem(0).is_err());
        assert!(builtin_problem(4).is_err());
        assert_eq!(builtin_problem(2).unwrap(), BuiltinProblem::RotatedEighth);
    }

    #[test]
    fn frozen_symbolic_values() {
        let p1 = BuiltinProblem::Exponential;
        assert!(close(p1.source(Point::new(0.0, 0.0)), -10.0, 1e-15));
        assert!(close(p1.source(Point::new(0.3, 0.7)), -36.692966676192433795, 1e-14));
        assert!(close(p1.source(Point::new(1.0, 1.0)), -200.85536923187669345, 1e-14));

        let p2 = BuiltinProblem::RotatedEighth;
        let q = Point::new(0.3, 0.7);
        assert!(close(p2.source(q), 26.466572848082651641, 1e-13));
        assert!(close(p2.source(Point::new(0.81, 0.12)), 12.756348108020711652, 1e-13));
        let k = p2.tensor(q);
        assert!(close(k.xx, 1.7285786437626904111, 1e-15));
        assert!(close(k.xy, -0.14142135623730947348, 1e-15));
        assert!(close(k.yy, 2.0114213562373093580, 1e-15));
        let d = p2.tensor_partials(q).unwrap();
        assert!(close(d.dx_k11, 1.1121320343559641607, 1e-15));
        assert!(close(d.dy_k12, -0.49497474683058323568, 1e-15));
        assert!(close(d.dx_k12, 0.21213203435596424947, 1e-15));
        assert!(close(d.dy_k22, 2.5949747468305828804, 1e-15));

        let p3 = BuiltinProblem::RotatedQuarter;
        assert!(close(p3.source(q), 27.419870698181045989, 1e-13));
        assert!(close(p3.source(Point::new(0.81, 0.12)), 12.960024199667560430, 1e-13));
        let d = p3.tensor_partials(Point::new(1.0, 1.0)).unwrap();
        assert!(close(d.dx_k11, 4.5, 1e-15));
        assert!(close(d.dy_k12, 1.5, 1e-15));
        assert!(close(d.dx_k12, -0.5, 1e-15));
        assert!(close(d.dy_k22, 5.5, 1e-15));
    }

    #[test]
    fn tensor_examples() {
        let p1 = BuiltinProblem::Exponential;
        assert_eq!(tensor_eval(&p1, Point::new(0.4, 0.9)).unwrap(), Tensor2::identity());
        let k = tensor_eval(&BuiltinProblem::RotatedEighth, Point::new(0.0, 0.0)).unwrap();
        assert!(close(k.xx, 1.0, 1e-15) && k.xy.abs() < 1e-15 && close(k.yy, 1.0, 1e-15));
        let k = tensor_eval(&BuiltinProblem::RotatedQuarter, Point::new(1.0, 1.0)).unwrap();
        assert!(close(k.xx, 5.0, 1e-15) && k.xy.abs() < 1e-14 && close(k.yy, 5.0, 1e-15));
    }

    #[test]
    fn sine_problems_vanish_on_square_boundary() {
        for prob in [BuiltinProblem::RotatedEighth, BuiltinProblem::RotatedQuarter] {
            for k in 0..=20 {
                let t = k as f64 / 20.0;
                for p in [
                    Point::new(t, 0.0),
                    Point::new(t, 1.0),
                    Point::new(0.0, t),
                    Point::new(1.0, t),
                ] {
                    assert!(prob.dirichlet(p).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn spd_checks() {
        assert!(Tensor2::symmetric(1.0, 2.0, 1.0).check_spd().is_err());
        assert!(Tensor2 { xx: 1.0, xy: 0.1, yx: 0.0, yy: 1.0 }.check_spd().is_err());
        assert!(Tensor2::symmetric(2.0, 0.5, 1.0).check_spd().is_ok());
    }

    #[test]
    fn finite_difference_partials_fallback() {
        struct NoPartials;
        impl Problem for NoPartials {
            fn name(&self) -> String {
                "no partials".into()
            }
            fn tensor(&self, p: Point) -> Tensor2 {
                BuiltinProblem::RotatedQuarter.tensor(p)
            }
            fn exact(&self, _: Point) -> f64 {
                0.0
            }
            fn source(&self, _: Point) -> f64 {
                0.0
            }
        }
        let p = Point::new(0.37, 0.61);
        let fd = partials_or_differences(&NoPartials, p, 1e-6);
        let exact = BuiltinProblem::RotatedQuarter.tensor_partials(p).unwrap();
        assert!((fd.dx_k11 - exact.dx_k11).abs() < 1e-8);
        assert!((fd.dy_k12 - exact.dy_k12).abs() < 1e-8);
        assert!((fd.dx_k12 - exact.dx_k12).abs() < 1e-8);
        assert!((fd.dy_k22 - exact.dy_k22).abs() < 1e-8);
    }
}
