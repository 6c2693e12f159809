//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone)]
pub(crate) struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Absolute tolerance on the gradient infinity norm.
    pub gtol: f64,
    /// Largest coordinate displacement of a steepest-descent trial step.
    pub max_sd_step: f64,
    /// Stop once an accepted step lowers the value by no more than this
    /// fraction of its magnitude.
    pub ftol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LbfgsOutcome {
    pub value: f64,
    pub grad_inf: f64,
    pub iterations: usize,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f` starting from `x` (updated in place). `f` writes the
/// gradient into its second argument and returns the value. `on_iter`
/// sees every accepted iterate as `(iteration, x, value, grad_inf)`.
pub(crate) fn minimize<F, C>(
    x: &mut [f64],
    mut f: F,
    opts: &LbfgsOptions,
    mut on_iter: C,
) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    C: FnMut(usize, &[f64], f64, f64),
{
    let dim = x.len();
    let mut g = vec![0.0; dim];
    let mut fx = f(x, &mut g);
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; dim];
    let mut x_new = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];
    let mut alpha = vec![0.0; opts.memory];

    let mut iterations = 0;
    while iterations < opts.max_iters {
        let gnorm = inf_norm(&g);
        if gnorm <= opts.gtol || dim == 0 {
            break;
        }

        let mut steepest = history.is_empty();
        if !steepest {
            two_loop(&history, &g, &mut d, &mut alpha);
            if dot(&d, &g) >= 0.0 {
                history.clear();
                steepest = true;
            }
        }
        let accepted = loop {
            if steepest {
                let scale = opts.max_sd_step / gnorm;
                for (di, gi) in d.iter_mut().zip(&g) {
                    *di = -gi * scale;
                }
            }
            let slope = dot(&d, &g);
            let mut step = 1.0;
            let mut found = None;
            for _ in 0..MAX_BACKTRACKS {
                for k in 0..dim {
                    x_new[k] = x[k] + step * d[k];
                }
                let f_new = f(&x_new, &mut g_new);
                if f_new.is_finite() && f_new <= fx + ARMIJO_C1 * step * slope {
                    found = Some(f_new);
                    break;
                }
                step *= BACKTRACK;
            }
            match found {
                Some(v) => break Some(v),
                None if !steepest => {
                    history.clear();
                    steepest = true;
                }
                None => break None,
            }
        };
        let Some(f_new) = accepted else {
            // no decrease possible along steepest descent: stationary to
            // working precision
            break;
        };
        debug_assert!(f_new <= fx, "accepted step increased the functional");

        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        let stalled = fx - f_new <= opts.ftol * fx.abs().max(f_new.abs());
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = f_new;
        iterations += 1;
        on_iter(iterations, x, fx, inf_norm(&g));
        if stalled {
            break;
        }
    }
    LbfgsOutcome {
        value: fx,
        grad_inf: inf_norm(&g),
        iterations,
    }
}

/// `d = -H g` with the scaled identity as initial inverse Hessian.
fn two_loop(history: &VecDeque<Pair>, g: &[f64], d: &mut [f64], alpha: &mut [f64]) {
    for (di, gi) in d.iter_mut().zip(g) {
        *di = -gi;
    }
    for (k, p) in history.iter().enumerate().rev() {
        alpha[k] = p.rho * dot(&p.s, d);
        for (di, yi) in d.iter_mut().zip(&p.y) {
            *di -= alpha[k] * yi;
        }
    }
    let last = history.back().expect("non-empty history");
    let gamma = 1.0 / (last.rho * dot(&last.y, &last.y));
    for di in d.iter_mut() {
        *di *= gamma;
    }
    for (k, p) in history.iter().enumerate() {
        let beta = p.rho * dot(&p.y, d);
        for (di, si) in d.iter_mut().zip(&p.s) {
            *di += (alpha[k] - beta) * si;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let mut x = vec![-1.2, 1.0];
        let opts = LbfgsOptions {
            memory: 7,
            max_iters: 500,
            gtol: 1e-10,
            max_sd_step: 0.1,
            ftol: 0.0,
        };
        let mut last = f64::INFINITY;
        let out = minimize(
            &mut x,
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            &opts,
            |_, _, f, _| {
                assert!(f <= last);
                last = f;
            },
        );
        assert!(out.grad_inf <= 1e-10);
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stops_on_stalled_decrease() {
        let mut x = vec![1e-9, -1e-9];
        let opts = LbfgsOptions {
            memory: 7,
            max_iters: 1000,
            gtol: 0.0,
            max_sd_step: 1.0,
            ftol: 1e-12,
        };
        let out = minimize(
            &mut x,
            |x, g| {
                g[0] = 2.0 * x[0];
                g[1] = 2.0 * x[1];
                1.0 + x[0] * x[0] + x[1] * x[1]
            },
            &opts,
            |_, _, _, _| {},
        );
        assert!(out.iterations <= 2, "{} iterations", out.iterations);
    }

    #[test]
    fn quadratic_in_few_iterations() {
        let diag = [1.0, 10.0, 100.0, 3.0];
        let mut x = vec![1.0; 4];
        let opts = LbfgsOptions {
            memory: 7,
            max_iters: 100,
            gtol: 1e-12,
            max_sd_step: 1.0,
            ftol: 0.0,
        };
        let out = minimize(
            &mut x,
            |x, g| {
                let mut f = 0.0;
                for k in 0..4 {
                    g[k] = diag[k] * x[k];
                    f += 0.5 * diag[k] * x[k] * x[k];
                }
                f
            },
            &opts,
            |_, _, _, _| {},
        );
        assert!(out.iterations < 40, "{} iterations", out.iterations);
        assert!(x.iter().all(|v| v.abs() < 1e-10));
    }
}
