//! Sparse linear systems and the solvers used by both discretizations.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::textio::fmt_f64;

/// `A x = b` with `A` stored as sorted per-row `(column, value)` lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl SparseSystem {
    /// Builds from unsorted rows; duplicate columns are summed and exact
    /// zeros dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, rhs: Vec<f64>) -> Result<Self> {
        let dim = rows.len();
        if rhs.len() != dim {
            return Err(Error::LengthMismatch(dim, rhs.len()));
        }
        let mut clean = Vec::with_capacity(dim);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                if c >= dim {
                    return Err(Error::InvalidArgument(format!(
                        "row {r} references column {c} of a {dim}-dimensional system"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("matrix entry ({r}, {c})")));
                }
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != 0.0);
            clean.push(merged);
        }
        if let Some(k) = rhs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("right-hand side entry {k}")));
        }
        Ok(Self { rows: clean, rhs })
    }

    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.rows[r];
        match row.binary_search_by_key(&c, |&(k, _)| k) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self, r: usize) -> f64 {
        self.get(r, r)
    }

    /// Same matrix, new right-hand side.
    pub fn with_rhs(&self, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != self.dimension() {
            return Err(Error::LengthMismatch(self.dimension(), rhs.len()));
        }
        Ok(Self {
            rows: self.rows.clone(),
            rhs,
        })
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `||b - A x||_2 / ||b||_2`, or `||A x||_2` when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.mul(x);
        let r = norm2(ax.iter().zip(&self.rhs).map(|(a, b)| b - a));
        let b = norm2(self.rhs.iter().copied());
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }

    /// `max |A_rc - A_cr|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Coordinate dump, one `row col value` line per stored entry (0-based).
    pub fn matrix_dump(&self) -> String {
        let mut out = format!("# dimension {}\n", self.dimension());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let _ = writeln!(out, "{r} {c} {}", fmt_f64(v));
            }
        }
        out
    }

    /// Right-hand side, one value per line.
    pub fn rhs_dump(&self) -> String {
        let mut out = String::new();
        for v in &self.rhs {
            out.push_str(&fmt_f64(*v));
            out.push('\n');
        }
        out
    }
}

fn norm2(it: impl Iterator<Item = f64>) -> f64 {
    it.map(|v| v * v).sum::<f64>().sqrt()
}

/// Result of an iterative solve that met its tolerance.
#[derive(Debug, Clone)]
pub struct IterativeSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Residual growth beyond this factor is treated as divergence.
const DIVERGENCE_FACTOR: f64 = 1e8;

/// Classic forward Gauss–Seidel. Stops when the relative residual drops
/// below `tol`; reports `NotConverged` after `max_iters` sweeps or as soon
/// as the iteration visibly diverges.
pub fn gauss_seidel_solve(s: &SparseSystem, tol: f64, max_iters: usize) -> Result<IterativeSolution> {
    let n = s.dimension();
    let mut diag = vec![0.0; n];
    for (r, d) in diag.iter_mut().enumerate() {
        *d = s.diagonal(r);
        if *d == 0.0 {
            return Err(Error::ZeroDiagonal(r));
        }
    }
    let mut x = vec![0.0; n];
    let mut residual = s.relative_residual(&x);
    if residual < tol {
        return Ok(IterativeSolution {
            x,
            iterations: 0,
            residual,
        });
    }
    let start = residual;
    for sweep in 1..=max_iters {
        for r in 0..n {
            let mut acc = s.rhs[r];
            for &(c, v) in &s.rows[r] {
                if c != r {
                    acc -= v * x[c];
                }
            }
            x[r] = acc / diag[r];
        }
        residual = s.relative_residual(&x);
        if residual < tol {
            return Ok(IterativeSolution {
                x,
                iterations: sweep,
                residual,
            });
        }
        if !residual.is_finite() || residual > DIVERGENCE_FACTOR * start.max(1.0) {
            return Err(Error::NotConverged {
                iterations: sweep,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        residual,
    })
}

/// Conjugate gradients for symmetric positive definite systems.
pub fn conjugate_gradient_solve(
    s: &SparseSystem,
    tol: f64,
    max_iters: usize,
) -> Result<IterativeSolution> {
    let n = s.dimension();
    let bnorm = norm2(s.rhs.iter().copied());
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(IterativeSolution {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = s.rhs.clone();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 1..=max_iters {
        let ap = s.mul(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                iterations: it,
                residual: rr.sqrt() / bnorm,
            });
        }
        let a = rr / pap;
        for k in 0..n {
            x[k] += a * p[k];
            r[k] -= a * ap[k];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        if rr_new.sqrt() / bnorm < tol {
            // confirm against the true residual
            let residual = s.relative_residual(&x);
            if residual < tol {
                return Ok(IterativeSolution {
                    x,
                    iterations: it,
                    residual,
                });
            }
        }
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        residual: s.relative_residual(&x),
    })
}

/// Target relative residual of the direct solve.
pub const DIRECT_TOLERANCE: f64 = 1e-12;
const REFINEMENT_STEPS: usize = 3;

/// Gaussian elimination with partial pivoting on the band of the reverse
/// Cuthill–McKee reordered matrix, followed by iterative refinement.
/// Fully deterministic.
pub fn sparse_direct_solve(s: &SparseSystem) -> Result<Vec<f64>> {
    let n = s.dimension();
    if n == 0 {
        return Ok(Vec::new());
    }
    let perm = reverse_cuthill_mckee(s);
    let lu = BandLu::factor(s, &perm)?;
    let mut x = lu.solve(&s.rhs);
    let mut residual = s.relative_residual(&x);
    for _ in 0..REFINEMENT_STEPS {
        if residual < DIRECT_TOLERANCE {
            break;
        }
        let ax = s.mul(&x);
        let r: Vec<f64> = s.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = lu.solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let next = s.relative_residual(&candidate);
        if !(next < residual) {
            break;
        }
        x = candidate;
        residual = next;
    }
    if !residual.is_finite() {
        return Err(Error::NonFinite("direct solution".into()));
    }
    if residual >= DIRECT_TOLERANCE {
        return Err(Error::NotConverged {
            iterations: REFINEMENT_STEPS,
            residual,
        });
    }
    Ok(x)
}

/// Reverse Cuthill–McKee order of the symmetrized sparsity pattern;
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(s: &SparseSystem) -> Vec<usize> {
    let n = s.dimension();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, row) in s.rows.iter().enumerate() {
        for &(c, _) in row {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while order.len() < n {
        // next component starts at its unvisited node of least degree
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited node");
        let start = peripheral_node(&adj, &degree, seed);
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Pseudo-peripheral node by repeated breadth-first sweeps.
fn peripheral_node(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut best = seed;
    let mut best_ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(adj, best);
        let ecc = levels.iter().filter_map(|l| *l).max().unwrap_or(0);
        if ecc <= best_ecc && best != seed {
            break;
        }
        best_ecc = ecc;
        let far = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(ecc))
            .map(|(v, _)| v)
            .min_by_key(|&v| (degree[v], v))
            .expect("a node at maximal level");
        if far == best {
            break;
        }
        best = far;
    }
    best
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let l = level[v].expect("queued nodes have a level");
        for &w in &adj[v] {
            if level[w].is_none() {
                level[w] = Some(l + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

/// LU factors of a permuted band matrix in LINPACK layout: row `i` holds
/// columns `i - kl ..= i + kl + ku` (the extra `kl` absorb pivoting fill).
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandLu {
    fn factor(s: &SparseSystem, perm: &[usize]) -> Result<Self> {
        let n = s.dimension();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for (r, row) in s.rows.iter().enumerate() {
            let i = inv[r];
            for &(c, _) in row {
                let j = inv[c];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            perm: perm.to_vec(),
        };
        for (r, row) in s.rows.iter().enumerate() {
            let i = inv[r];
            for &(c, v) in row {
                *lu.at_mut(i, inv[c]) = v;
            }
        }
        let scale = s
            .rows
            .iter()
            .flat_map(|row| row.iter().map(|&(_, v)| v.abs()))
            .fold(0.0f64, f64::max);
        let span = kl + ku;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            for i in k + 1..=last {
                if lu.at(i, k).abs() > lu.at(p, k).abs() {
                    p = i;
                }
            }
            let pivot = lu.at(p, k);
            if pivot == 0.0 || pivot.abs() <= f64::EPSILON * scale * 1e-6 {
                return Err(Error::Singular(perm[k]));
            }
            lu.pivots[k] = p;
            let right = (k + span).min(n - 1);
            if p != k {
                for j in k..=right {
                    let a = lu.at(k, j);
                    let b = lu.at(p, j);
                    *lu.at_mut(k, j) = b;
                    *lu.at_mut(p, j) = a;
                }
            }
            for i in k + 1..=last {
                let l = lu.at(i, k) / pivot;
                *lu.at_mut(i, k) = l;
                if l != 0.0 {
                    for j in k + 1..=right {
                        let u = lu.at(k, j);
                        *lu.at_mut(i, j) -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.width + (j + self.kl - i)]
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            y.swap(k, self.pivots[k]);
            let yk = y[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                y[i] -= self.at(i, k) * yk;
            }
        }
        let span = self.kl + self.ku;
        for k in (0..n).rev() {
            let mut acc = y[k];
            for j in k + 1..=(k + span).min(n - 1) {
                acc -= self.at(k, j) * y[j];
            }
            y[k] = acc / self.at(k, k);
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Which linear solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolver {
    /// Gauss–Seidel, falling back to the direct solver if it fails.
    Auto,
    GaussSeidel,
    Direct,
    ConjugateGradient,
}

impl LinearSolver {
    pub fn name(self) -> &'static str {
        match self {
            LinearSolver::Auto => "auto",
            LinearSolver::GaussSeidel => "gauss-seidel",
            LinearSolver::Direct => "direct",
            LinearSolver::ConjugateGradient => "cg",
        }
    }
}

impl std::str::FromStr for LinearSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(LinearSolver::Auto),
            "gauss-seidel" | "gs" => Ok(LinearSolver::GaussSeidel),
            "direct" => Ok(LinearSolver::Direct),
            "cg" => Ok(LinearSolver::ConjugateGradient),
            _ => Err(Error::InvalidArgument(format!(
                "unknown solver {s:?}; expected auto, gauss-seidel, direct or cg"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Solver that produced `x`.
    pub solver: LinearSolver,
    /// Iterations of the iterative solver; 0 for a direct solve.
    pub iterations: usize,
    pub residual: f64,
    /// Diagnostic of the iterative attempt when `Auto` fell back.
    pub fallback_reason: Option<String>,
}

/// Runs `solver` with the given iterative tolerance and sweep budget.
pub fn solve_system(s: &SparseSystem, solver: LinearSolver, tol: f64, max_iters: usize) -> Result<SolveReport> {
    let direct = |reason: Option<String>| -> Result<SolveReport> {
        let x = sparse_direct_solve(s)?;
        let residual = s.relative_residual(&x);
        Ok(SolveReport {
            x,
            solver: LinearSolver::Direct,
            iterations: 0,
            residual,
            fallback_reason: reason,
        })
    };
    let iterative = |out: IterativeSolution, solver| SolveReport {
        x: out.x,
        solver,
        iterations: out.iterations,
        residual: out.residual,
        fallback_reason: None,
    };
    match solver {
        LinearSolver::Direct => direct(None),
        LinearSolver::GaussSeidel => Ok(iterative(gauss_seidel_solve(s, tol, max_iters)?, solver)),
        LinearSolver::ConjugateGradient => Ok(iterative(conjugate_gradient_solve(s, tol, max_iters)?, solver)),
        LinearSolver::Auto => match gauss_seidel_solve(s, tol, max_iters) {
            Ok(out) => Ok(iterative(out, LinearSolver::GaussSeidel)),
            Err(e @ (Error::NotConverged { .. } | Error::ZeroDiagonal(_))) => direct(Some(e.to_string())),
            Err(e) => Err(e),
        },
    }
}
