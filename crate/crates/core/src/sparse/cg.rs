//! Unpreconditioned conjugate gradient with a relative residual stopping rule.

use nalgebra::{DMatrix, DVectorView, DVectorViewMut};
use serde::Serialize;

use super::{dot, CsrMatrix};
use crate::error::{ensure, Error, Result};

/// Anything that can apply a symmetric operator to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Floating point operations per application.
    fn apply_flops(&self) -> u64;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }

    fn apply_flops(&self) -> u64 {
        2 * self.nnz() as u64
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        let xv = DVectorView::from_slice(x, self.ncols());
        let mut yv = DVectorViewMut::from_slice(y, n);
        yv.gemv(1.0, self, &xv, 0.0);
    }

    fn apply_flops(&self) -> u64 {
        2 * (self.nrows() * self.ncols()) as u64
    }
}

#[derive(Clone, Debug)]
pub struct CgOptions<'a> {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub x0: Option<&'a [f64]>,
}

impl Default for CgOptions<'_> {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: 10_000, x0: None }
    }
}

impl<'a> CgOptions<'a> {
    pub fn new(rel_tol: f64, max_iter: usize) -> Self {
        Self { rel_tol, max_iter, x0: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CgReport {
    pub iterations: usize,
    /// `‖b − Ax‖₂ / ‖b‖₂` recomputed from the returned iterate.
    pub rel_residual: f64,
    pub converged: bool,
    pub flops: u64,
}

/// Solves `A x = b` for a sparse SPD `A`.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, CgReport)> {
    ensure(a.nrows() == a.ncols(), || "cg_solve needs a square matrix".into())?;
    cg_solve_with(a, b, &CgOptions { rel_tol, max_iter, x0 })
}

/// Conjugate gradient on any [`LinearOperator`].
///
/// Stops when the recursively updated residual satisfies
/// `‖r‖₂ ≤ rel_tol·‖b‖₂`; the true residual is then recomputed and, if drift
/// left it above the target, the iteration restarts from the current iterate
/// (at most three times). Hitting `max_iter` is reported, not an error.
/// A direction with `pᵀAp ≤ 0` means the operator is not SPD and is fatal.
pub fn cg_solve_with<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[f64],
    opts: &CgOptions<'_>,
) -> Result<(Vec<f64>, CgReport)> {
    let n = op.dim();
    ensure(b.len() == n, || format!("cg: rhs length {} for dimension {n}", b.len()))?;
    ensure(opts.rel_tol > 0.0 && opts.rel_tol < 1.0, || {
        format!("cg: rel_tol {} outside (0, 1)", opts.rel_tol)
    })?;
    let mut x = match opts.x0 {
        Some(x0) => {
            ensure(x0.len() == n, || format!("cg: x0 length {} for dimension {n}", x0.len()))?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let bnorm = dot(b, b).sqrt();
    let mut report = CgReport::default();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.converged = true;
        return Ok((x, report));
    }
    let target = opts.rel_tol * bnorm;
    let vec_flops = 10 * n as u64;
    let mut ap = vec![0.0; n];
    let mut r = residual(op, b, &x, &mut ap);
    if opts.x0.is_some() {
        report.flops += op.apply_flops();
    }

    for _restart in 0..4 {
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        while rr.sqrt() > target && report.iterations < opts.max_iter {
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Breakdown { iteration: report.iterations, curvature: pap });
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
            report.iterations += 1;
            report.flops += op.apply_flops() + vec_flops;
        }
        r = residual(op, b, &x, &mut ap);
        report.flops += op.apply_flops();
        let true_norm = dot(&r, &r).sqrt();
        report.rel_residual = true_norm / bnorm;
        report.converged = true_norm <= target;
        if report.converged || report.iterations >= opts.max_iter {
            break;
        }
    }
    Ok((x, report))
}

fn residual<O: LinearOperator + ?Sized>(op: &O, b: &[f64], x: &[f64], scratch: &mut [f64]) -> Vec<f64> {
    op.apply(x, scratch);
    b.iter().zip(scratch.iter()).map(|(bi, ai)| bi - ai).collect()
}
