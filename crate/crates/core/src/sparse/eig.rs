//! Extreme eigenvalues of SPD operators.
//!
//! [`eig_extremes`] runs Lanczos with full reorthogonalization.
//! [`eig_extremes_power`] is the textbook pair of power iteration for the top
//! end and inverse iteration (CG inner solves) for the bottom end; it needs
//! far more operator applications when the bottom of the spectrum is
//! clustered, and is kept as an independent cross-check.

use rand::{Rng, SeedableRng};
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cg::{cg_solve_with, CgOptions, LinearOperator};
use super::{dot, norm2};
use crate::error::{ensure, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigEstimate {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub cond: f64,
    /// Operator applications, inner CG iterations included.
    pub applications: usize,
}

const MAX_OUTER: usize = 5000;
const MAX_LANCZOS: usize = 1500;

/// Estimates `(λ_max, λ_min)` to relative tolerance `tol` by Lanczos.
///
/// Stops when the Ritz residual bounds `β_m |s_m|` of both extreme Ritz
/// pairs fall below `tol` times the Ritz value.
pub fn eig_extremes<O: LinearOperator + ?Sized>(op: &O, tol: f64) -> Result<EigEstimate> {
    let n = op.dim();
    ensure(n > 0, || "eig_extremes on an empty operator".into())?;
    ensure(tol > 0.0 && tol < 1.0, || format!("eig_extremes: tol {tol} outside (0, 1)"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let max_steps = n.min(MAX_LANCZOS);

    let mut basis: Vec<Vec<f64>> = vec![normalized(start)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    loop {
        let m = basis.len();
        op.apply(&basis[m - 1], &mut w);
        let a = dot(&basis[m - 1], &w);
        alpha.push(a);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm2(&w);
        let exhausted = m == max_steps || b <= 1e-13 * a.abs().max(f64::MIN_POSITIVE);
        if exhausted || m % 8 == 0 {
            let (ritz, last) = tridiagonal_eigen(&alpha, &beta);
            let lo = 0;
            let hi = ritz.len() - 1;
            let res_lo = b * last[lo].abs();
            let res_hi = b * last[hi].abs();
            if ritz[lo] <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!("Lanczos Ritz value {:e}", ritz[lo])));
            }
            let done = res_lo <= tol * ritz[lo] && res_hi <= tol * ritz[hi];
            if done || exhausted {
                return Ok(EigEstimate {
                    lambda_max: ritz[hi],
                    lambda_min: ritz[lo],
                    cond: ritz[hi] / ritz[lo],
                    applications: m,
                });
            }
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// Ascending eigenvalues of the Lanczos tridiagonal and the last component
/// of each eigenvector.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i.abs_diff(j) == 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let last = order.iter().map(|&i| eig.eigenvectors[(m - 1, i)]).collect();
    (values, last)
}

/// Power iteration for `λ_max` and inverse iteration for `λ_min`.
///
/// Each iteration stops once its eigenpair residual is small,
/// `‖A v - θ v‖ ≤ tol·θ` (measured on `A⁻¹` for the inverse iteration), so
/// `θ` is within `tol·θ` of an eigenvalue at the end of the spectrum.
pub fn eig_extremes_power<O: LinearOperator + ?Sized>(op: &O, tol: f64) -> Result<EigEstimate> {
    let n = op.dim();
    ensure(n > 0, || "eig_extremes on an empty operator".into())?;
    ensure(tol > 0.0 && tol < 1.0, || format!("eig_extremes: tol {tol} outside (0, 1)"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.5).collect();

    let mut v = normalized(start.clone());
    let mut av = vec![0.0; n];
    let mut lmax = 0.0;
    let mut power_iterations = 0;
    for it in 0..MAX_OUTER {
        op.apply(&v, &mut av);
        lmax = dot(&v, &av);
        power_iterations = it + 1;
        if !(lmax > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("power iteration found vᵀAv = {lmax:e}")));
        }
        let res = residual_norm(&av, lmax, &v);
        v = normalized(av.clone());
        if res <= tol * lmax {
            break;
        }
    }

    let inner_tol = (tol * 1e-3).clamp(1e-12, 1e-6);
    let mut v = normalized(start);
    let mut nu = 0.0;
    let mut inverse_iterations = 0;
    let mut inner = 0;
    for it in 0..MAX_OUTER {
        let (y, rep) = cg_solve_with(op, &v, &CgOptions::new(inner_tol, 20 * n + 100))
            .map_err(|e| e.in_stage("eig_extremes inverse iteration"))?;
        inner += rep.iterations;
        nu = dot(&v, &y);
        inverse_iterations = it + 1;
        if !(nu > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("inverse iteration found vᵀA⁻¹v = {nu:e}")));
        }
        let res = residual_norm(&y, nu, &v);
        v = normalized(y);
        if res <= tol * nu {
            break;
        }
    }
    // The Rayleigh quotient of A on the final vector is sharper than 1/ν.
    op.apply(&v, &mut av);
    let lmin = dot(&v, &av).min(1.0 / nu);
    Ok(EigEstimate {
        lambda_max: lmax,
        lambda_min: lmin,
        cond: lmax / lmin,
        applications: power_iterations + inverse_iterations + inner + 1,
    })
}

fn residual_norm(av: &[f64], theta: f64, v: &[f64]) -> f64 {
    av.iter().zip(v).map(|(a, x)| (a - theta * x).powi(2)).sum::<f64>().sqrt()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let nrm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}
