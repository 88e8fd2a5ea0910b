//! Sparse storage, Krylov solves and spectral estimates.

mod cg;
mod csr;
mod eig;
pub mod mtx;

pub use cg::{cg_solve, cg_solve_with, CgOptions, CgReport, LinearOperator};
pub use csr::{CsrMatrix, Principal};
pub use eig::{eig_extremes, eig_extremes_power, EigEstimate};

/// Euclidean inner product with a fixed summation order.
#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
