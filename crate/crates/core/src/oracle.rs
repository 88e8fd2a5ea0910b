//! Dense reference formulas. Slow by construction; used to cross-check the
//! hierarchical pipelines on small grids.

use nalgebra::DMatrix;

use crate::error::{ensure, Error, Result};
use crate::sparse::CsrMatrix;

pub const MAX_DENSE_DIM: usize = 4096;

/// Solves `A X = B` by Cholesky.
pub fn dense_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    ensure(a.is_square(), || "dense_solve needs a square matrix".into())?;
    ensure(n <= MAX_DENSE_DIM, || format!("dense oracle limited to {MAX_DENSE_DIM} unknowns, got {n}"))?;
    ensure(b.nrows() == n, || format!("dense_solve: rhs has {} rows for {n}", b.nrows()))?;
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("dense Cholesky hit a non-positive pivot".into()))?;
    Ok(chol.solve(b))
}

/// `Θ = Φ A⁻¹ Φᵀ`.
pub fn dense_theta(a: &CsrMatrix, phi: &CsrMatrix) -> Result<DMatrix<f64>> {
    let x = solve_phi_t(a, phi)?;
    let theta = phi.mul_dense(&x)?;
    Ok(symmetric_part(&theta))
}

/// Rows of `Ψ = (Φ K Φᵀ)⁻¹ Φ K` with `K = A⁻¹`: the minimizers of `ψᵀAψ`
/// under the measurement constraints `Φ ψ_i = e_i`.
pub fn dense_gamblets(a: &CsrMatrix, phi: &CsrMatrix) -> Result<DMatrix<f64>> {
    let x = solve_phi_t(a, phi)?;
    let theta = symmetric_part(&phi.mul_dense(&x)?);
    let m = theta.nrows();
    let chol = theta
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("Φ K Φᵀ ({m}x{m}) is rank deficient")))?;
    Ok(chol.solve(&x.transpose()))
}

fn solve_phi_t(a: &CsrMatrix, phi: &CsrMatrix) -> Result<DMatrix<f64>> {
    ensure(phi.ncols() == a.nrows(), || {
        format!("Φ has {} columns for a {}-dimensional operator", phi.ncols(), a.nrows())
    })?;
    let phit = phi.transpose().to_dense();
    dense_solve(&a.to_dense(), &phit)
}

pub(crate) fn symmetric_part(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_stiffness};
    use crate::grid::{CoefficientField, Grid};
    use crate::hierarchy::IndexTree;

    fn problem(q: u32, rough: bool) -> (Grid, IndexTree, CsrMatrix, CsrMatrix) {
        let g = Grid::new(q).unwrap();
        let a = if rough { CoefficientField::example1(&g) } else { CoefficientField::constant(&g, 1.0).unwrap() };
        (g, IndexTree::new(&g), assemble_mass(&g), assemble_stiffness(&g, &a).unwrap())
    }

    #[test]
    fn trivial_solves() {
        let id = DMatrix::<f64>::identity(3, 3);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(dense_solve(&id, &b).unwrap(), b);
        let x = dense_solve(&DMatrix::from_element(1, 1, 2.0), &DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-15);
        let indefinite = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let rhs = DMatrix::from_element(2, 1, 1.0);
        assert!(matches!(dense_solve(&indefinite, &rhs), Err(Error::NotPositiveDefinite(_))));
        let big = DMatrix::<f64>::zeros(MAX_DENSE_DIM + 1, 1);
        assert!(dense_solve(&DMatrix::identity(MAX_DENSE_DIM + 1, MAX_DENSE_DIM + 1), &big).is_err());
    }

    #[test]
    fn fine_system_residual_at_q4() {
        let (g, _, m, a) = problem(4, true);
        let rhs = m.mul_dense(&DMatrix::from_fn(g.num_nodes(), 1, |i, _| (i as f64).cos())).unwrap();
        let ad = a.to_dense();
        let x = dense_solve(&ad, &rhs).unwrap();
        let res = (&ad * &x - &rhs).norm();
        assert!(res <= 1e-12 * (ad.norm() * x.norm() + rhs.norm()), "{res}");
    }

    #[test]
    fn finest_gamblets_are_mass_inverse() {
        let (_, t, m, a) = problem(2, false);
        let phi = t.measurement(2, &m).unwrap();
        let psi = dense_gamblets(&a, &phi).unwrap();
        let minv = m.to_dense().try_inverse().unwrap();
        assert!((&psi - &minv).amax() <= 1e-9 * minv.amax());
    }

    #[test]
    fn constraints_and_theta_nesting() {
        for rough in [false, true] {
            let (_, t, m, a) = problem(3, rough);
            for k in 1..=3 {
                let phi = t.measurement(k, &m).unwrap();
                let psi = dense_gamblets(&a, &phi).unwrap();
                let c = phi.mul_dense(&psi.transpose()).unwrap();
                let id = DMatrix::<f64>::identity(c.nrows(), c.nrows());
                assert!((c - id).amax() <= 1e-10);
                if k < 3 {
                    let (pi, _) = t.build_pi(k).unwrap();
                    let fine = dense_theta(&a, &t.measurement(k + 1, &m).unwrap()).unwrap();
                    let nested = pi.mul_dense(&pi.mul_dense(&fine).unwrap().transpose()).unwrap();
                    let theta = dense_theta(&a, &phi).unwrap();
                    assert!((&theta - &nested).amax() <= 1e-10 * theta.amax());
                }
            }
        }
    }

    #[test]
    fn gamblet_stiffness_inverts_theta() {
        let (_, t, m, a) = problem(3, true);
        for k in 1..=3 {
            let phi = t.measurement(k, &m).unwrap();
            let psi = dense_gamblets(&a, &phi).unwrap();
            let ak = &psi * a.mul_dense(&psi.transpose()).unwrap();
            let prod = ak * dense_theta(&a, &phi).unwrap();
            let id = DMatrix::<f64>::identity(prod.nrows(), prod.nrows());
            assert!((prod - id).amax() <= 1e-8, "k={k}");
        }
    }

    #[test]
    fn theta_is_rotation_invariant_for_laplacian() {
        let (_, t, m, a) = problem(3, false);
        for k in 1..=3 {
            let theta = dense_theta(&a, &t.measurement(k, &m).unwrap()).unwrap();
            let side = t.side(k);
            let rot = |s: usize| {
                let (x, y) = t.ab(k, s);
                t.index(k, side + 1 - y, x)
            };
            for s in 0..t.len(k) {
                for r in 0..t.len(k) {
                    assert!((theta[(s, r)] - theta[(rot(s), rot(r))]).abs() <= 1e-12 * theta.amax());
                }
            }
        }
    }

    #[test]
    fn path_independence_of_gamblets() {
        // Ψ^(k) obtained by nesting the finer oracle equals the one-shot formula.
        let (_, t, m, a) = problem(3, true);
        for k in 1..3 {
            let direct = dense_gamblets(&a, &t.measurement(k, &m).unwrap()).unwrap();
            let psi_f = dense_gamblets(&a, &t.measurement(k + 1, &m).unwrap()).unwrap();
            let af = &psi_f * a.mul_dense(&psi_f.transpose()).unwrap();
            let (pi, _) = t.build_pi(k).unwrap();
            let coeff = dense_gamblets(&CsrMatrix::from_dense(&symmetric_part(&af), -1.0), &pi).unwrap();
            let nested = coeff * psi_f;
            assert!((&nested - &direct).amax() <= 1e-8 * direct.amax(), "k={k}");
        }
    }
}
