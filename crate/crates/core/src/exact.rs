//! Exact gamblet transform and multiresolution solve.
//!
//! The level matrices are stored dense. Levels are processed from the finest
//! (`k = q`) down to `k = 1`; each step forms the subband stiffness
//! `B^(k) = W A^(k) Wᵀ`, the correction `D^(k,k-1) = -B^(k)⁻¹ W A^(k) π̄ᵀ`,
//! the restriction `R^(k-1,k) = π̄ + D^(k-1,k) W` and the next level
//! `A^(k-1) = R A^(k) Rᵀ`, `Ψ^(k-1) = R Ψ^(k)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::hierarchy::{IndexTree, WVariant};
use crate::oracle::symmetric_part;
use crate::sparse::{cg_solve, cg_solve_with, CgOptions, CsrMatrix};

/// How the finest level gamblets are initialized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinestBasis {
    /// `Ψ^(q) = M⁻¹`, so the finest measurements are the nodal basis.
    #[default]
    MassInverse,
    /// `Ψ^(q) = I`: finest gamblets are the nodal functions themselves.
    Nodal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExactOptions {
    pub variant: WVariant,
    pub finest: FinestBasis,
    pub tol_mass: f64,
    pub tol_subband: f64,
    pub max_iter: usize,
    /// Largest tolerated `max|X - Xᵀ| / max|X|` before symmetrization.
    pub symmetry_threshold: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            variant: WVariant::Chain,
            finest: FinestBasis::MassInverse,
            tol_mass: 1e-10,
            tol_subband: 1e-10,
            max_iter: 50_000,
            symmetry_threshold: 1e-12,
        }
    }
}

/// Gamblets of one level: row `i` of `psi` holds the fine nodal
/// coefficients of `ψ_i^(k)`, and `a = Ψ A Ψᵀ`.
#[derive(Clone, Debug)]
pub struct GambletLevel {
    pub k: u32,
    pub psi: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

/// Everything the step from level `k` to `k-1` produces besides the coarse
/// level itself.
#[derive(Clone, Debug)]
pub struct SubbandLevel {
    pub k: u32,
    /// `W^(k)`.
    pub w: CsrMatrix,
    /// `π̄^(k-1,k)`.
    pub pibar: CsrMatrix,
    /// `B^(k)`.
    pub b: DMatrix<f64>,
    /// `D^(k,k-1)`, `|𝓙^(k)| x |𝓘^(k-1)|`.
    pub d: DMatrix<f64>,
    /// `R^(k-1,k)`.
    pub r: DMatrix<f64>,
    /// Relative asymmetry removed from `B^(k)` and `A^(k-1)`.
    pub asymmetry_b: f64,
    pub asymmetry_a: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MassInverseStats {
    pub columns: usize,
    pub max_iterations: usize,
    pub total_iterations: usize,
    pub max_rel_residual: f64,
}

/// The exact transform: all levels and subband operators.
#[derive(Clone, Debug)]
pub struct ExactTransform {
    pub tree: IndexTree,
    pub options: ExactOptions,
    /// Index `k - 1` holds level `k`.
    pub levels: Vec<GambletLevel>,
    /// Index `k - 2` holds subband `k`.
    pub subbands: Vec<SubbandLevel>,
    pub mass_stats: MassInverseStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCg {
    pub level: u32,
    pub dim: usize,
    pub iterations: usize,
    pub rel_residual: f64,
    pub tolerance: f64,
}

/// Result of a multiresolution solve.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiresSolution {
    /// `U^(1)`.
    pub u_coarse: Vec<f64>,
    /// `w^(k)` at index `k - 2`.
    pub w: Vec<Vec<f64>>,
    /// `g^(k)` at index `k - 1`.
    pub g: Vec<Vec<f64>>,
    /// Index 0 holds `u^(1)`, index `k - 1` holds `u^(k) - u^(k-1)`.
    pub increments: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    /// Coarse solve first, then subbands `k = 2..=q`.
    pub cg: Vec<LevelCg>,
}

impl MultiresSolution {
    pub fn depth(&self) -> u32 {
        self.increments.len() as u32
    }

    /// `u^(k) = u^(1) + Σ_{j ≤ k} (u^(j) - u^(j-1))`.
    pub fn partial_sum(&self, k: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.u.len()];
        for inc in &self.increments[..k as usize] {
            out.iter_mut().zip(inc).for_each(|(o, v)| *o += v);
        }
        out
    }
}

fn relative_asymmetry(x: &DMatrix<f64>) -> f64 {
    let scale = x.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (x - x.transpose()).amax() / scale
}

/// Level `q`: `Ψ^(q) = M⁻¹` column by column with CG (or `I` for the nodal
/// shortcut) and `A^(q) = Ψ A Ψᵀ`.
pub fn init_level_q(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    tree: &IndexTree,
    opts: &ExactOptions,
) -> Result<(GambletLevel, MassInverseStats)> {
    let n = mass.nrows();
    let q = tree.depth();
    ensure(mass.shape() == (n, n) && stiffness.shape() == (n, n), || {
        format!("mass {:?} and stiffness {:?} must be square and equal", mass.shape(), stiffness.shape())
    })?;
    ensure(tree.len(q) == n, || format!("tree of depth {q} does not match {n} unknowns"))?;
    match opts.finest {
        FinestBasis::Nodal => {
            let a = symmetric_part(&stiffness.to_dense());
            Ok((GambletLevel { k: q, psi: DMatrix::identity(n, n), a }, MassInverseStats::default()))
        }
        FinestBasis::MassInverse => {
            let columns: Vec<Result<(Vec<f64>, usize, f64)>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    let (x, rep) = cg_solve(mass, &e, opts.tol_mass, opts.max_iter, None)?;
                    if !rep.converged {
                        return Err(Error::NumericalDomain(format!(
                            "mass inverse column {j}: CG stopped at residual {:e}",
                            rep.rel_residual
                        )));
                    }
                    Ok((x, rep.iterations, rep.rel_residual))
                })
                .collect();
            let mut x = DMatrix::zeros(n, n);
            let mut stats = MassInverseStats { columns: n, ..Default::default() };
            for (j, col) in columns.into_iter().enumerate() {
                let (v, it, res) = col?;
                x.column_mut(j).copy_from_slice(&v);
                stats.max_iterations = stats.max_iterations.max(it);
                stats.total_iterations += it;
                stats.max_rel_residual = stats.max_rel_residual.max(res);
            }
            let ax = stiffness.mul_dense(&x)?;
            let psi = x.transpose();
            let a = &psi * ax;
            let asym = relative_asymmetry(&a);
            if asym > opts.symmetry_threshold {
                return Err(Error::SymmetryLoss { level: q as usize, magnitude: asym });
            }
            Ok((GambletLevel { k: q, psi, a: symmetric_part(&a) }, stats))
        }
    }
}

/// One step `k -> k-1` of the transform.
pub fn level_step(
    level: &GambletLevel,
    w: &CsrMatrix,
    pibar: &CsrMatrix,
    opts: &ExactOptions,
) -> Result<(GambletLevel, SubbandLevel)> {
    let k = level.k;
    ensure(k >= 2, || "level_step needs k >= 2".into())?;
    let nk = level.a.nrows();
    ensure(w.ncols() == nk && pibar.ncols() == nk, || {
        format!("W {:?} / π̄ {:?} do not match level size {nk}", w.shape(), pibar.shape())
    })?;
    let a = &level.a;

    let wa = w.mul_dense(a)?;
    let b_raw = w.mul_dense(&wa.transpose())?;
    let asymmetry_b = relative_asymmetry(&b_raw);
    if asymmetry_b > opts.symmetry_threshold {
        return Err(Error::SymmetryLoss { level: k as usize, magnitude: asymmetry_b });
    }
    let b = symmetric_part(&b_raw);
    drop(b_raw);

    // W A π̄ᵀ, using the symmetry of A: A π̄ᵀ = (π̄ A)ᵀ.
    let a_pibar_t = pibar.mul_dense(a)?.transpose();
    let rhs = w.mul_dense(&a_pibar_t)?;
    drop(a_pibar_t);
    let chol = b.clone().cholesky().ok_or_else(|| {
        Error::NotPositiveDefinite(format!("B^({k}) failed Cholesky factorization"))
    })?;
    let mut d = chol.solve(&rhs);
    d.neg_mut();
    drop(chol);

    let mut r = pibar.to_dense();
    r += w.transpose_mul_dense(&d)?.transpose();

    let ra = &r * a;
    let a_coarse = &ra * r.transpose();
    drop(ra);
    let asymmetry_a = relative_asymmetry(&a_coarse);
    if asymmetry_a > opts.symmetry_threshold {
        return Err(Error::SymmetryLoss { level: k as usize - 1, magnitude: asymmetry_a });
    }
    let psi = &r * &level.psi;
    Ok((
        GambletLevel { k: k - 1, psi, a: symmetric_part(&a_coarse) },
        SubbandLevel { k, w: w.clone(), pibar: pibar.clone(), b, d, r, asymmetry_b, asymmetry_a },
    ))
}

/// `A^(1) U^(1) = g^(1)` by CG.
pub fn solve_coarsest(level: &GambletLevel, g: &[f64], opts: &ExactOptions) -> Result<(Vec<f64>, LevelCg)> {
    let (u, rep) = cg_solve_with(&level.a, g, &CgOptions::new(opts.tol_subband, opts.max_iter))?;
    Ok((
        u,
        LevelCg {
            level: level.k,
            dim: g.len(),
            iterations: rep.iterations,
            rel_residual: rep.rel_residual,
            tolerance: opts.tol_subband,
        },
    ))
}

impl ExactTransform {
    /// Runs the whole downward sweep `q -> 1`.
    pub fn build(mass: &CsrMatrix, stiffness: &CsrMatrix, tree: &IndexTree, opts: &ExactOptions) -> Result<Self> {
        let q = tree.depth();
        let (finest, mass_stats) =
            init_level_q(mass, stiffness, tree, opts).map_err(|e| e.in_stage(format!("level {q} initialization")))?;
        let mut levels = vec![finest];
        let mut subbands = Vec::with_capacity(q as usize - 1);
        for k in (2..=q).rev() {
            let stage = |e: Error| e.in_stage(format!("level step {k} -> {}", k - 1));
            let w = tree.build_w(k, opts.variant).map_err(stage)?;
            let (_, pibar) = tree.build_pi(k - 1).map_err(stage)?;
            let (coarse, sub) = level_step(levels.last().unwrap(), &w, &pibar, opts).map_err(stage)?;
            levels.push(coarse);
            subbands.push(sub);
        }
        levels.reverse();
        subbands.reverse();
        Ok(Self { tree: *tree, options: opts.clone(), levels, subbands, mass_stats })
    }

    pub fn depth(&self) -> u32 {
        self.tree.depth()
    }

    pub fn level(&self, k: u32) -> &GambletLevel {
        &self.levels[k as usize - 1]
    }

    pub fn subband(&self, k: u32) -> &SubbandLevel {
        &self.subbands[k as usize - 2]
    }

    /// `χ^(k) = W^(k) Ψ^(k)`, one row per subband basis function.
    pub fn chi(&self, k: u32) -> Result<DMatrix<f64>> {
        self.subband(k).w.mul_dense(&self.level(k).psi)
    }

    /// Multiresolution solve for the right-hand side `b = M g` (fine load
    /// moments against the nodal basis).
    pub fn solve(&self, b: &[f64]) -> Result<MultiresSolution> {
        let q = self.depth();
        let finest = self.level(q);
        ensure(b.len() == finest.psi.ncols(), || {
            format!("rhs length {} for {} unknowns", b.len(), finest.psi.ncols())
        })?;
        let opts = &self.options;
        let mut g = vec![Vec::new(); q as usize];
        g[q as usize - 1] = match opts.finest {
            FinestBasis::Nodal => b.to_vec(),
            FinestBasis::MassInverse => mat_vec(&finest.psi, b),
        };
        for k in (2..=q).rev() {
            let gk = mat_vec(&self.subband(k).r, &g[k as usize - 1]);
            g[k as usize - 2] = gk;
        }

        // Subband systems are independent once g^(k) are known.
        let sub_results: Vec<Result<(Vec<f64>, Vec<f64>, LevelCg)>> = (2..=q)
            .into_par_iter()
            .map(|k| {
                let sub = self.subband(k);
                let rhs = sub.w.spmv(&g[k as usize - 1])?;
                let (wk, rep) = cg_solve_with(&sub.b, &rhs, &CgOptions::new(opts.tol_subband, opts.max_iter))
                    .map_err(|e| e.in_stage(format!("subband solve k = {k}")))?;
                let coeff = sub.w.transpose_spmv(&wk)?;
                let inc = mat_tr_vec(&self.level(k).psi, &coeff);
                let cg = LevelCg {
                    level: k,
                    dim: rhs.len(),
                    iterations: rep.iterations,
                    rel_residual: rep.rel_residual,
                    tolerance: opts.tol_subband,
                };
                Ok((wk, inc, cg))
            })
            .collect();

        let coarse = self.level(1);
        let (u_coarse, coarse_cg) =
            solve_coarsest(coarse, &g[0], opts).map_err(|e| e.in_stage("coarse solve"))?;
        let mut increments = vec![mat_tr_vec(&coarse.psi, &u_coarse)];
        let mut w = Vec::with_capacity(q as usize - 1);
        let mut cg = vec![coarse_cg];
        for res in sub_results {
            let (wk, inc, c) = res?;
            w.push(wk);
            increments.push(inc);
            cg.push(c);
        }
        let mut u = vec![0.0; b.len()];
        for inc in &increments {
            u.iter_mut().zip(inc).for_each(|(x, v)| *x += v);
        }
        Ok(MultiresSolution { u_coarse, w, g, increments, u, cg })
    }

    /// Per-level residuals of the algebraic identities the transform must
    /// satisfy.
    pub fn identity_report(&self) -> Result<Vec<LevelIdentities>> {
        let mut out = Vec::new();
        for sub in &self.subbands {
            let k = sub.k;
            let a = &self.level(k).a;
            // R π^(k,k-1) with π = 4 π̄.
            let r_pi = sub.pibar.mul_dense(&sub.r.transpose())?.transpose() * 4.0;
            let id = DMatrix::<f64>::identity(r_pi.nrows(), r_pi.ncols());
            let r_pi_dev = (r_pi - id).amax();
            let ra = &sub.r * a;
            let coupling = sub.w.mul_dense(&ra.transpose())?;
            let uncorrected = sub.w.mul_dense(&sub.pibar.mul_dense(a)?.transpose())?;
            let orthogonality = coupling.norm() / uncorrected.norm().max(f64::MIN_POSITIVE);
            let triple = &ra * sub.r.transpose();
            let coarse = &self.level(k - 1).a;
            let triple_rel = (coarse - triple).norm() / coarse.norm();
            out.push(LevelIdentities { k, r_pi_dev, orthogonality, triple_rel, asymmetry_b: sub.asymmetry_b, asymmetry_a: sub.asymmetry_a });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelIdentities {
    pub k: u32,
    /// `max |R^(k-1,k) π^(k,k-1) - I|`.
    pub r_pi_dev: f64,
    /// `‖W A Rᵀ‖_F / ‖W A π̄ᵀ‖_F`.
    pub orthogonality: f64,
    /// `‖A^(k-1) - R A Rᵀ‖_F / ‖A^(k-1)‖_F`.
    pub triple_rel: f64,
    pub asymmetry_b: f64,
    pub asymmetry_a: f64,
}

/// Builds the transform and solves in one call.
pub fn exact_solve(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    b: &[f64],
    tree: &IndexTree,
    opts: &ExactOptions,
) -> Result<(MultiresSolution, ExactTransform)> {
    let t = ExactTransform::build(mass, stiffness, tree, opts)?;
    let sol = t.solve(b)?;
    Ok((sol, t))
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let xv = nalgebra::DVectorView::from_slice(x, m.ncols());
    (m * xv).as_slice().to_vec()
}

pub(crate) fn mat_tr_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let xv = nalgebra::DVectorView::from_slice(x, m.nrows());
    m.tr_mul(&xv).as_slice().to_vec()
}
