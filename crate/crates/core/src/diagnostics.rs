//! Tables that summarize a transform and a solve: gamblet decay, level
//! conditioning, coefficient spectra, compression and convergence.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{ensure, Result};
use crate::exact::{mat_tr_vec, ExactTransform, MultiresSolution};
use crate::fast::FastTransform;
use crate::fem::{cell_energies, energy_norm};
use crate::grid::{CoefficientField, Grid};
use crate::hierarchy::IndexTree;
use crate::io::{format_pgm, format_table_csv, insert_comment};
use crate::sparse::{dot, eig_extremes, CsrMatrix, EigEstimate, LinearOperator};

/// What the diagnostics need from a transform, exact or localized.
pub trait Multiresolution {
    fn tree(&self) -> &IndexTree;
    fn coarse_operator(&self) -> &dyn LinearOperator;
    fn subband_operator(&self, k: u32) -> &dyn LinearOperator;
    /// Fine nodal coefficients of `ψ_i^(k)`.
    fn gamblet(&self, k: u32, i: usize) -> Vec<f64>;
    /// `Ψ^(1)ᵀ U + Σ_k Ψ^(k)ᵀ W^(k)ᵀ w^(k)`.
    fn synthesize(&self, u_coarse: &[f64], w: &[Vec<f64>]) -> Result<Vec<f64>>;
    /// `‖ψ_i^(1)‖_a`, the square roots of the diagonal of `A^(1)`.
    fn coarse_norms(&self) -> Vec<f64>;
    /// `‖χ_j^(k)‖_a`, the square roots of the diagonal of `B^(k)`.
    fn subband_norms(&self, k: u32) -> Vec<f64>;

    fn depth(&self) -> u32 {
        self.tree().depth()
    }

    /// `χ_j^(k) = Σ_i W_ji ψ_i^(k)`.
    fn chi(&self, k: u32, j: usize, w: &CsrMatrix) -> Vec<f64> {
        let (cols, vals) = w.row(j);
        let mut out: Vec<f64> = Vec::new();
        for (&i, &c) in cols.iter().zip(vals) {
            let psi = self.gamblet(k, i);
            if out.is_empty() {
                out = vec![0.0; psi.len()];
            }
            out.iter_mut().zip(&psi).for_each(|(o, p)| *o += c * p);
        }
        out
    }
}

fn sqrt_all(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0).sqrt()).collect()
}

impl Multiresolution for ExactTransform {
    fn tree(&self) -> &IndexTree {
        &self.tree
    }

    fn coarse_operator(&self) -> &dyn LinearOperator {
        &self.level(1).a
    }

    fn subband_operator(&self, k: u32) -> &dyn LinearOperator {
        &self.subband(k).b
    }

    fn gamblet(&self, k: u32, i: usize) -> Vec<f64> {
        self.level(k).psi.row(i).iter().copied().collect()
    }

    fn synthesize(&self, u_coarse: &[f64], w: &[Vec<f64>]) -> Result<Vec<f64>> {
        ensure(w.len() + 1 == self.depth() as usize, || format!("{} subband vectors for depth {}", w.len(), self.depth()))?;
        let mut u = mat_tr_vec(&self.level(1).psi, u_coarse);
        for (idx, wk) in w.iter().enumerate() {
            let k = idx as u32 + 2;
            let coeff = self.subband(k).w.transpose_spmv(wk)?;
            let inc = mat_tr_vec(&self.level(k).psi, &coeff);
            u.iter_mut().zip(&inc).for_each(|(x, v)| *x += v);
        }
        Ok(u)
    }

    fn coarse_norms(&self) -> Vec<f64> {
        sqrt_all(self.level(1).a.diagonal().iter().copied().collect())
    }

    fn subband_norms(&self, k: u32) -> Vec<f64> {
        sqrt_all(self.subband(k).b.diagonal().iter().copied().collect())
    }
}

impl Multiresolution for FastTransform {
    fn tree(&self) -> &IndexTree {
        &self.tree
    }

    fn coarse_operator(&self) -> &dyn LinearOperator {
        &self.level(1).a
    }

    fn subband_operator(&self, k: u32) -> &dyn LinearOperator {
        &self.subband(k).b
    }

    fn gamblet(&self, k: u32, i: usize) -> Vec<f64> {
        let psi = &self.level(k).psi;
        let mut out = vec![0.0; psi.ncols()];
        let (cols, vals) = psi.row(i);
        cols.iter().zip(vals).for_each(|(&c, &v)| out[c] = v);
        out
    }

    fn synthesize(&self, u_coarse: &[f64], w: &[Vec<f64>]) -> Result<Vec<f64>> {
        ensure(w.len() + 1 == self.depth() as usize, || format!("{} subband vectors for depth {}", w.len(), self.depth()))?;
        let mut u = self.level(1).psi.transpose_spmv(u_coarse)?;
        for (idx, wk) in w.iter().enumerate() {
            let k = idx as u32 + 2;
            let inc = self.level(k).psi.transpose_spmv(&self.subband(k).w.transpose_spmv(wk)?)?;
            u.iter_mut().zip(&inc).for_each(|(x, v)| *x += v);
        }
        Ok(u)
    }

    fn coarse_norms(&self) -> Vec<f64> {
        sqrt_all(self.level(1).a.diagonal())
    }

    fn subband_norms(&self, k: u32) -> Vec<f64> {
        sqrt_all(self.subband(k).b.diagonal())
    }
}

/// Index of the aggregate at the middle of level `k`.
pub fn central_index(tree: &IndexTree, k: u32) -> usize {
    let m = (tree.side(k) / 2).max(1);
    tree.index(k, m, m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayProfile {
    pub k: u32,
    pub index: usize,
    pub center: (f64, f64),
    pub radii: Vec<f64>,
    /// Energy fraction of cells whose center lies at distance `>= r`.
    pub fractions: Vec<f64>,
    /// Least squares fit `ln(fraction) ≈ intercept + slope·r` over the
    /// positive radii with a fraction above `1e-15`.
    pub slope: f64,
    pub intercept: f64,
}

impl DecayProfile {
    /// Linear interpolation of the fraction at radius `r`.
    pub fn fraction_at(&self, r: f64) -> f64 {
        let i = self.radii.partition_point(|&x| x <= r);
        if i == 0 {
            return 1.0;
        }
        if i == self.radii.len() {
            return *self.fractions.last().unwrap();
        }
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let t = (r - r0) / (r1 - r0);
        self.fractions[i - 1] * (1.0 - t) + self.fractions[i] * t
    }
}

/// Least squares line through `(x, y)`; `(NaN, NaN)` with fewer than two
/// distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Energy of `ψ` outside balls of growing radius around `center`.
pub fn decay_profile(
    grid: &Grid,
    coefficient: &CoefficientField,
    psi: &[f64],
    center: (f64, f64),
    radii: &[f64],
) -> Result<DecayProfile> {
    ensure(psi.len() == grid.num_nodes(), || format!("gamblet has {} entries for {} nodes", psi.len(), grid.num_nodes()))?;
    ensure(radii.windows(2).all(|w| w[0] < w[1]) && radii.iter().all(|&r| r >= 0.0), || {
        "radii must be nonnegative and increasing".into()
    })?;
    let energies = cell_energies(grid, coefficient, psi);
    let m = grid.cells_per_dim();
    let h = grid.h();
    let mut by_distance: Vec<(f64, f64)> = (0..m * m)
        .map(|c| {
            let (ci, cj) = (c % m, c / m);
            let dx = (ci as f64 + 0.5) * h - center.0;
            let dy = (cj as f64 + 0.5) * h - center.1;
            ((dx * dx + dy * dy).sqrt(), energies[c])
        })
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Suffix sums give the energy at distance >= r.
    let mut suffix = vec![0.0; by_distance.len() + 1];
    for i in (0..by_distance.len()).rev() {
        suffix[i] = suffix[i + 1] + by_distance[i].1;
    }
    let total = suffix[0];
    let fractions: Vec<f64> = radii
        .iter()
        .map(|&r| {
            if total == 0.0 {
                return 0.0;
            }
            let first_outside = by_distance.partition_point(|e| e.0 < r);
            (suffix[first_outside] / total).clamp(0.0, 1.0)
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&fractions)
        .filter(|(&r, &f)| r > 0.0 && f > 1e-15)
        .map(|(&r, &f)| (r, f.ln()))
        .unzip();
    let (slope, intercept) = linear_fit(&xs, &ys);
    Ok(DecayProfile { k: 0, index: 0, center, radii: radii.to_vec(), fractions, slope, intercept })
}

/// Decay profile of the central gamblet of level `k`, radii in steps of
/// `H_k / 2` up to the diameter of the domain.
pub fn central_decay<T: Multiresolution + ?Sized>(
    t: &T,
    grid: &Grid,
    coefficient: &CoefficientField,
    k: u32,
) -> Result<DecayProfile> {
    let tree = t.tree();
    let i = central_index(tree, k);
    let step = 0.5 * tree.h_k(k);
    let radii: Vec<f64> = (0..).map(|j| j as f64 * step).take_while(|&r| r <= 2f64.sqrt() + step).collect();
    let mut p = decay_profile(grid, coefficient, &t.gamblet(k, i), tree.center(k, i), &radii)?;
    p.k = k;
    p.index = i;
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionRow {
    /// `"A"` for `A^(1)`, `"B"` for `B^(k)`.
    pub matrix: String,
    pub k: u32,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub cond: f64,
}

fn condition_row(matrix: &str, k: u32, e: EigEstimate) -> ConditionRow {
    ConditionRow { matrix: matrix.into(), k, lambda_min: e.lambda_min, lambda_max: e.lambda_max, cond: e.cond }
}

/// Extreme eigenvalues of `A^(1)` and of every `B^(k)`.
pub fn conditioning_table<T: Multiresolution + ?Sized>(t: &T, tol: f64) -> Result<Vec<ConditionRow>> {
    let mut rows = vec![condition_row("A", 1, eig_extremes(t.coarse_operator(), tol)?)];
    for k in 2..=t.depth() {
        let e = eig_extremes(t.subband_operator(k), tol).map_err(|e| e.in_stage(format!("conditioning of B^({k})")))?;
        rows.push(condition_row("B", k, e));
    }
    Ok(rows)
}

/// Condition number of `W Wᵀ`.
pub fn gram_condition(w: &CsrMatrix) -> Result<f64> {
    let wt = w.transpose();
    let gram = w.matmul(&wt)?.to_dense();
    let ev = gram.symmetric_eigenvalues();
    Ok(ev.max() / ev.min())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientSpectrum {
    /// Level `k` at index `k - 1`: `|U_i|·‖ψ_i^(1)‖_a` for `k = 1`,
    /// `|w_j|·‖χ_j^(k)‖_a` above, sorted in decreasing order.
    pub levels: Vec<Vec<f64>>,
    /// All levels merged, decreasing.
    pub global: Vec<f64>,
}

fn normalized_coefficients<T: Multiresolution + ?Sized>(t: &T, sol: &MultiresSolution) -> Result<Vec<Vec<f64>>> {
    ensure(sol.depth() == t.depth(), || format!("solution depth {} for transform depth {}", sol.depth(), t.depth()))?;
    let mut out = vec![sol.u_coarse.iter().zip(t.coarse_norms()).map(|(u, n)| u * n).collect::<Vec<f64>>()];
    for k in 2..=t.depth() {
        let w = &sol.w[k as usize - 2];
        out.push(w.iter().zip(t.subband_norms(k)).map(|(x, n)| x * n).collect());
    }
    Ok(out)
}

pub fn coefficient_spectrum<T: Multiresolution + ?Sized>(t: &T, sol: &MultiresSolution) -> Result<CoefficientSpectrum> {
    let desc = |v: &mut Vec<f64>| v.sort_by(|a, b| b.total_cmp(a));
    let mut levels: Vec<Vec<f64>> = normalized_coefficients(t, sol)?
        .into_iter()
        .map(|v| v.into_iter().map(f64::abs).collect())
        .collect();
    levels.iter_mut().for_each(desc);
    let mut global: Vec<f64> = levels.iter().flatten().copied().collect();
    desc(&mut global);
    Ok(CoefficientSpectrum { levels, global })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Compression {
    pub keep_fraction: f64,
    pub kept: usize,
    pub total: usize,
    /// Smallest normalized magnitude kept.
    pub threshold: f64,
    pub rel_error: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
}

/// Keeps the largest `keep_fraction` of the normalized coefficients and
/// reports the relative energy error of the reconstruction.
pub fn compress<T: Multiresolution + ?Sized>(
    t: &T,
    sol: &MultiresSolution,
    stiffness: &CsrMatrix,
    keep_fraction: f64,
) -> Result<Compression> {
    ensure(keep_fraction > 0.0 && keep_fraction <= 1.0, || format!("keep_fraction {keep_fraction} outside (0, 1]"))?;
    let coeffs = normalized_coefficients(t, sol)?;
    let mut ranked: Vec<(f64, usize, usize)> = coeffs
        .iter()
        .enumerate()
        .flat_map(|(l, v)| v.iter().enumerate().map(move |(i, c)| (c.abs(), l, i)))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let total = ranked.len();
    let kept = ((keep_fraction * total as f64).ceil() as usize).clamp(1, total);
    let mut u_coarse = vec![0.0; sol.u_coarse.len()];
    let mut w: Vec<Vec<f64>> = sol.w.iter().map(|x| vec![0.0; x.len()]).collect();
    for &(_, l, i) in &ranked[..kept] {
        if l == 0 {
            u_coarse[i] = sol.u_coarse[i];
        } else {
            w[l - 1][i] = sol.w[l - 1][i];
        }
    }
    let full = t.synthesize(&sol.u_coarse, &sol.w)?;
    let u = t.synthesize(&u_coarse, &w)?;
    let diff: Vec<f64> = full.iter().zip(&u).map(|(a, b)| a - b).collect();
    let norm = energy_norm(stiffness, &full)?;
    let rel_error = if norm > 0.0 { energy_norm(stiffness, &diff)? / norm } else { 0.0 };
    Ok(Compression { keep_fraction, kept, total, threshold: ranked[kept - 1].0, rel_error, u })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k: u32,
    /// `‖u_ref - u^(k)‖_A`.
    pub error: f64,
    pub rel_error: f64,
    /// `2/(π √λ_min(a)) · H_k · ‖g‖_{L²}`.
    pub bound: f64,
    pub ratio: f64,
}

/// `‖g‖_{L²} = √(gᵀ M g)` for nodal values `g`.
pub fn l2_norm(mass: &CsrMatrix, g: &[f64]) -> Result<f64> {
    Ok(dot(g, &mass.spmv(g)?).max(0.0).sqrt())
}

/// Energy error of every partial sum `u^(k)` against a reference solution.
pub fn convergence_table(
    sol: &MultiresSolution,
    stiffness: &CsrMatrix,
    u_ref: &[f64],
    lambda_min: f64,
    g_l2: f64,
) -> Result<Vec<ConvergenceRow>> {
    ensure(u_ref.len() == sol.u.len(), || "reference and solution lengths differ".into())?;
    ensure(lambda_min > 0.0, || format!("λ_min(a) = {lambda_min} must be positive"))?;
    let ref_norm = energy_norm(stiffness, u_ref)?;
    let mut rows = Vec::new();
    for k in 1..=sol.depth() {
        let uk = sol.partial_sum(k);
        let diff: Vec<f64> = u_ref.iter().zip(&uk).map(|(a, b)| a - b).collect();
        let error = energy_norm(stiffness, &diff)?;
        let bound = 2.0 / (std::f64::consts::PI * lambda_min.sqrt()) * 0.5f64.powi(k as i32) * g_l2;
        rows.push(ConvergenceRow {
            k,
            error,
            rel_error: if ref_norm > 0.0 { error / ref_norm } else { error },
            bound,
            ratio: if bound > 0.0 { error / bound } else { f64::INFINITY },
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Raster {
    pub name: String,
    pub side: usize,
    pub log: bool,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// A named collection of tables and rasters from one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub metadata: serde_json::Value,
    pub tables: Vec<Table>,
    pub rasters: Vec<Raster>,
}

impl Report {
    pub fn new(config_hash: &str, metadata: serde_json::Value) -> Self {
        Self { config_hash: config_hash.into(), metadata, tables: Vec::new(), rasters: Vec::new() }
    }

    fn tag(&self) -> &str {
        &self.config_hash[..self.config_hash.len().min(12)]
    }

    /// Writes `<table>_<hash>.csv`, `<raster>_<hash>.pgm` and
    /// `report_<hash>.json`; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let tag = self.tag();
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}_{tag}.csv", t.name));
            std::fs::write(&path, format_table_csv(&t.columns, &t.rows, &self.config_hash)?)?;
            written.push(path);
        }
        for r in &self.rasters {
            let path = dir.join(format!("{}_{tag}.pgm", r.name));
            let pgm = format_pgm(r.side, &r.values, r.log)?;
            std::fs::write(&path, insert_comment(&pgm, 1, &format!("# config_hash {}", self.config_hash)))?;
            written.push(path);
        }
        let path = dir.join(format!("report_{tag}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        written.push(path);
        Ok(written)
    }
}
