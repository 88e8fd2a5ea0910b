//! Localized gamblet transform.
//!
//! Every gamblet computation is truncated to a patch of level-`k` boxes of
//! radius `ρ_k`: the finest gamblets come from local mass-inverse solves, and
//! each coarse gamblet from a subband system restricted to the `χ`
//! functions whose parent lies near it. All matrices stay sparse, so the cost
//! is `N` times a power of `ln(1/ε)`.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exact::{LevelCg, MultiresSolution};
use crate::grid::LoadVector;
use crate::hierarchy::{IndexTree, WVariant};
use crate::sparse::{cg_solve_with, CgOptions, CgReport, CsrMatrix, LinearOperator};

/// Default `C_ρ`, from the calibration sweep in `examples/calibrate_c_rho.rs`.
pub const DEFAULT_C_RHO: f64 = 0.5;

/// Coarsening ratio of the quadtree.
const H: f64 = 0.5;

/// Localization radii `ρ_k` for `k = 1..=q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSchedule {
    pub epsilon: f64,
    /// `None` when the radii were given explicitly.
    pub c_rho: Option<f64>,
    pub h: f64,
    /// `ρ_k` at index `k - 1`.
    pub rho: Vec<f64>,
}

fn radius_cap(k: u32) -> f64 {
    ((1u64 << k) as f64 - 2.0).max(1.0)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    ensure(epsilon > 0.0 && epsilon < 1.0, || format!("epsilon {epsilon} outside (0, 1)"))
}

impl LocalizationSchedule {
    /// `ρ_k = ⌈C_ρ ((1 + 1/ln(1/H)) k ln(1/H) + ln(1/ε))⌉`, capped where the
    /// patch already covers the whole level.
    pub fn new(epsilon: f64, q: u32, c_rho: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        ensure(c_rho > 0.0 && c_rho.is_finite(), || format!("C_rho must be positive, got {c_rho}"))?;
        ensure(q >= 1, || "schedule needs at least one level".into())?;
        let l = (1.0 / H).ln();
        let rho = (1..=q)
            .map(|k| {
                let raw = c_rho * ((1.0 + 1.0 / l) * k as f64 * l + (1.0 / epsilon).ln());
                raw.ceil().max(1.0).min(radius_cap(k))
            })
            .collect();
        Ok(Self { epsilon, c_rho: Some(c_rho), h: H, rho })
    }

    /// The same radius on every level (capped per level).
    pub fn uniform(q: u32, rho: f64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        ensure(rho >= 1.0 && rho.is_finite(), || format!("radius must be at least 1, got {rho}"))?;
        ensure(q >= 1, || "schedule needs at least one level".into())?;
        let rho = (1..=q).map(|k| rho.min(radius_cap(k))).collect();
        Ok(Self { epsilon, c_rho: None, h: H, rho })
    }

    /// Radii large enough that no truncation happens.
    pub fn covering(q: u32, epsilon: f64) -> Result<Self> {
        Self::uniform(q, radius_cap(q), epsilon)
    }

    pub fn depth(&self) -> u32 {
        self.rho.len() as u32
    }

    pub fn rho(&self, k: u32) -> f64 {
        self.rho[k as usize - 1]
    }

    pub fn index_radius(&self, k: u32) -> usize {
        IndexTree::index_radius(self.rho(k))
    }

    /// Whether `i^{ρ_k}` is all of `𝓘^(k)` for every `i`.
    pub fn covers(&self, k: u32) -> bool {
        self.index_radius(k) + 1 >= 1usize << k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FastOptions {
    pub variant: WVariant,
    /// Use the nodal values of the load as `g^(q)` instead of `Ψ^(q) b`.
    pub load_shortcut: bool,
    /// Inner CG tolerances are these factors times the accuracy targets
    /// `ε/q²` (mass patches), `ε/(k-1)²` (subband patches) and `ε/(2q)`
    /// (subband and coarse solves).
    pub tol_mass_factor: f64,
    pub tol_patch_factor: f64,
    pub tol_subband_factor: f64,
    /// Entries of `A^(k-1)` below this fraction of its largest entry are
    /// dropped.
    pub drop_tolerance: f64,
    /// Solve subband patches in the diagonally scaled form
    /// `(S B S)(S⁻¹ y) = S b`, `S = diag(B)^(-1/2)`.
    pub patch_scaling: bool,
    pub max_iter: usize,
}

impl Default for FastOptions {
    fn default() -> Self {
        Self {
            variant: WVariant::Chain,
            load_shortcut: true,
            tol_mass_factor: 1.0,
            tol_patch_factor: 1.0,
            tol_subband_factor: 1.0,
            drop_tolerance: 1e-14,
            patch_scaling: true,
            max_iter: 50_000,
        }
    }
}

fn clamp_tol(t: f64) -> f64 {
    t.clamp(1e-14, 0.5)
}

impl FastOptions {
    pub fn mass_tol(&self, epsilon: f64, q: u32) -> f64 {
        clamp_tol(self.tol_mass_factor * epsilon / (q * q) as f64)
    }

    pub fn patch_tol(&self, epsilon: f64, k: u32) -> f64 {
        let km = (k.max(2) - 1) as f64;
        clamp_tol(self.tol_patch_factor * epsilon / (km * km))
    }

    pub fn subband_tol(&self, epsilon: f64, q: u32) -> f64 {
        clamp_tol(self.tol_subband_factor * epsilon / (2 * q) as f64)
    }
}

/// Iteration counts of a family of CG solves.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CgStats {
    pub solves: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub max_rel_residual: f64,
    /// Number of solves whose iteration count lies in `[2^j, 2^(j+1))`,
    /// keyed by `2^j` (zero iterations under key 0).
    pub histogram: BTreeMap<usize, usize>,
}

impl CgStats {
    fn record(&mut self, rep: &CgReport) {
        self.solves += 1;
        self.total_iterations += rep.iterations;
        self.max_iterations = self.max_iterations.max(rep.iterations);
        self.max_rel_residual = self.max_rel_residual.max(rep.rel_residual);
        let bucket = match rep.iterations {
            0 => 0,
            it => 1usize << it.ilog2(),
        };
        *self.histogram.entry(bucket).or_default() += 1;
    }
}

/// Floating point operations per line of the algorithm listing.
pub type LineFlops = BTreeMap<String, u64>;

fn add_flops(map: &mut LineFlops, line: &str, flops: u64) {
    *map.entry(line.to_string()).or_default() += flops;
}

/// Localized gamblets of one level.
#[derive(Clone, Debug)]
pub struct LocalGambletLevel {
    pub k: u32,
    /// Row `i`: fine nodal coefficients of `ψ_i^(k),loc`.
    pub psi: CsrMatrix,
    /// `A^(k),loc`.
    pub a: CsrMatrix,
}

/// Operators of the localized step `k -> k-1`.
#[derive(Clone, Debug)]
pub struct LocalSubband {
    pub k: u32,
    pub w: CsrMatrix,
    pub pibar: CsrMatrix,
    /// `B^(k),loc`.
    pub b: CsrMatrix,
    /// `D^(k-1,k),loc`; row `i` is supported on `i^χ`.
    pub dt: CsrMatrix,
    /// `R^(k-1,k),loc`.
    pub r: CsrMatrix,
    pub patches: CgStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerTolerances {
    pub mass: f64,
    /// Subband patch tolerance for `k = 2..=q`.
    pub patch: Vec<f64>,
    pub subband: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleEcho {
    pub epsilon: f64,
    pub c_rho: Option<f64>,
    pub rho: Vec<f64>,
    pub index_radius: Vec<usize>,
    pub tolerances: InnerTolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelStats {
    pub k: u32,
    pub aggregates: usize,
    pub nnz_psi: usize,
    pub max_row_psi: usize,
    pub nnz_a: usize,
    /// Zero at `k = 1`, which has no subband.
    pub nnz_b: usize,
    pub nnz_d: usize,
    pub nnz_r: usize,
    pub patches: CgStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub flops: LineFlops,
    pub cg: Vec<LevelCg>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub q: u32,
    pub unknowns: usize,
    pub schedule: ScheduleEcho,
    pub build_flops: LineFlops,
    pub solve_flops: LineFlops,
    pub total_flops: u64,
    pub mass_patches: CgStats,
    pub levels: Vec<LevelStats>,
    pub solve_cg: Vec<LevelCg>,
    pub build_seconds: f64,
    pub solve_seconds: f64,
}

/// The localized transform: all levels and subband operators.
#[derive(Clone, Debug)]
pub struct FastTransform {
    pub tree: IndexTree,
    pub schedule: LocalizationSchedule,
    pub options: FastOptions,
    /// Index `k - 1` holds level `k`.
    pub levels: Vec<LocalGambletLevel>,
    /// Index `k - 2` holds subband `k`.
    pub subbands: Vec<LocalSubband>,
    pub mass_patches: CgStats,
    pub build_flops: LineFlops,
    pub build_seconds: f64,
}

fn checked_cg<O: LinearOperator + ?Sized>(
    op: &O,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    what: impl FnOnce() -> String,
) -> Result<(Vec<f64>, CgReport)> {
    match cg_solve_with(op, rhs, &CgOptions::new(tol, max_iter)) {
        Ok((x, rep)) if rep.converged => Ok((x, rep)),
        Ok((_, rep)) => Err(Error::NumericalDomain(format!(
            "{}: CG stopped at residual {:e} after {} iterations",
            what(),
            rep.rel_residual,
            rep.iterations
        ))),
        Err(e) => Err(e.in_stage(what())),
    }
}

/// `Ψ^(q),loc`: row `i` solves `M^{i,ρ_q} y = e_i` on the patch `i^{ρ_q}`.
/// Returns the matrix, the patch statistics and the flops spent.
pub fn local_mass_inverse(
    mass: &CsrMatrix,
    tree: &IndexTree,
    rho: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(CsrMatrix, CgStats, u64)> {
    let q = tree.depth();
    let n = mass.nrows();
    ensure(mass.shape() == (n, n) && tree.len(q) == n, || {
        format!("mass matrix {:?} does not match a tree with {} leaves", mass.shape(), tree.len(q))
    })?;
    let rows: Vec<Result<(Vec<usize>, Vec<f64>, CgReport, u64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let patch = tree.neighborhood(q, i, rho);
            let (local, work) = mass.extract_principal_counted(&patch)?;
            let mut e = vec![0.0; patch.len()];
            e[patch.binary_search(&i).expect("patch contains its center")] = 1.0;
            let (y, rep) = checked_cg(&local, &e, tol, max_iter, || format!("mass patch {i}"))?;
            Ok((patch, y, rep, work))
        })
        .collect();
    let mut stats = CgStats::default();
    let mut flops = 0;
    let mut out = Vec::with_capacity(n);
    for row in rows {
        let (cols, vals, rep, work) = row?;
        stats.record(&rep);
        flops += rep.flops + work;
        out.push((cols, vals));
    }
    Ok((CsrMatrix::from_rows(n, out)?, stats, flops))
}

/// Entries of a sorted sparse row at the positions of a sorted index set.
fn gather(cols: &[usize], vals: &[f64], set: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; set.len()];
    let mut j = 0;
    for (&c, &v) in cols.iter().zip(vals) {
        j += set[j..].partition_point(|&s| s < c);
        if j == set.len() {
            break;
        }
        if set[j] == c {
            out[j] = v;
        }
    }
    out
}

/// `S B S` with `S = diag(B)^(-1/2)`, and `S`.
fn diagonal_scaling(b: &CsrMatrix) -> Result<(CsrMatrix, Vec<f64>)> {
    let d = b.diagonal();
    if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!("patch diagonal entry {i} is {:e}", d[i])));
    }
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut data = b.values().to_vec();
    for r in 0..b.nrows() {
        for p in b.indptr()[r]..b.indptr()[r + 1] {
            data[p] *= s[r] * s[b.indices()[p]];
        }
    }
    let scaled = CsrMatrix::from_parts_unchecked(b.nrows(), b.ncols(), b.indptr().to_vec(), b.indices().to_vec(), data);
    Ok((scaled, s))
}

/// One localized step `k -> k-1`: `B^(k),loc`, the patch solves for
/// `D^(k-1,k),loc`, `R^(k-1,k),loc`, `A^(k-1),loc` and `Ψ^(k-1),loc`.
pub fn local_level_step(
    level: &LocalGambletLevel,
    tree: &IndexTree,
    schedule: &LocalizationSchedule,
    opts: &FastOptions,
    flops: &mut LineFlops,
) -> Result<(LocalGambletLevel, LocalSubband)> {
    let k = level.k;
    ensure(k >= 2, || "local_level_step needs k >= 2".into())?;
    let w = tree.build_w(k, opts.variant)?;
    let (_, pibar) = tree.build_pi(k - 1)?;
    let a = &level.a;

    let (b, f) = CsrMatrix::triple_counted(&w, a)?;
    add_flops(flops, "line_7", f);

    // Row i of π̄ A Wᵀ is column i of W A π̄ᵀ.
    let (pa, f1) = pibar.matmul_counted(a)?;
    let (ct, f2) = pa.matmul_counted(&w.transpose())?;
    add_flops(flops, "line_11", f1 + f2);
    let rho = schedule.rho(k - 1);
    let tol = opts.patch_tol(schedule.epsilon, k);
    let rows: Vec<Result<(Vec<usize>, Vec<f64>, CgReport, u64)>> = (0..tree.len(k - 1))
        .into_par_iter()
        .map(|i| {
            let chi = tree.chi_neighborhood(k, i, rho);
            let (local, work) = b.extract_principal_counted(&chi)?;
            let (cols, vals) = ct.row(i);
            let mut rhs = gather(cols, vals, &chi);
            rhs.iter_mut().for_each(|v| *v = -*v);
            let what = || format!("level {k} subband patch {i}");
            if opts.patch_scaling {
                let (scaled, s) = diagonal_scaling(&local)?;
                rhs.iter_mut().zip(&s).for_each(|(v, si)| *v *= si);
                let (mut y, rep) = checked_cg(&scaled, &rhs, tol, opts.max_iter, what)?;
                y.iter_mut().zip(&s).for_each(|(v, si)| *v *= si);
                Ok((chi, y, rep, work + 2 * local.nnz() as u64))
            } else {
                let (y, rep) = checked_cg(&local, &rhs, tol, opts.max_iter, what)?;
                Ok((chi, y, rep, work))
            }
        })
        .collect();
    let mut patches = CgStats::default();
    let mut dt_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let (cols, vals, rep, work) = row?;
        patches.record(&rep);
        add_flops(flops, "line_11", rep.flops + work);
        dt_rows.push((cols, vals));
    }
    let dt = CsrMatrix::from_rows(tree.subband_len(k), dt_rows)?;

    let (dw, f) = dt.matmul_counted(&w)?;
    let r = pibar.add(&dw)?;
    add_flops(flops, "line_12", f + r.nnz() as u64);

    let (a_coarse, f) = CsrMatrix::triple_counted(&r, a)?;
    let a_coarse = a_coarse.drop_below(opts.drop_tolerance * a_coarse.max_abs());
    add_flops(flops, "line_13", f);
    if let Some((i, d)) = a_coarse.diagonal().into_iter().enumerate().find(|(_, d)| !(*d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!("A^({}),loc has diagonal entry {d:e} at {i}", k - 1)));
    }

    let (psi, f) = r.matmul_counted(&level.psi)?;
    add_flops(flops, "line_14", f);
    Ok((
        LocalGambletLevel { k: k - 1, psi, a: a_coarse },
        LocalSubband { k, w, pibar, b, dt, r, patches },
    ))
}

impl FastTransform {
    /// Lines 3 to 14 of the fast algorithm: everything that does not depend
    /// on the load.
    pub fn build(
        mass: &CsrMatrix,
        stiffness: &CsrMatrix,
        tree: &IndexTree,
        schedule: &LocalizationSchedule,
        opts: &FastOptions,
    ) -> Result<Self> {
        let start = Instant::now();
        let q = tree.depth();
        let n = mass.nrows();
        ensure(stiffness.shape() == (n, n), || {
            format!("stiffness {:?} does not match mass {:?}", stiffness.shape(), mass.shape())
        })?;
        ensure(schedule.depth() == q, || {
            format!("schedule has {} levels, tree has {q}", schedule.depth())
        })?;
        let mut flops = LineFlops::new();
        let (psi, mass_patches, f) =
            local_mass_inverse(mass, tree, schedule.rho(q), opts.mass_tol(schedule.epsilon, q), opts.max_iter)
                .map_err(|e| e.in_stage(format!("level {q} local mass inverse")))?;
        add_flops(&mut flops, "line_2a", f);
        add_flops(&mut flops, "line_3", psi.nnz() as u64);
        let (a, f) = CsrMatrix::triple_counted(&psi, stiffness)?;
        add_flops(&mut flops, "line_5", f);

        let mut levels = vec![LocalGambletLevel { k: q, psi, a }];
        let mut subbands = Vec::with_capacity(q as usize - 1);
        for k in (2..=q).rev() {
            let (coarse, sub) = local_level_step(levels.last().unwrap(), tree, schedule, opts, &mut flops)
                .map_err(|e| e.in_stage(format!("localized level step {k} -> {}", k - 1)))?;
            levels.push(coarse);
            subbands.push(sub);
        }
        levels.reverse();
        subbands.reverse();
        Ok(Self {
            tree: *tree,
            schedule: schedule.clone(),
            options: opts.clone(),
            levels,
            subbands,
            mass_patches,
            build_flops: flops,
            build_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn depth(&self) -> u32 {
        self.tree.depth()
    }

    pub fn level(&self, k: u32) -> &LocalGambletLevel {
        &self.levels[k as usize - 1]
    }

    pub fn subband(&self, k: u32) -> &LocalSubband {
        &self.subbands[k as usize - 2]
    }

    /// `χ^(k),loc = W^(k) Ψ^(k),loc`.
    pub fn chi(&self, k: u32) -> Result<CsrMatrix> {
        self.subband(k).w.matmul(&self.level(k).psi)
    }

    /// Lines 4, 8, 10 and 15 to 18: only the load-dependent work, reusing
    /// the stored bases.
    pub fn solve(&self, load: &LoadVector) -> Result<(MultiresSolution, SolveReport)> {
        let start = Instant::now();
        let q = self.depth();
        let finest = self.level(q);
        let n = finest.psi.ncols();
        ensure(load.rhs.len() == n, || format!("rhs length {} for {n} unknowns", load.rhs.len()))?;
        let opts = &self.options;
        let mut flops = LineFlops::new();

        let mut g = vec![Vec::new(); q as usize];
        g[q as usize - 1] = if opts.load_shortcut && load.nodal.len() == n {
            load.nodal.clone()
        } else {
            add_flops(&mut flops, "line_4", 2 * finest.psi.nnz() as u64);
            finest.psi.spmv(&load.rhs)?
        };
        for k in (2..=q).rev() {
            let r = &self.subband(k).r;
            add_flops(&mut flops, "line_15", 2 * r.nnz() as u64);
            g[k as usize - 2] = r.spmv(&g[k as usize - 1])?;
        }

        let tol = opts.subband_tol(self.schedule.epsilon, q);
        let sub_results: Vec<Result<(Vec<f64>, Vec<f64>, LevelCg, u64, u64)>> = (2..=q)
            .into_par_iter()
            .map(|k| {
                let sub = self.subband(k);
                let rhs = sub.w.spmv(&g[k as usize - 1])?;
                let (wk, rep) =
                    checked_cg(&sub.b, &rhs, tol, opts.max_iter, || format!("localized subband solve k = {k}"))?;
                let psi = &self.level(k).psi;
                let inc = psi.transpose_spmv(&sub.w.transpose_spmv(&wk)?)?;
                let cg = LevelCg { level: k, dim: rhs.len(), iterations: rep.iterations, rel_residual: rep.rel_residual, tolerance: tol };
                let f8 = rep.flops + 2 * sub.w.nnz() as u64;
                let f10 = 2 * (sub.w.nnz() + psi.nnz()) as u64;
                Ok((wk, inc, cg, f8, f10))
            })
            .collect();

        let coarse = self.level(1);
        let (u_coarse, rep) = checked_cg(&coarse.a, &g[0], tol, opts.max_iter, || "localized coarse solve".into())?;
        add_flops(&mut flops, "line_16", rep.flops);
        add_flops(&mut flops, "line_17", 2 * coarse.psi.nnz() as u64);
        let mut increments = vec![coarse.psi.transpose_spmv(&u_coarse)?];
        let mut cg = vec![LevelCg { level: 1, dim: u_coarse.len(), iterations: rep.iterations, rel_residual: rep.rel_residual, tolerance: tol }];
        let mut w = Vec::with_capacity(q as usize - 1);
        for res in sub_results {
            let (wk, inc, c, f8, f10) = res?;
            add_flops(&mut flops, "line_8", f8);
            add_flops(&mut flops, "line_10", f10);
            w.push(wk);
            increments.push(inc);
            cg.push(c);
        }
        let mut u = vec![0.0; n];
        for inc in &increments {
            u.iter_mut().zip(inc).for_each(|(x, v)| *x += v);
        }
        add_flops(&mut flops, "line_18", (q as usize * n) as u64);
        let sol = MultiresSolution { u_coarse, w, g, increments, u, cg: cg.clone() };
        Ok((sol, SolveReport { flops, cg, seconds: start.elapsed().as_secs_f64() }))
    }

    pub fn tolerances(&self) -> InnerTolerances {
        let q = self.depth();
        let eps = self.schedule.epsilon;
        InnerTolerances {
            mass: self.options.mass_tol(eps, q),
            patch: (2..=q).map(|k| self.options.patch_tol(eps, k)).collect(),
            subband: self.options.subband_tol(eps, q),
        }
    }

    pub fn complexity_report(&self, solve: Option<&SolveReport>) -> ComplexityReport {
        let q = self.depth();
        let levels = (1..=q)
            .map(|k| {
                let lvl = self.level(k);
                let sub = (k >= 2).then(|| self.subband(k));
                LevelStats {
                    k,
                    aggregates: lvl.psi.nrows(),
                    nnz_psi: lvl.psi.nnz(),
                    max_row_psi: (0..lvl.psi.nrows()).map(|i| lvl.psi.row_nnz(i)).max().unwrap_or(0),
                    nnz_a: lvl.a.nnz(),
                    nnz_b: sub.map_or(0, |s| s.b.nnz()),
                    nnz_d: sub.map_or(0, |s| s.dt.nnz()),
                    nnz_r: sub.map_or(0, |s| s.r.nnz()),
                    patches: sub.map(|s| s.patches.clone()).unwrap_or_default(),
                }
            })
            .collect();
        let solve_flops = solve.map(|s| s.flops.clone()).unwrap_or_default();
        let total_flops = self.build_flops.values().chain(solve_flops.values()).sum();
        ComplexityReport {
            q,
            unknowns: self.level(q).psi.ncols(),
            schedule: ScheduleEcho {
                epsilon: self.schedule.epsilon,
                c_rho: self.schedule.c_rho,
                rho: self.schedule.rho.clone(),
                index_radius: (1..=q).map(|k| self.schedule.index_radius(k)).collect(),
                tolerances: self.tolerances(),
            },
            build_flops: self.build_flops.clone(),
            solve_flops,
            total_flops,
            mass_patches: self.mass_patches.clone(),
            levels,
            solve_cg: solve.map(|s| s.cg.clone()).unwrap_or_default(),
            build_seconds: self.build_seconds,
            solve_seconds: solve.map_or(0.0, |s| s.seconds),
        }
    }
}

/// Builds the localized transform and solves once.
pub fn fast_solve(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    load: &LoadVector,
    tree: &IndexTree,
    schedule: &LocalizationSchedule,
    opts: &FastOptions,
) -> Result<(MultiresSolution, FastTransform, ComplexityReport)> {
    let t = FastTransform::build(mass, stiffness, tree, schedule, opts)?;
    let (sol, rep) = t.solve(load)?;
    let report = t.complexity_report(Some(&rep));
    Ok((sol, t, report))
}
