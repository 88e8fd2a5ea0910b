//! The nine acceptance criteria. Prints one PASS/FAIL line per criterion and
//! exits with status 1 when any fails.
//!
//! `cargo test -p gamblet-acceptance --test acceptance -- 2 5` runs a subset.
//! `UPDATE_GOLDEN=1` rewrites the pinned regression values.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use gamblet::config::{CoefficientSpec, GridConfig, PipelineConfig, PipelineKind, Problem, RunConfig};
use gamblet::diagnostics::{central_decay, compress, conditioning_table, convergence_table, l2_norm, ConditionRow};
use gamblet::exact::{ExactTransform, FinestBasis, MultiresSolution};
use gamblet::fast::{ComplexityReport, FastTransform, LocalizationSchedule};
use gamblet::fem::energy_norm;
use gamblet::oracle::{dense_gamblets, dense_theta};
use gamblet::sparse::{dot, eig_extremes};
use gamblet::{cg_solve, CsrMatrix, WVariant};
use nalgebra::DMatrix;

const EIG_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(q: u32, coefficient: CoefficientSpec, pipeline: PipelineConfig) -> RunConfig {
    RunConfig { grid: GridConfig { q }, coefficient, pipeline, ..RunConfig::default() }
}

fn unit() -> CoefficientSpec {
    CoefficientSpec::Constant { value: 1.0 }
}

fn energy_diff(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
    energy_norm(a, &d).unwrap()
}

fn reference(p: &Problem) -> Vec<f64> {
    let (u, rep) = cg_solve(&p.stiffness, &p.load.rhs, 1e-12, 200_000, None).unwrap();
    assert!(rep.converged, "reference CG did not converge");
    u
}

/// An exact transform with its solve and a fine CG reference.
struct ExactRun {
    hash: String,
    problem: Problem,
    t: ExactTransform,
    sol: MultiresSolution,
    u_ref: Vec<f64>,
    seconds: f64,
}

fn exact_run(cfg: &RunConfig) -> ExactRun {
    let start = Instant::now();
    let problem = cfg.build_problem().unwrap();
    let t = ExactTransform::build(&problem.mass, &problem.stiffness, &problem.tree, &cfg.exact_options()).unwrap();
    let sol = t.solve(&problem.load.rhs).unwrap();
    let u_ref = reference(&problem);
    ExactRun { hash: cfg.hash(), problem, t, sol, u_ref, seconds: start.elapsed().as_secs_f64() }
}

struct FastRun {
    t: FastTransform,
    report: ComplexityReport,
    seconds: f64,
}

fn fast_run(q: u32, epsilon: f64) -> FastRun {
    let pipeline = PipelineConfig { kind: PipelineKind::Fast, epsilon, ..PipelineConfig::default() };
    let cfg = config(q, CoefficientSpec::Example1, pipeline);
    let p = cfg.build_problem().unwrap();
    let start = Instant::now();
    let t = FastTransform::build(&p.mass, &p.stiffness, &p.tree, &cfg.schedule().unwrap(), &cfg.fast_options()).unwrap();
    let (_, solve) = t.solve(&p.load).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let report = t.complexity_report(Some(&solve));
    FastRun { t, report, seconds }
}

/// Runs shared between criteria, built on first use.
#[derive(Default)]
struct Runs {
    example1_q6: OnceCell<ExactRun>,
    unit_ortho: [OnceCell<ExactRun>; 3],
    fast: [OnceCell<FastRun>; 3],
}

impl Runs {
    fn example1_q6(&self) -> &ExactRun {
        self.example1_q6.get_or_init(|| exact_run(&config(6, CoefficientSpec::Example1, PipelineConfig::default())))
    }

    /// a ≡ 1, orthonormal W, `q = 4 + idx`.
    fn unit_ortho(&self, idx: usize) -> &ExactRun {
        self.unit_ortho[idx].get_or_init(|| {
            let pipeline = PipelineConfig { variant: WVariant::Orthonormal, ..PipelineConfig::default() };
            exact_run(&config(4 + idx as u32, unit(), pipeline))
        })
    }

    /// example1 fast pipeline at ε = 1e-3, `q = 5 + idx`.
    fn fast(&self, idx: usize) -> &FastRun {
        self.fast[idx].get_or_init(|| fast_run(5 + idx as u32, 1e-3))
    }
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn golden(name: &str, hash: &str, values: &BTreeMap<String, f64>) -> Result<(), String> {
    gamblet_acceptance::check(&golden_dir(), name, hash, values, 1e-6, gamblet_acceptance::updating())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut rows, mut inv) = (0.0f64, 0.0f64);
    for q in [2, 3] {
        for coefficient in [unit(), CoefficientSpec::Example1] {
            let cfg = config(q, coefficient, PipelineConfig::default());
            let p = cfg.build_problem().unwrap();
            let t = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &cfg.exact_options()).unwrap();
            for k in 1..=q {
                let phi = p.tree.measurement(k, &p.mass).unwrap();
                let psi = dense_gamblets(&p.stiffness, &phi).unwrap();
                for i in 0..psi.nrows() {
                    let want: Vec<f64> = psi.row(i).iter().copied().collect();
                    let got: Vec<f64> = t.level(k).psi.row(i).iter().copied().collect();
                    rows = rows.max(energy_diff(&p.stiffness, &got, &want) / energy_norm(&p.stiffness, &want).unwrap());
                }
                let prod = &t.level(k).a * dense_theta(&p.stiffness, &phi).unwrap();
                inv = inv.max((prod - DMatrix::identity(psi.nrows(), psi.nrows())).amax());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rows <= 1e-8 && inv <= 1e-8 && secs < 60.0,
        format!("max row A-norm gap {rows:.2e}, max |A Θ - I| {inv:.2e} (limits 1e-8), {secs:.1} s"),
    )
}

fn criterion_2(runs: &Runs) -> Outcome {
    let run = runs.example1_q6();
    let start = Instant::now();
    let ids = run.t.identity_report().unwrap();
    let r_pi = ids.iter().map(|i| i.r_pi_dev).fold(0.0, f64::max);
    let orth = ids.iter().map(|i| i.orthogonality).fold(0.0, f64::max);
    let triple = ids.iter().map(|i| i.triple_rel).fold(0.0, f64::max);
    let a = &run.problem.stiffness;
    let incs = &run.sol.increments;
    let norms: Vec<f64> = incs.iter().map(|v| energy_norm(a, v).unwrap()).collect();
    let mut cos = 0.0f64;
    for i in 0..incs.len() {
        let ai = a.spmv(&incs[i]).unwrap();
        for j in 0..i {
            cos = cos.max(dot(&ai, &incs[j]).abs() / (norms[i] * norms[j]));
        }
    }
    let secs = run.seconds + start.elapsed().as_secs_f64();
    outcome(
        r_pi <= 1e-8 && orth <= 1e-8 && triple <= 1e-10 && cos <= 1e-8 && secs < 300.0,
        format!(
            "max|Rπ-I| {r_pi:.2e}, |R A Wᵀ| rel {orth:.2e}, A^(k-1) vs R A Rᵀ rel {triple:.2e}, \
             increment cosines {cos:.2e}, {secs:.1} s"
        ),
    )
}

fn criterion_3(runs: &Runs) -> Outcome {
    let run = runs.example1_q6();
    let p = &run.problem;
    let start = Instant::now();
    let h_ok = (p.grid.h() - 1.0 / 65.0).abs() < 1e-15;
    let contrast = p.coefficient.contrast();
    let contrast_ok = format!("{contrast:.2e}") == format!("{:.2e}", 1866.0);
    let g_l2 = l2_norm(&p.mass, &p.load.nodal).unwrap();
    let rows = convergence_table(&run.sol, &p.stiffness, &run.u_ref, p.coefficient.lambda_min(), g_l2).unwrap();
    let worst_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let last = rows.last().unwrap().rel_error;
    let secs = run.seconds + start.elapsed().as_secs_f64();
    outcome(
        h_ok && contrast_ok && worst_ratio <= 1.0 && last <= 1e-7 && secs < 300.0,
        format!(
            "h = 1/{:.0}, contrast {contrast:.1}, worst error/bound {worst_ratio:.3}, error at k=q {last:.2e}, {secs:.1} s",
            1.0 / p.grid.h()
        ),
    )
}

fn conditions(t: &ExactTransform) -> Vec<ConditionRow> {
    conditioning_table(t, EIG_TOL).unwrap()
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn criterion_4(runs: &Runs) -> (Outcome, String) {
    let mut b_conds = Vec::new();
    let mut fitted = Vec::new();
    for idx in 0..3 {
        let run = runs.unit_ortho(idx);
        let rows = conditions(&run.t);
        b_conds.extend(rows.iter().filter(|r| r.matrix == "B").map(|r| r.cond));
        // Bound shape for A^(1): C · H_1^-2 · λmax(a)/λmin(a).
        let h1 = run.problem.tree.h_k(1);
        fitted.push(rows[0].cond * h1 * h1 / run.problem.coefficient.contrast());
    }
    let ratio = spread(&b_conds);
    let mean = fitted.iter().sum::<f64>() / fitted.len() as f64;
    let stable = fitted.iter().all(|c| (c / mean - 1.0).abs() <= 0.5);

    // The nodal finest basis, for comparison.
    let mut nodal = Vec::new();
    for q in 4..=6 {
        let pipeline = PipelineConfig { variant: WVariant::Orthonormal, finest: FinestBasis::Nodal, ..PipelineConfig::default() };
        let cfg = config(q, unit(), pipeline);
        let p = cfg.build_problem().unwrap();
        let t = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &cfg.exact_options()).unwrap();
        nodal.extend(conditions(&t).iter().filter(|r| r.matrix == "B").map(|r| r.cond));
    }
    let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.2}")).collect::<Vec<_>>().join(" ");
    (
        outcome(
            ratio <= 10.0 && stable,
            format!(
                "Cond(B^(k)) over q=4..6 spread {ratio:.2} (limit 10) [{}]; Cond(A^(1))·H_1² constants [{}] within ±50%: {stable}",
                fmt(&b_conds),
                fmt(&fitted)
            ),
        ),
        format!("nodal finest basis (ψ^(q) = φ): Cond(B^(k)) spread {:.2} [{}]", spread(&nodal), fmt(&nodal)),
    )
}

fn criterion_5(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let unit6 = runs.unit_ortho(2);
    for k in 2..=4 {
        let d = central_decay(&unit6.t, &unit6.problem.grid, &unit6.problem.coefficient, k).unwrap();
        let f = d.fraction_at(4.0 * unit6.problem.tree.h_k(k));
        pass &= d.slope < 0.0 && f < 1e-2;
        parts.push(format!("a≡1 k={k}: slope {:.2}, outside 4H_k {f:.2e}", d.slope));
    }
    let run = runs.example1_q6();
    let mut pinned = BTreeMap::new();
    for k in 2..=4 {
        let d = central_decay(&run.t, &run.problem.grid, &run.problem.coefficient, k).unwrap();
        let f = d.fraction_at(4.0 * run.problem.tree.h_k(k));
        pass &= d.slope < 0.0;
        parts.push(format!("example1 k={k}: slope {:.2}, outside 4H_k {f:.2e}", d.slope));
        pinned.insert(format!("k{k}_slope"), d.slope);
        pinned.insert(format!("k{k}_fraction_4hk"), f);
    }
    if let Err(e) = golden("decay_q6_example1", &run.hash, &pinned) {
        pass = false;
        parts.push(e);
    }
    outcome(pass, parts.join("; "))
}

fn log_linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    gamblet::diagnostics::linear_fit(x, &ly).0
}

fn criterion_6() -> Outcome {
    let cfg = config(5, CoefficientSpec::Example1, PipelineConfig::default());
    let run = exact_run(&cfg);
    let p = &run.problem;
    let norm = energy_norm(&p.stiffness, &run.sol.u).unwrap();
    let rel = |u: &[f64]| energy_diff(&p.stiffness, u, &run.sol.u) / norm;
    let opts = cfg.fast_options();
    let radii = [1.0, 2.0, 3.0, 4.0, 5.0];
    let mut errs = Vec::new();
    for &rho in &radii {
        let s = LocalizationSchedule::uniform(5, rho, 1e-8).unwrap();
        let t = FastTransform::build(&p.mass, &p.stiffness, &p.tree, &s, &opts).unwrap();
        errs.push(rel(&t.solve(&p.load).unwrap().0.u));
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let slope = log_linear_slope(&radii, &errs);
    let s = LocalizationSchedule::new(1e-4, 5, cfg.pipeline.c_rho).unwrap();
    let t = FastTransform::build(&p.mass, &p.stiffness, &p.tree, &s, &opts).unwrap();
    let default_err = rel(&t.solve(&p.load).unwrap().0.u);
    outcome(
        monotone && slope < 0.0 && default_err <= 1e-3,
        format!(
            "uniform ρ=1..5 errors [{}], ln-slope {slope:.3}; default schedule (C_ρ={}, ρ={:?}) error {default_err:.2e} (limit 1e-3)",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" "),
            cfg.pipeline.c_rho,
            s.rho
        ),
    )
}

/// `(k, iterations, bound)` for every subband solve.
fn cg_margins(solves: &[gamblet::exact::LevelCg], conds: &BTreeMap<u32, f64>) -> Vec<(u32, usize, f64)> {
    solves
        .iter()
        .filter_map(|s| {
            let cond = conds.get(&s.level)?;
            Some((s.level, s.iterations, 0.5 * cond.sqrt() * (2.0 / s.tolerance).ln() + 5.0))
        })
        .collect()
}

fn criterion_7(runs: &Runs) -> Outcome {
    let run = runs.example1_q6();
    let exact_conds: BTreeMap<u32, f64> =
        conditions(&run.t).iter().filter(|r| r.matrix == "B").map(|r| (r.k, r.cond)).collect();
    let mut all = cg_margins(&run.sol.cg, &exact_conds);
    let fast = runs.fast(1);
    let fast_conds: BTreeMap<u32, f64> =
        (2..=6).map(|k| (k, eig_extremes(&fast.t.subband(k).b, EIG_TOL).unwrap().cond)).collect();
    let fast_margins = cg_margins(&fast.report.solve_cg, &fast_conds);
    let n_exact = all.len();
    all.extend(fast_margins);
    let pass = all.len() == 10 && all.iter().all(|&(_, it, bound)| it as f64 <= bound);
    let fmt = |v: &[(u32, usize, f64)]| {
        v.iter().map(|(k, it, b)| format!("k={k}: {it}≤{b:.1}")).collect::<Vec<_>>().join(", ")
    };
    outcome(pass, format!("exact [{}]; fast ε=1e-3 [{}]", fmt(&all[..n_exact]), fmt(&all[n_exact..])))
}

fn criterion_8(runs: &Runs) -> Outcome {
    let flops: Vec<f64> = (0..3).map(|i| runs.fast(i).report.total_flops as f64).collect();
    let secs: Vec<f64> = (0..3).map(|i| runs.fast(i).seconds).collect();
    let ratios = [flops[1] / flops[0], flops[2] / flops[1]];
    outcome(
        ratios.iter().all(|&r| r <= 8.0) && secs[2] < 1200.0,
        format!(
            "flops q=5,6,7: {:.3e} {:.3e} {:.3e}; ratios {:.2} {:.2} (limit 8); time {:.0} s {:.0} s {:.0} s",
            flops[0], flops[1], flops[2], ratios[0], ratios[1], secs[0], secs[1], secs[2]
        ),
    )
}

fn criterion_9(runs: &Runs) -> Outcome {
    let run = runs.example1_q6();
    let fractions = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 0.9, 1.0];
    let errs: Vec<f64> = fractions
        .iter()
        .map(|&f| compress(&run.t, &run.sol, &run.problem.stiffness, f).unwrap().rel_error)
        .collect();
    let full_zero = *errs.last().unwrap() == 0.0;
    let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
    let one_pct = errs[1];
    let pinned: BTreeMap<String, f64> = [("keep_0.01_rel_error".to_string(), one_pct)].into();
    let gold = golden("compression_q6_example1", &run.hash, &pinned);
    let mut detail = format!(
        "errors at keep {:?}: [{}]; keep=1 error {:e}; 1% kept error {one_pct:.4e}",
        fractions,
        errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" "),
        errs.last().unwrap()
    );
    if let Err(e) = &gold {
        detail.push_str("; ");
        detail.push_str(e);
    }
    outcome(full_zero && monotone && gold.is_ok(), detail)
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let runs = Runs::default();
    let titles = [
        "oracle equivalence",
        "algebraic identities at q=6",
        "example1 reproduction",
        "uniform conditioning",
        "exponential decay",
        "localization convergence",
        "CG iteration bound",
        "near-linear scaling",
        "compression",
    ];
    let mut failed = Vec::new();
    for n in 1..=9u32 {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let mut note = None;
        let o = match n {
            1 => criterion_1(),
            2 => criterion_2(&runs),
            3 => criterion_3(&runs),
            4 => {
                let (o, info) = criterion_4(&runs);
                note = Some(info);
                o
            }
            5 => criterion_5(&runs),
            6 => criterion_6(),
            7 => criterion_7(&runs),
            8 => criterion_8(&runs),
            _ => criterion_9(&runs),
        };
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} ({}): {verdict} | {} [wall {:.1} s]",
            titles[n as usize - 1],
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if let Some(info) = note {
            println!("criterion {n} info: {info}");
        }
        std::io::stdout().flush().unwrap();
        if !o.pass {
            failed.push(n);
        }
    }
    if gamblet_acceptance::updating() {
        println!("golden files rewritten under {}", golden_dir().display());
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
