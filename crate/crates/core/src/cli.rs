//! The `gamblet` command line: `solve`, `transform`, `bases` and `report`.
//!
//! Every artifact is named `<stem>_<short hash>.<ext>` and carries the full
//! config hash inside (a comment line or a column).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{PipelineKind, Problem, RunConfig};
use crate::diagnostics::{
    central_decay, coefficient_spectrum, compress, conditioning_table, convergence_table, gram_condition, l2_norm,
    Multiresolution, Raster, Report, Table,
};
use crate::error::{Error, Result};
use crate::exact::{ExactTransform, MultiresSolution};
use crate::fast::{FastTransform, SolveReport};
use crate::fem::energy_norm;
use crate::io::{format_grid_csv, format_pgm, insert_comment};
use crate::sparse::mtx::{format_mtx, Symmetry};
use crate::sparse::{cg_solve, CsrMatrix};

#[derive(Debug, Parser)]
#[command(name = "gamblet", version, about = "Gamblet multiresolution solver for rough-coefficient elliptic problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; every key has a default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created when missing.
    #[arg(long, global = true, default_value = "gamblet-out")]
    pub out: PathBuf,
    /// Worker threads (0: one per core). Overrides `execution.threads`.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transform and solve; writes u, the increments u^(k) - u^(k-1) and a summary.
    Solve,
    /// Build bases and operators only, no right-hand side.
    Transform,
    /// Write ψ_i^(k) and χ_i^(k) on the fine grid.
    Bases {
        #[arg(long)]
        level: u32,
        /// Comma separated aggregate indices.
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<usize>,
    },
    /// Decay, conditioning, spectrum, compression and convergence tables.
    Report,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 for usage or configuration errors,
/// 3 for numerical failures.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("gamblet: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        config.execution.threads = t;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.execution.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let session = Session::new(config, &cli.out)?;
        match &cli.command {
            Command::Solve => cmd_solve(&session),
            Command::Transform => cmd_transform(&session),
            Command::Bases { level, indices } => cmd_bases(&session, *level, indices),
            Command::Report => cmd_report(&session),
        }
    })
}

/// A loaded config, its assembled problem and the output directory.
pub struct Session {
    pub config: RunConfig,
    pub hash: String,
    pub tag: String,
    pub problem: Problem,
    pub out: PathBuf,
}

impl Session {
    pub fn new(config: RunConfig, out: &Path) -> Result<Self> {
        let problem = config.build_problem().map_err(|e| e.in_stage("problem setup"))?;
        std::fs::create_dir_all(out)?;
        Ok(Self { hash: config.hash(), tag: config.short_hash(), config, problem, out: out.to_path_buf() })
    }

    fn file(&self, stem: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{stem}_{}.{ext}", self.tag))
    }

    fn write_text(&self, stem: &str, ext: &str, text: &str) -> Result<PathBuf> {
        let path = self.file(stem, ext);
        std::fs::write(&path, text)?;
        Ok(path)
    }

    fn write_json(&self, stem: &str, value: &Value) -> Result<PathBuf> {
        self.write_text(stem, "json", &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// Nodal field as a CSV grid plus, when asked, linear and log rasters.
    fn write_field(&self, stem: &str, values: &[f64], rasters: bool) -> Result<Vec<PathBuf>> {
        let side = self.problem.grid.n();
        let comment = format!("# config_hash {}", self.hash);
        let mut paths = vec![self.write_text(stem, "csv", &insert_comment(&format_grid_csv(side, values)?, 0, &comment))?];
        if rasters {
            for (suffix, log) in [("", false), ("_log", true)] {
                let pgm = insert_comment(&format_pgm(side, values, log)?, 1, &comment);
                paths.push(self.write_text(&format!("{stem}{suffix}"), "pgm", &pgm)?);
            }
        }
        Ok(paths)
    }

    fn write_mtx(&self, stem: &str, m: &CsrMatrix) -> Result<PathBuf> {
        let mut buf = Vec::new();
        format_mtx(&mut buf, m, Symmetry::General)?;
        let text = String::from_utf8(buf).expect("Matrix Market output is ASCII");
        self.write_text(stem, "mtx", &insert_comment(&text, 1, &format!("% config_hash {}", self.hash)))
    }

    fn metadata(&self) -> Result<Value> {
        let g = &self.problem.grid;
        let a = &self.problem.coefficient;
        // Echo what the hash covers, so the thread count never shows up.
        let mut config = self.config.clone();
        config.execution = Default::default();
        Ok(json!({
            "config_hash": self.hash,
            "config": serde_json::to_value(&config)?,
            "grid": { "q": g.q(), "n": g.n(), "h": g.h(), "unknowns": g.num_nodes() },
            "coefficient": { "lambda_min": a.lambda_min(), "lambda_max": a.lambda_max(), "contrast": a.contrast() },
        }))
    }

    fn build(&self) -> Result<Built> {
        let p = &self.problem;
        match self.config.pipeline.kind {
            PipelineKind::Exact => {
                ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &self.config.exact_options())
                    .map(Built::Exact)
                    .map_err(|e| e.in_stage("exact transform"))
            }
            PipelineKind::Fast => {
                let schedule = self.config.schedule()?;
                FastTransform::build(&p.mass, &p.stiffness, &p.tree, &schedule, &self.config.fast_options())
                    .map(Built::Fast)
                    .map_err(|e| e.in_stage("fast transform"))
            }
        }
    }

    /// Fine-grid CG solution at the reference tolerance.
    fn reference(&self) -> Result<(Vec<f64>, usize)> {
        let p = &self.problem;
        let t = &self.config.tolerances;
        let (u, rep) = cg_solve(&p.stiffness, &p.load.rhs, t.reference, t.max_iter, None)
            .map_err(|e| e.in_stage("reference solve"))?;
        if !rep.converged {
            return Err(Error::NumericalDomain(format!(
                "reference CG stopped at residual {:e} after {} iterations",
                rep.rel_residual, rep.iterations
            ))
            .in_stage("reference solve"));
        }
        Ok((u, rep.iterations))
    }
}

pub enum Built {
    Exact(ExactTransform),
    Fast(FastTransform),
}

impl Built {
    pub fn multires(&self) -> &dyn Multiresolution {
        match self {
            Built::Exact(t) => t,
            Built::Fast(t) => t,
        }
    }

    pub fn solve(&self, problem: &Problem) -> Result<(MultiresSolution, Option<SolveReport>)> {
        match self {
            Built::Exact(t) => t.solve(&problem.load.rhs).map(|s| (s, None)).map_err(|e| e.in_stage("exact solve")),
            Built::Fast(t) => t.solve(&problem.load).map(|(s, r)| (s, Some(r))).map_err(|e| e.in_stage("fast solve")),
        }
    }
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn cmd_solve(s: &Session) -> Result<Vec<PathBuf>> {
    let p = &s.problem;
    let start = Instant::now();
    let built = s.build()?;
    let build_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let (sol, report) = built.solve(p)?;
    let solve_seconds = start.elapsed().as_secs_f64();

    let (u_ref, ref_iterations) = s.reference()?;
    let ref_norm = energy_norm(&p.stiffness, &u_ref)?;
    let err = energy_norm(&p.stiffness, &diff(&sol.u, &u_ref))?;

    let mut written = s.write_field("u", &sol.u, s.config.report.rasters)?;
    for (k, inc) in sol.increments.iter().enumerate() {
        written.extend(s.write_field(&format!("increment_k{}", k + 1), inc, false)?);
    }

    let mut summary = s.metadata()?;
    summary["pipeline"] = json!(s.config.pipeline.kind);
    summary["energy_norm_u"] = json!(energy_norm(&p.stiffness, &sol.u)?);
    summary["reference"] = json!({
        "iterations": ref_iterations,
        "energy_error": err,
        "rel_energy_error": rel(err, ref_norm),
    });
    summary["levels"] = json!(sol.cg);
    summary["seconds"] = json!({ "build": build_seconds, "solve": solve_seconds });

    if let Built::Fast(fast) = &built {
        let complexity = fast.complexity_report(report.as_ref());
        summary["total_flops"] = json!(complexity.total_flops);
        written.push(s.write_json("complexity", &serde_json::to_value(&complexity)?)?);
        if s.config.pipeline.compare_exact {
            let exact = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &s.config.exact_options())
                .and_then(|t| t.solve(&p.load.rhs))
                .map_err(|e| e.in_stage("exact comparison"))?;
            let d = energy_norm(&p.stiffness, &diff(&sol.u, &exact.u))?;
            summary["fast_vs_exact"] = json!({
                "energy_difference": d,
                "rel_energy_difference": rel(d, energy_norm(&p.stiffness, &exact.u)?),
                "epsilon": s.config.pipeline.epsilon,
            });
        }
    }
    written.push(s.write_json("solve", &summary)?);
    Ok(written)
}

fn dense_or_sparse(m: &nalgebra::DMatrix<f64>) -> CsrMatrix {
    CsrMatrix::from_dense(m, 0.0)
}

pub fn cmd_transform(s: &Session) -> Result<Vec<PathBuf>> {
    let built = s.build()?;
    let mut written = Vec::new();
    let mut summary = s.metadata()?;
    summary["pipeline"] = json!(s.config.pipeline.kind);
    summary["tree"] = serde_json::to_value(s.problem.tree.summary())?;
    match &built {
        Built::Exact(t) => {
            summary["identities"] = serde_json::to_value(t.identity_report()?)?;
            summary["mass_inverse"] = serde_json::to_value(&t.mass_stats)?;
            written.push(s.write_mtx("a_k1", &dense_or_sparse(&t.level(1).a))?);
            for k in 2..=t.depth() {
                written.push(s.write_mtx(&format!("b_k{k}"), &dense_or_sparse(&t.subband(k).b))?);
            }
        }
        Built::Fast(t) => {
            let mut c = serde_json::to_value(t.complexity_report(None))?;
            // Wall time stays out of artifacts that are compared byte for byte.
            if let Some(obj) = c.as_object_mut() {
                obj.remove("build_seconds");
                obj.remove("solve_seconds");
            }
            summary["complexity"] = c;
            written.push(s.write_mtx("a_k1", &t.level(1).a)?);
            for k in 2..=t.depth() {
                written.push(s.write_mtx(&format!("b_k{k}"), &t.subband(k).b)?);
            }
        }
    }
    written.push(s.write_json("transform", &summary)?);
    Ok(written)
}

pub fn cmd_bases(s: &Session, level: u32, indices: &[usize]) -> Result<Vec<PathBuf>> {
    let tree = &s.problem.tree;
    let q = tree.depth();
    if level == 0 || level > q {
        return Err(Error::invalid(format!("level {level} outside 1..={q}")));
    }
    let count = tree.len(level);
    if let Some(i) = indices.iter().find(|&&i| i >= count) {
        return Err(Error::invalid(format!("index {i} outside 0..{count} at level {level}")));
    }
    let built = s.build()?;
    let m = built.multires();
    let w = (level >= 2).then(|| tree.build_w(level, s.config.pipeline.variant)).transpose()?;
    let mut written = Vec::new();
    for &i in indices {
        written.extend(s.write_field(&format!("psi_k{level}_i{i}"), &m.gamblet(level, i), true)?);
        if let Some(w) = &w {
            if i < w.nrows() {
                written.extend(s.write_field(&format!("chi_k{level}_j{i}"), &m.chi(level, i, w), true)?);
            }
        }
    }
    Ok(written)
}

/// Refuses an output directory that already holds artifacts of another config.
fn check_out_dir(dir: &Path, tag: &str) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        let Some(stem) = name.rsplit_once('.').map(|(stem, _)| stem) else { continue };
        let Some((_, other)) = stem.rsplit_once('_') else { continue };
        let is_tag = other.len() == tag.len() && other.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase());
        if is_tag && other != tag {
            return Err(Error::Config(format!(
                "{} holds artifacts of config {other} ({name}); refusing to mix them with {tag}",
                dir.display()
            )));
        }
    }
    Ok(())
}

pub fn cmd_report(s: &Session) -> Result<Vec<PathBuf>> {
    check_out_dir(&s.out, &s.tag)?;
    let p = &s.problem;
    let cfg = &s.config;
    let built = s.build()?;
    let t = built.multires();
    let (sol, _) = built.solve(p)?;
    let (u_ref, _) = s.reference()?;

    let mut meta = s.metadata()?;
    meta["pipeline"] = json!(cfg.pipeline.kind);
    if let Built::Fast(f) = &built {
        let c = f.complexity_report(None);
        meta["schedule"] = serde_json::to_value(&c.schedule)?;
    }
    let mut report = Report::new(&s.hash, Value::Null);
    let raster = |name: String, values: Vec<f64>, log: bool| Raster { name, side: p.grid.n(), log, values };

    let mut fits = Vec::new();
    for k in cfg.decay_levels() {
        let d = central_decay(t, &p.grid, &p.coefficient, k).map_err(|e| e.in_stage(format!("decay k={k}")))?;
        let h_k = p.tree.h_k(k);
        let mut table = Table::new(&format!("decay_k{k}"), &["r", "r_over_hk", "fraction"]);
        for (r, f) in d.radii.iter().zip(&d.fractions) {
            table.push(vec![*r, r / h_k, *f]);
        }
        report.tables.push(table);
        fits.push(json!({
            "k": k, "index": d.index, "center": [d.center.0, d.center.1],
            "slope": d.slope, "intercept": d.intercept, "fraction_at_4hk": d.fraction_at(4.0 * h_k),
        }));
        if cfg.report.rasters {
            report.rasters.push(raster(format!("psi_center_k{k}_log"), t.gamblet(k, d.index), true));
        }
    }
    meta["decay"] = json!(fits);

    let mut cond = Table::new("conditioning", &["k", "subband", "lambda_min", "lambda_max", "cond"]);
    for row in conditioning_table(t, cfg.tolerances.eig)? {
        let subband = if row.matrix == "B" { 1.0 } else { 0.0 };
        cond.push(vec![row.k as f64, subband, row.lambda_min, row.lambda_max, row.cond]);
    }
    report.tables.push(cond);
    let mut gram = Table::new("gram", &["k", "cond_wwt"]);
    for k in 2..=p.tree.depth() {
        gram.push(vec![k as f64, gram_condition(&p.tree.build_w(k, cfg.pipeline.variant)?)?]);
    }
    report.tables.push(gram);

    let u_energy = energy_norm(&p.stiffness, &sol.u)?.powi(2);
    let mut energy = Table::new("energy", &["k", "increment_energy", "fraction"]);
    let mut total = 0.0;
    for (k, inc) in sol.increments.iter().enumerate() {
        let e = energy_norm(&p.stiffness, inc)?.powi(2);
        total += e;
        energy.push(vec![(k + 1) as f64, e, rel(e, u_energy)]);
    }
    report.tables.push(energy);
    meta["parseval"] = json!({ "sum_increments": total, "u": u_energy, "rel_gap": rel((total - u_energy).abs(), u_energy) });

    let spectrum = coefficient_spectrum(t, &sol)?;
    let mut global = Table::new("spectrum_global", &["rank", "magnitude"]);
    for (r, c) in spectrum.global.iter().enumerate() {
        global.push(vec![r as f64, *c]);
    }
    report.tables.push(global);
    let mut levels = Table::new("spectrum_levels", &["k", "rank", "magnitude"]);
    for (l, v) in spectrum.levels.iter().enumerate() {
        for (r, c) in v.iter().enumerate() {
            levels.push(vec![(l + 1) as f64, r as f64, *c]);
        }
    }
    report.tables.push(levels);

    let mut comp = Table::new("compression", &["keep_fraction", "kept", "total", "threshold", "rel_error"]);
    let mut smallest: Option<(f64, Vec<f64>)> = None;
    for &f in &cfg.report.keep_fractions {
        let c = compress(t, &sol, &p.stiffness, f)?;
        comp.push(vec![f, c.kept as f64, c.total as f64, c.threshold, c.rel_error]);
        if smallest.as_ref().is_none_or(|(g, _)| f < *g) {
            smallest = Some((f, c.u));
        }
    }
    report.tables.push(comp);

    let g_l2 = l2_norm(&p.mass, &p.load.nodal)?;
    let mut conv = Table::new("convergence", &["k", "error", "rel_error", "bound", "ratio"]);
    for row in convergence_table(&sol, &p.stiffness, &u_ref, p.coefficient.lambda_min(), g_l2)? {
        conv.push(vec![row.k as f64, row.error, row.rel_error, row.bound, row.ratio]);
    }
    report.tables.push(conv);

    if cfg.report.rasters {
        report.rasters.push(raster("u".into(), sol.u.clone(), false));
        if let Some((_, u)) = smallest {
            report.rasters.push(raster("u_compressed".into(), u, false));
        }
    }
    report.metadata = meta;
    report.write(&s.out)
}
