//! Run configuration (TOML) and problem setup.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{ExactOptions, FinestBasis};
use crate::fast::{FastOptions, LocalizationSchedule, DEFAULT_C_RHO};
use crate::fem::{assemble_load, assemble_mass, assemble_stiffness};
use crate::grid::{example1_load, CoefficientField, Grid, LoadVector};
use crate::hierarchy::{IndexTree, WVariant};
use crate::io::read_grid_csv;
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub coefficient: CoefficientSpec,
    pub load: LoadSpec,
    pub pipeline: PipelineConfig,
    pub tolerances: Tolerances,
    pub report: ReportConfig,
    pub execution: ExecutionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            coefficient: CoefficientSpec::Example1,
            load: LoadSpec::Example1,
            pipeline: PipelineConfig::default(),
            tolerances: Tolerances::default(),
            report: ReportConfig::default(),
            execution: ExecutionConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub q: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { q: 4 }
    }
}

/// Cellwise coefficient `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Example1,
    Constant { value: f64 },
    Checkerboard { contrast: f64, seed: u64 },
    /// `(n+1) x (n+1)` cell values, bottom row first.
    Csv { path: PathBuf },
}

/// Nodal values of the load `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSpec {
    Example1,
    Constant { value: f64 },
    /// `n x n` nodal values, bottom row first.
    Csv { path: PathBuf },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    #[default]
    Exact,
    Fast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub kind: PipelineKind,
    pub variant: WVariant,
    pub finest: FinestBasis,
    pub epsilon: f64,
    pub c_rho: f64,
    /// Fast runs also build the exact transform and report the difference.
    pub compare_exact: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kind: PipelineKind::Exact,
            variant: WVariant::Chain,
            finest: FinestBasis::MassInverse,
            epsilon: 1e-4,
            c_rho: DEFAULT_C_RHO,
            compare_exact: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub mass: f64,
    pub subband: f64,
    pub mass_factor: f64,
    pub patch_factor: f64,
    pub subband_factor: f64,
    pub drop: f64,
    pub patch_scaling: bool,
    pub eig: f64,
    pub reference: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let e = ExactOptions::default();
        let f = FastOptions::default();
        Self {
            mass: e.tol_mass,
            subband: e.tol_subband,
            mass_factor: f.tol_mass_factor,
            patch_factor: f.tol_patch_factor,
            subband_factor: f.tol_subband_factor,
            drop: f.drop_tolerance,
            patch_scaling: f.patch_scaling,
            eig: 1e-4,
            reference: 1e-12,
            max_iter: e.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Levels whose central gamblet gets a decay profile; empty picks
    /// `2..=min(q, 4)`.
    pub decay_levels: Vec<u32>,
    pub keep_fractions: Vec<f64>,
    pub rasters: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { decay_levels: Vec::new(), keep_fractions: vec![0.01, 0.05, 0.1, 0.25, 0.5, 1.0], rasters: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionConfig {
    /// Worker threads, 0 for one per core.
    pub threads: usize,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative CSV paths are resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let CoefficientSpec::Csv { path } = &mut cfg.coefficient {
            resolve(path);
        }
        if let LoadSpec::Csv { path } = &mut cfg.load {
            resolve(path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.grid.q;
        if !(1..=crate::grid::DEFAULT_MAX_Q).contains(&q) {
            return Err(config_err(format!("grid.q = {q} outside 1..={}", crate::grid::DEFAULT_MAX_Q)));
        }
        let p = &self.pipeline;
        if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
            return Err(config_err(format!("pipeline.epsilon = {} outside (0, 1)", p.epsilon)));
        }
        if !(p.c_rho > 0.0 && p.c_rho.is_finite()) {
            return Err(config_err(format!("pipeline.c_rho = {} must be positive", p.c_rho)));
        }
        let t = &self.tolerances;
        for (name, v) in [("mass", t.mass), ("subband", t.subband), ("eig", t.eig), ("reference", t.reference)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(config_err(format!("tolerances.{name} = {v} outside (0, 1)")));
            }
        }
        for (name, v) in [("mass_factor", t.mass_factor), ("patch_factor", t.patch_factor), ("subband_factor", t.subband_factor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("tolerances.{name} = {v} must be positive")));
            }
        }
        if !(t.drop >= 0.0 && t.drop < 1.0) || t.max_iter == 0 {
            return Err(config_err("tolerances.drop must lie in [0, 1) and max_iter be positive"));
        }
        if let Some(k) = self.report.decay_levels.iter().find(|&&k| k == 0 || k > q) {
            return Err(config_err(format!("report.decay_levels contains {k}, outside 1..={q}")));
        }
        if let Some(f) = self.report.keep_fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
            return Err(config_err(format!("report.keep_fractions contains {f}, outside (0, 1]")));
        }
        match self.coefficient {
            CoefficientSpec::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                Err(config_err(format!("coefficient value {value} must be positive")))
            }
            CoefficientSpec::Checkerboard { contrast, .. } if !(contrast >= 1.0 && contrast.is_finite()) => {
                Err(config_err(format!("checkerboard contrast {contrast} must be at least 1")))
            }
            _ => Ok(()),
        }
    }

    /// Canonical TOML: every field written out, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML, hex encoded. The thread count is left
    /// out: results do not depend on it.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.execution = ExecutionConfig::default();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    /// First 12 hex digits of [`RunConfig::hash`], used in file names.
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }

    pub fn exact_options(&self) -> ExactOptions {
        ExactOptions {
            variant: self.pipeline.variant,
            finest: self.pipeline.finest,
            tol_mass: self.tolerances.mass,
            tol_subband: self.tolerances.subband,
            max_iter: self.tolerances.max_iter,
            ..ExactOptions::default()
        }
    }

    pub fn fast_options(&self) -> FastOptions {
        let t = &self.tolerances;
        FastOptions {
            variant: self.pipeline.variant,
            load_shortcut: true,
            tol_mass_factor: t.mass_factor,
            tol_patch_factor: t.patch_factor,
            tol_subband_factor: t.subband_factor,
            drop_tolerance: t.drop,
            patch_scaling: t.patch_scaling,
            max_iter: t.max_iter,
        }
    }

    pub fn decay_levels(&self) -> Vec<u32> {
        if self.report.decay_levels.is_empty() {
            (2.min(self.grid.q)..=self.grid.q.min(4)).collect()
        } else {
            self.report.decay_levels.clone()
        }
    }

    pub fn schedule(&self) -> Result<LocalizationSchedule> {
        LocalizationSchedule::new(self.pipeline.epsilon, self.grid.q, self.pipeline.c_rho)
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let grid = Grid::new(self.grid.q)?;
        let coefficient = match &self.coefficient {
            CoefficientSpec::Example1 => CoefficientField::example1(&grid),
            CoefficientSpec::Constant { value } => CoefficientField::constant(&grid, *value)?,
            CoefficientSpec::Checkerboard { contrast, seed } => CoefficientField::checkerboard(&grid, *contrast, *seed)?,
            CoefficientSpec::Csv { path } => {
                let (side, values) = read_grid_csv(path)?;
                if side != grid.cells_per_dim() {
                    return Err(config_err(format!(
                        "{}: {side} cells per side, grid needs {}",
                        path.display(),
                        grid.cells_per_dim()
                    )));
                }
                CoefficientField::from_values(&grid, values)?
            }
        };
        let nodal = match &self.load {
            LoadSpec::Example1 => example1_load(&grid),
            LoadSpec::Constant { value } => vec![*value; grid.num_nodes()],
            LoadSpec::Csv { path } => {
                let (side, values) = read_grid_csv(path)?;
                if side != grid.n() {
                    return Err(config_err(format!("{}: {side} nodes per side, grid needs {}", path.display(), grid.n())));
                }
                values
            }
        };
        let mass = assemble_mass(&grid);
        let stiffness = assemble_stiffness(&grid, &coefficient)?;
        let load = assemble_load(&grid, &mass, nodal)?;
        Ok(Problem { tree: IndexTree::new(&grid), grid, coefficient, mass, stiffness, load })
    }
}

/// Everything assembled from a config.
#[derive(Clone, Debug)]
pub struct Problem {
    pub grid: Grid,
    pub tree: IndexTree,
    pub coefficient: CoefficientField,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub load: LoadVector,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let back = RunConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sections_parse() {
        let text = r#"
            [grid]
            q = 3
            [coefficient]
            kind = "checkerboard"
            contrast = 100.0
            seed = 7
            [load]
            kind = "constant"
            value = 0.0
            [pipeline]
            kind = "fast"
            variant = "orthonormal"
            epsilon = 1e-3
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.grid.q, 3);
        assert_eq!(cfg.coefficient, CoefficientSpec::Checkerboard { contrast: 100.0, seed: 7 });
        assert_eq!(cfg.pipeline.kind, PipelineKind::Fast);
        assert_eq!(cfg.pipeline.variant, WVariant::Orthonormal);
        let p = cfg.build_problem().unwrap();
        assert!(p.load.rhs.iter().all(|&v| v == 0.0));
        assert_eq!(cfg.schedule().unwrap().depth(), 3);
    }

    #[test]
    fn hash_ignores_formatting_but_not_content() {
        let a = RunConfig::from_toml_str("[grid]\nq = 3\n").unwrap();
        let b = RunConfig::from_toml_str("# comment\n[grid]\n  q=3").unwrap();
        let c = RunConfig::from_toml_str("[grid]\nq = 4\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!(a.short_hash().len(), 12);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "[grid]\nq = 0",
            "[grid]\nq = 40",
            "[pipeline]\nepsilon = 1.5",
            "[pipeline]\nc_rho = -1.0",
            "[tolerances]\nmass = 0.0",
            "[report]\nkeep_fractions = [0.0]",
            "[report]\ndecay_levels = [9]",
            "[coefficient]\nkind = \"constant\"\nvalue = -2.0",
            "[coefficient]\nkind = \"marble\"",
            "[grid]\nq = 3\nsize = 9",
            "not toml at all [",
        ] {
            let err = RunConfig::from_toml_str(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn csv_inputs_resolve_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(2).unwrap();
        crate::io::write_grid_csv(&dir.path().join("a.csv"), g.cells_per_dim(), &vec![2.0; g.num_cells()]).unwrap();
        crate::io::write_grid_csv(&dir.path().join("g.csv"), g.n(), &vec![1.0; g.num_nodes()]).unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "[grid]\nq = 2\n[coefficient]\nkind = \"csv\"\npath = \"a.csv\"\n[load]\nkind = \"csv\"\npath = \"g.csv\"\n",
        )
        .unwrap();
        let p = RunConfig::load(&path).unwrap().build_problem().unwrap();
        assert_eq!(p.coefficient.contrast(), 1.0);
        assert_eq!(p.load.nodal, vec![1.0; 16]);
        std::fs::write(&path, "[grid]\nq = 3\n[coefficient]\nkind = \"csv\"\npath = \"a.csv\"\n").unwrap();
        assert!(RunConfig::load(&path).unwrap().build_problem().is_err());
    }
}
