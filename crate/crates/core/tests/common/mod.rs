#![allow(dead_code)]

use gamblet::config::{CoefficientSpec, GridConfig, LoadSpec, Problem, RunConfig};
use gamblet::fem::energy_norm;
use gamblet::{cg_solve, CsrMatrix};

pub fn config(q: u32, coefficient: CoefficientSpec) -> RunConfig {
    RunConfig { grid: GridConfig { q }, coefficient, ..RunConfig::default() }
}

pub fn problem(q: u32, coefficient: CoefficientSpec) -> Problem {
    config(q, coefficient).build_problem().unwrap()
}

pub fn example1(q: u32) -> Problem {
    problem(q, CoefficientSpec::Example1)
}

pub fn unit(q: u32) -> Problem {
    problem(q, CoefficientSpec::Constant { value: 1.0 })
}

pub fn with_load(q: u32, coefficient: CoefficientSpec, load: LoadSpec) -> Problem {
    RunConfig { load, ..config(q, coefficient) }.build_problem().unwrap()
}

pub fn reference(p: &Problem) -> Vec<f64> {
    cg_solve(&p.stiffness, &p.load.rhs, 1e-13, 100_000, None).unwrap().0
}

pub fn energy_diff(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
    energy_norm(a, &d).unwrap()
}

pub fn rel_energy_diff(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    energy_diff(a, x, y) / energy_norm(a, y).unwrap()
}
