//! Structured grid on the unit square, cellwise coefficient fields and
//! nodal load data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

pub const DEFAULT_MAX_Q: u32 = 12;

/// `2^q x 2^q` interior nodes with spacing `h = 1/(2^q + 1)`.
///
/// Interior nodes are `(i, j)` with `i, j ∈ 1..=n`, flattened as
/// `(j-1)·n + (i-1)`, so `i` runs along x. Cells are `(ci, cj) ∈ 0..=n`, cell
/// `(ci, cj)` covering `[ci·h, (ci+1)·h] x [cj·h, (cj+1)·h]`, flattened as
/// `cj·(n+1) + ci`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    q: u32,
    n: usize,
}

impl Grid {
    pub fn new(q: u32) -> Result<Self> {
        Self::with_limit(q, DEFAULT_MAX_Q)
    }

    pub fn with_limit(q: u32, max_q: u32) -> Result<Self> {
        ensure((1..=max_q).contains(&q), || format!("grid depth q = {q} outside 1..={max_q}"))?;
        Ok(Self { q, n: 1 << q })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Interior nodes per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cells per dimension, `n + 1`.
    pub fn cells_per_dim(&self) -> usize {
        self.n + 1
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.n * self.n
    }

    pub fn num_cells(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    /// Flat index of interior node `(i, j)`, both 1-based.
    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j));
        (j - 1) * self.n + (i - 1)
    }

    #[inline]
    pub fn node_ij(&self, index: usize) -> (usize, usize) {
        (index % self.n + 1, index / self.n + 1)
    }

    pub fn node_position(&self, index: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(index);
        (i as f64 * self.h(), j as f64 * self.h())
    }

    #[inline]
    pub fn cell_index(&self, ci: usize, cj: usize) -> usize {
        cj * (self.n + 1) + ci
    }

    /// The four corner nodes of a cell in counter-clockwise order starting at
    /// the lower left; boundary corners are `None`.
    pub fn cell_nodes(&self, ci: usize, cj: usize) -> [Option<usize>; 4] {
        let corner = |i: usize, j: usize| {
            ((1..=self.n).contains(&i) && (1..=self.n).contains(&j)).then(|| self.node_index(i, j))
        };
        [corner(ci, cj), corner(ci + 1, cj), corner(ci + 1, cj + 1), corner(ci, cj + 1)]
    }
}

/// Piecewise constant conductivity, one value per fine cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    cells_per_dim: usize,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        ensure(values.len() == grid.num_cells(), || {
            format!("{} coefficient values for {} cells", values.len(), grid.num_cells())
        })?;
        if let Some((p, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(format!("coefficient at cell {p} is {v}, must be positive and finite")));
        }
        Ok(Self { cells_per_dim: grid.cells_per_dim(), values })
    }

    /// The rough multiscale field of the reference example, sampled at each
    /// cell's lower-left corner.
    pub fn example1(grid: &Grid) -> Self {
        let m = grid.cells_per_dim();
        let mut values = Vec::with_capacity(grid.num_cells());
        for cj in 0..m {
            for ci in 0..m {
                values.push(example1_value(ci as f64 / m as f64, cj as f64 / m as f64));
            }
        }
        Self { cells_per_dim: m, values }
    }

    pub fn constant(grid: &Grid, value: f64) -> Result<Self> {
        ensure(value.is_finite() && value > 0.0, || {
            format!("constant coefficient {value} must be positive")
        })?;
        Ok(Self { cells_per_dim: grid.cells_per_dim(), values: vec![value; grid.num_cells()] })
    }

    /// Independent log-uniform cell values in `[1, contrast]`.
    pub fn checkerboard(grid: &Grid, contrast: f64, seed: u64) -> Result<Self> {
        ensure(contrast.is_finite() && contrast >= 1.0, || {
            format!("checkerboard contrast {contrast} must be at least 1")
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log_c = contrast.ln();
        let values = (0..grid.num_cells())
            .map(|_| (rng.random::<f64>() * log_c).exp().min(contrast))
            .collect();
        Ok(Self { cells_per_dim: grid.cells_per_dim(), values })
    }

    pub fn cells_per_dim(&self) -> usize {
        self.cells_per_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ci: usize, cj: usize) -> f64 {
        self.values[cj * self.cells_per_dim + ci]
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn contrast(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ensure(factor.is_finite() && factor > 0.0, || format!("scale factor {factor} must be positive"))?;
        Ok(Self {
            cells_per_dim: self.cells_per_dim,
            values: self.values.iter().map(|v| v * factor).collect(),
        })
    }

    pub fn matches(&self, grid: &Grid) -> bool {
        self.cells_per_dim == grid.cells_per_dim()
    }
}

fn example1_value(x: f64, y: f64) -> f64 {
    (1..=6)
        .map(|k| {
            let f = (1u32 << k) as f64 * PI;
            (1.0 + 0.5 * (f * (x + y)).cos()) * (1.0 + 0.5 * (f * (y - 3.0 * x)).sin())
        })
        .product()
}

/// Nodal samples of the reference load `cos(3x+y) + sin(3y) + sin(7x-5y)`.
pub fn example1_load(grid: &Grid) -> Vec<f64> {
    (0..grid.num_nodes())
        .map(|p| {
            let (x, y) = grid.node_position(p);
            (3.0 * x + y).cos() + (3.0 * y).sin() + (7.0 * x - 5.0 * y).sin()
        })
        .collect()
}

/// Nodal load values together with the assembled right-hand side `b = M g`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadVector {
    pub nodal: Vec<f64>,
    pub rhs: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let g = Grid::new(6).unwrap();
        assert_eq!((g.n(), g.num_nodes()), (64, 4096));
        assert_eq!(g.h(), 1.0 / 65.0);
        assert_eq!(g.h() * 65.0, 1.0);
        let g = Grid::new(1).unwrap();
        assert_eq!((g.n(), g.h(), g.num_nodes()), (2, 1.0 / 3.0, 4));
        let g = Grid::new(3).unwrap();
        assert_eq!((g.n(), g.h(), g.num_nodes()), (8, 1.0 / 9.0, 64));
    }

    #[test]
    fn grid_rejects_bad_depth() {
        assert!(matches!(Grid::new(0), Err(Error::InvalidArgument(_))));
        assert!(Grid::new(13).is_err());
        assert!(Grid::with_limit(13, 14).is_ok());
    }

    #[test]
    fn node_index_round_trip() {
        let g = Grid::new(3).unwrap();
        for p in 0..g.num_nodes() {
            let (i, j) = g.node_ij(p);
            assert_eq!(g.node_index(i, j), p);
        }
        assert_eq!(g.cell_nodes(0, 0), [None, None, Some(0), None]);
    }

    #[test]
    fn example1_corner_cell() {
        let a = CoefficientField::example1(&Grid::new(6).unwrap());
        assert_eq!(a.get(0, 0), 1.5f64.powi(6));
        assert_eq!(a.get(0, 0), 11.390625);
    }

    #[test]
    fn example1_contrast_at_q6() {
        let a = CoefficientField::example1(&Grid::new(6).unwrap());
        assert!(a.values().iter().all(|&v| v > 0.0));
        assert_eq!(format!("{:.3e}", a.contrast()), "1.866e3");
        // Exhaustive scan of all 65² cells.
        assert!((a.lambda_min() - 0.024854).abs() < 1e-6, "{}", a.lambda_min());
        assert!((a.lambda_max() - 46.378).abs() < 1e-3, "{}", a.lambda_max());
    }

    #[test]
    fn constant_field() {
        let g = Grid::new(2).unwrap();
        let a = CoefficientField::constant(&g, 1.0).unwrap();
        assert_eq!((a.lambda_min(), a.lambda_max(), a.contrast()), (1.0, 1.0, 1.0));
        assert!(CoefficientField::constant(&g, 0.0).is_err());
        assert!(CoefficientField::constant(&g, -2.0).is_err());
    }

    #[test]
    fn checkerboard_is_deterministic_and_bounded() {
        let g = Grid::new(4).unwrap();
        let a = CoefficientField::checkerboard(&g, 1e4, 7).unwrap();
        let b = CoefficientField::checkerboard(&g, 1e4, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.lambda_min() >= 1.0 && a.lambda_max() <= 1e4);
        let c = CoefficientField::checkerboard(&g, 1e4, 8).unwrap();
        assert_ne!(a, c);
        let flat = CoefficientField::checkerboard(&g, 1.0, 99).unwrap();
        assert!(flat.values().iter().all(|&v| v == 1.0));
        assert!(CoefficientField::checkerboard(&g, 0.5, 1).is_err());
    }

    #[test]
    fn from_values_validates() {
        let g = Grid::new(1).unwrap();
        assert!(CoefficientField::from_values(&g, vec![1.0; 9]).is_ok());
        assert!(CoefficientField::from_values(&g, vec![1.0; 8]).is_err());
        let mut v = vec![1.0; 9];
        v[4] = f64::NAN;
        assert!(CoefficientField::from_values(&g, v).is_err());
    }
}
