//! Q1 assembly on the structured grid with homogeneous Dirichlet conditions.

use crate::error::{ensure, Error, Result};
use crate::grid::{CoefficientField, Grid, LoadVector};
use crate::sparse::{dot, CsrMatrix};

/// Reference mass matrix divided by `h²`, corners counter-clockwise.
const MASS_REF: [[f64; 4]; 4] = [
    [4.0 / 36.0, 2.0 / 36.0, 1.0 / 36.0, 2.0 / 36.0],
    [2.0 / 36.0, 4.0 / 36.0, 2.0 / 36.0, 1.0 / 36.0],
    [1.0 / 36.0, 2.0 / 36.0, 4.0 / 36.0, 2.0 / 36.0],
    [2.0 / 36.0, 1.0 / 36.0, 2.0 / 36.0, 4.0 / 36.0],
];

/// Reference stiffness for `-Δ` (independent of `h` in 2D).
pub const STIFF_REF: [[f64; 4]; 4] = [
    [4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0],
    [-2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0],
];

fn assemble(grid: &Grid, cell_weight: impl Fn(usize, usize) -> f64, reference: &[[f64; 4]; 4]) -> CsrMatrix {
    let m = grid.cells_per_dim();
    let mut triplets = Vec::with_capacity(16 * m * m);
    for cj in 0..m {
        for ci in 0..m {
            let w = cell_weight(ci, cj);
            let nodes = grid.cell_nodes(ci, cj);
            for (a, na) in nodes.iter().enumerate() {
                let Some(r) = *na else { continue };
                for (b, nb) in nodes.iter().enumerate() {
                    if let Some(c) = *nb {
                        triplets.push((r, c, w * reference[a][b]));
                    }
                }
            }
        }
    }
    let n = grid.num_nodes();
    CsrMatrix::from_triplets(n, n, &triplets).expect("nodes are in range")
}

/// `M_ij = ∫ φ_i φ_j`.
pub fn assemble_mass(grid: &Grid) -> CsrMatrix {
    let h2 = grid.h() * grid.h();
    assemble(grid, |_, _| h2, &MASS_REF)
}

/// `A_ij = ∫ a ∇φ_i·∇φ_j`.
pub fn assemble_stiffness(grid: &Grid, a: &CoefficientField) -> Result<CsrMatrix> {
    ensure(a.matches(grid), || {
        format!(
            "coefficient field has {} cells per side, grid has {}",
            a.cells_per_dim(),
            grid.cells_per_dim()
        )
    })?;
    Ok(assemble(grid, |ci, cj| a.get(ci, cj), &STIFF_REF))
}

/// `b = M g` for nodal values `g`.
pub fn assemble_load(grid: &Grid, mass: &CsrMatrix, g: Vec<f64>) -> Result<LoadVector> {
    ensure(g.len() == grid.num_nodes(), || {
        format!("{} load values for {} nodes", g.len(), grid.num_nodes())
    })?;
    ensure(g.iter().all(|v| v.is_finite()), || "load values must be finite".into())?;
    let rhs = mass.spmv(&g)?;
    Ok(LoadVector { nodal: g, rhs })
}

/// `√(xᵀ A x)`.
pub fn energy_norm<O: crate::sparse::LinearOperator + ?Sized>(a: &O, x: &[f64]) -> Result<f64> {
    ensure(x.len() == a.dim(), || format!("energy_norm: vector length {} for {}", x.len(), a.dim()))?;
    let mut ax = vec![0.0; x.len()];
    a.apply(x, &mut ax);
    let q = dot(x, &ax);
    if q >= 0.0 {
        return Ok(q.sqrt());
    }
    let scale = dot(&ax, &ax).sqrt() * dot(x, x).sqrt();
    if -q <= 1e-13 * scale {
        Ok(0.0)
    } else {
        Err(Error::NumericalDomain(format!("xᵀAx = {q:e} is negative")))
    }
}

/// Energy `a_c vᵀ K_ref v` of a nodal function in every cell, indexed like
/// the coefficient field.
pub fn cell_energies(grid: &Grid, a: &CoefficientField, v: &[f64]) -> Vec<f64> {
    let m = grid.cells_per_dim();
    let mut out = Vec::with_capacity(m * m);
    for cj in 0..m {
        for ci in 0..m {
            let nodes = grid.cell_nodes(ci, cj);
            let local: [f64; 4] = std::array::from_fn(|c| nodes[c].map_or(0.0, |p| v[p]));
            let mut e = 0.0;
            for r in 0..4 {
                for c in 0..4 {
                    e += local[r] * STIFF_REF[r][c] * local[c];
                }
            }
            out.push(a.get(ci, cj) * e.max(0.0));
        }
    }
    out
}
