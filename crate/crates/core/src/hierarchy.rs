//! Quadtree index tree over the interior nodes, aggregation maps, null-space
//! bases of the aggregation and patch queries.
//!
//! Level `k` has `2^k x 2^k` aggregates `(a, b)`, `a, b ∈ 1..=2^k`, flattened
//! as `(b-1)·2^k + (a-1)`; at level `q` this is the fine node numbering. The
//! children of `(a, b)` are listed SW, SE, NW, NE.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::grid::Grid;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WVariant {
    /// Rows `(1,-1,0,0), (0,1,-1,0), (0,0,1,-1)` per parent.
    #[default]
    Chain,
    /// Normalized Helmert rows, so `W Wᵀ = I`.
    Orthonormal,
}

impl WVariant {
    fn block(self) -> [[f64; 4]; 3] {
        match self {
            WVariant::Chain => [
                [1.0, -1.0, 0.0, 0.0],
                [0.0, 1.0, -1.0, 0.0],
                [0.0, 0.0, 1.0, -1.0],
            ],
            WVariant::Orthonormal => {
                let (a, b, c) = (0.5f64.sqrt(), 6.0f64.sqrt().recip(), 12.0f64.sqrt().recip());
                [
                    [a, -a, 0.0, 0.0],
                    [b, b, -2.0 * b, 0.0],
                    [c, c, c, -3.0 * c],
                ]
            }
        }
    }
}

/// Rows of the unnormalized Helmert matrix `U^(n)`: row `r < n-1` is
/// `(1, …, 1, -(r+1), 0, …)` with `r+1` ones, the last row is all ones.
pub fn helmert_rows(n: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(n);
    for r in 0..n.saturating_sub(1) {
        let mut row = vec![0.0; n];
        row[..=r].iter_mut().for_each(|v| *v = 1.0);
        row[r + 1] = -((r + 1) as f64);
        rows.push(row);
    }
    if n > 0 {
        rows.push(vec![1.0; n]);
    }
    rows
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexTree {
    q: u32,
}

impl IndexTree {
    pub fn new(grid: &Grid) -> Self {
        Self { q: grid.q() }
    }

    /// Tree for a grid with `n` interior nodes per side.
    pub fn for_side(n: usize) -> Result<Self> {
        ensure(n >= 2 && n.is_power_of_two(), || format!("grid side {n} is not a power of two"))?;
        Ok(Self { q: n.trailing_zeros() })
    }

    pub fn depth(&self) -> u32 {
        self.q
    }

    /// Aggregates per side at level `k`.
    pub fn side(&self, k: u32) -> usize {
        1 << k
    }

    /// `|𝓘^(k)| = 4^k`.
    pub fn len(&self, k: u32) -> usize {
        1 << (2 * k)
    }

    /// `|𝓙^(k)| = 3·4^(k-1)`.
    pub fn subband_len(&self, k: u32) -> usize {
        3 << (2 * (k - 1))
    }

    /// Nominal aggregate diameter `H_k = 2^-k`.
    pub fn h_k(&self, k: u32) -> f64 {
        0.5f64.powi(k as i32)
    }

    fn check_level(&self, k: u32) -> Result<()> {
        ensure((1..=self.q).contains(&k), || format!("level {k} outside 1..={}", self.q))
    }

    #[inline]
    pub fn index(&self, k: u32, a: usize, b: usize) -> usize {
        (b - 1) * self.side(k) + (a - 1)
    }

    #[inline]
    pub fn ab(&self, k: u32, s: usize) -> (usize, usize) {
        let m = self.side(k);
        (s % m + 1, s / m + 1)
    }

    /// Level-`k` aggregate containing fine node `(i, j)`.
    pub fn aggregate_of_node(&self, k: u32, i: usize, j: usize) -> (usize, usize) {
        let w = 1usize << (self.q - k);
        (i.div_ceil(w), j.div_ceil(w))
    }

    pub fn parent(&self, k: u32, s: usize) -> usize {
        let (a, b) = self.ab(k, s);
        self.index(k - 1, a.div_ceil(2), b.div_ceil(2))
    }

    /// Children at level `k+1` of aggregate `s` at level `k`, SW, SE, NW, NE.
    pub fn children(&self, k: u32, s: usize) -> [usize; 4] {
        let (a, b) = self.ab(k, s);
        let c = |x, y| self.index(k + 1, x, y);
        [c(2 * a - 1, 2 * b - 1), c(2 * a, 2 * b - 1), c(2 * a - 1, 2 * b), c(2 * a, 2 * b)]
    }

    /// Inclusive fine node box `(i_lo, i_hi, j_lo, j_hi)` of an aggregate.
    pub fn node_box(&self, k: u32, s: usize) -> (usize, usize, usize, usize) {
        let (a, b) = self.ab(k, s);
        let w = 1usize << (self.q - k);
        ((a - 1) * w + 1, a * w, (b - 1) * w + 1, b * w)
    }

    /// Fine node indices of an aggregate in increasing order.
    pub fn fine_nodes(&self, k: u32, s: usize) -> Vec<usize> {
        let n = self.side(self.q);
        let (i0, i1, j0, j1) = self.node_box(k, s);
        let mut out = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.push((j - 1) * n + (i - 1));
            }
        }
        out
    }

    /// Physical center of an aggregate's node box.
    pub fn center(&self, k: u32, s: usize) -> (f64, f64) {
        let h = 1.0 / (self.side(self.q) + 1) as f64;
        let (i0, i1, j0, j1) = self.node_box(k, s);
        (0.5 * (i0 + i1) as f64 * h, 0.5 * (j0 + j1) as f64 * h)
    }

    /// Aggregation `π^(k,k+1)` (0/1, `4^k x 4^(k+1)`) and `π̄ = π/4`.
    pub fn build_pi(&self, k: u32) -> Result<(CsrMatrix, CsrMatrix)> {
        ensure(k >= 1 && k < self.q, || format!("π^(k,k+1) needs 1 <= k < {}, got {k}", self.q))?;
        let rows = (0..self.len(k))
            .map(|s| {
                let mut c = self.children(k, s).to_vec();
                c.sort_unstable();
                (c, vec![1.0; 4])
            })
            .collect();
        let pi = CsrMatrix::from_rows(self.len(k + 1), rows)?;
        let pibar = pi.scale(0.25);
        Ok((pi, pibar))
    }

    /// `π^(k,q)`: row `s` is the indicator of the fine nodes of aggregate `s`.
    pub fn pi_to_fine(&self, k: u32) -> Result<CsrMatrix> {
        self.check_level(k)?;
        let rows = (0..self.len(k)).map(|s| {
            let nodes = self.fine_nodes(k, s);
            let ones = vec![1.0; nodes.len()];
            (nodes, ones)
        });
        CsrMatrix::from_rows(self.len(self.q), rows.collect())
    }

    /// Level-`k` measurement operator `Φ^(k) = π^(k,q) M`.
    pub fn measurement(&self, k: u32, mass: &CsrMatrix) -> Result<CsrMatrix> {
        self.pi_to_fine(k)?.matmul(mass)
    }

    /// `W^(k)`: `3·4^(k-1) x 4^k`, row `3s + t` supported on the children of
    /// level-`(k-1)` aggregate `s`.
    pub fn build_w(&self, k: u32, variant: WVariant) -> Result<CsrMatrix> {
        ensure(k >= 2 && k <= self.q, || format!("W^(k) needs 2 <= k <= {}, got {k}", self.q))?;
        let block = variant.block();
        let mut rows = Vec::with_capacity(self.subband_len(k));
        for s in 0..self.len(k - 1) {
            let children = self.children(k - 1, s);
            for coeffs in &block {
                let mut entries: Vec<(usize, f64)> = children
                    .iter()
                    .zip(coeffs)
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(&c, &v)| (c, v))
                    .collect();
                entries.sort_unstable_by_key(|e| e.0);
                rows.push(entries.into_iter().unzip());
            }
        }
        CsrMatrix::from_rows(self.len(k), rows)
    }

    /// Chebyshev index radius equivalent to the physical radius `ρ·H_k`:
    /// boxes `d` apart are `(d-1)·H_k` apart.
    pub fn index_radius(rho: f64) -> usize {
        rho.max(0.0).floor() as usize + 1
    }

    /// `i^ρ` at level `k`, sorted.
    pub fn neighborhood(&self, k: u32, s: usize, rho: f64) -> Vec<usize> {
        let m = self.side(k) as isize;
        let r = Self::index_radius(rho) as isize;
        let (a, b) = self.ab(k, s);
        let (a, b) = (a as isize, b as isize);
        let mut out = Vec::new();
        for bb in (b - r).max(1)..=(b + r).min(m) {
            for aa in (a - r).max(1)..=(a + r).min(m) {
                out.push(self.index(k, aa as usize, bb as usize));
            }
        }
        out
    }

    /// `i^χ ⊂ 𝓙^(k)`: subband indices whose parent lies in `i^ρ` at level
    /// `k-1`, sorted.
    pub fn chi_neighborhood(&self, k: u32, s: usize, rho: f64) -> Vec<usize> {
        self.neighborhood(k - 1, s, rho)
            .into_iter()
            .flat_map(|p| [3 * p, 3 * p + 1, 3 * p + 2])
            .collect()
    }

    /// Fine nodes covered by the level-`k` patch `i^ρ`, sorted.
    pub fn patch_nodes(&self, k: u32, s: usize, rho: f64) -> Vec<usize> {
        let n = self.side(self.q);
        let w = 1usize << (self.q - k);
        let hood = self.neighborhood(k, s, rho);
        let (a0, b0) = self.ab(k, hood[0]);
        let (a1, b1) = self.ab(k, *hood.last().unwrap());
        let mut out = Vec::with_capacity(hood.len() * w * w);
        for j in (b0 - 1) * w + 1..=b1 * w {
            for i in (a0 - 1) * w + 1..=a1 * w {
                out.push((j - 1) * n + (i - 1));
            }
        }
        out
    }

    pub fn summary(&self) -> TreeSummary {
        TreeSummary {
            depth: self.q,
            delta: 1.0,
            levels: (1..=self.q)
                .map(|k| LevelSummary {
                    level: k,
                    aggregates: self.len(k),
                    subband: if k >= 2 { self.subband_len(k) } else { 0 },
                    h_k: self.h_k(k),
                    boxes: (0..self.len(k))
                        .map(|s| {
                            let (i0, i1, j0, j1) = self.node_box(k, s);
                            [i0, i1, j0, j1]
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TreeSummary {
    pub depth: u32,
    /// Inner-ball ratio of the aggregates, recorded only.
    pub delta: f64,
    pub levels: Vec<LevelSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LevelSummary {
    pub level: u32,
    pub aggregates: usize,
    pub subband: usize,
    pub h_k: f64,
    /// Inclusive fine node boxes `[i_lo, i_hi, j_lo, j_hi]`.
    pub boxes: Vec<[usize; 4]>,
}
