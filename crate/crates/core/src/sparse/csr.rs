//! Compressed sparse row storage and the products the gamblet pipelines need.

use nalgebra::DMatrix;

use crate::error::{ensure, Error, Result};

/// Real CSR matrix with strictly increasing column indices in each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// A principal submatrix `A[S, S]` in local indexing, with the map back to
/// global indices (`global[local] = global index`).
#[derive(Clone, Debug)]
pub struct Principal {
    pub matrix: CsrMatrix,
    pub global: Vec<usize>,
}

impl Principal {
    pub fn local_of(&self, global: usize) -> Option<usize> {
        self.global.binary_search(&global).ok()
    }
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self> {
        ensure(indptr.len() == nrows + 1, || {
            format!("indptr has length {} for {} rows", indptr.len(), nrows)
        })?;
        ensure(indptr[0] == 0 && indptr[nrows] == indices.len(), || {
            "indptr must start at 0 and end at nnz".into()
        })?;
        ensure(indices.len() == data.len(), || {
            "indices and values differ in length".into()
        })?;
        for r in 0..nrows {
            ensure(indptr[r] <= indptr[r + 1], || format!("indptr decreases at row {r}"))?;
            let cols = &indices[indptr[r]..indptr[r + 1]];
            for w in cols.windows(2) {
                ensure(w[0] < w[1], || {
                    format!("column indices not strictly increasing in row {r}")
                })?;
            }
            if let Some(&last) = cols.last() {
                ensure(last < ncols, || format!("column {last} out of range in row {r}"))?;
            }
        }
        Ok(Self { nrows, ncols, indptr, indices, data })
    }

    pub(crate) fn from_parts_unchecked(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), nrows + 1);
        debug_assert_eq!(indices.len(), data.len());
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_parts_unchecked(nrows, ncols, vec![0; nrows + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts_unchecked(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            ensure(r < nrows && c < ncols, || {
                format!("triplet ({r}, {c}) outside {nrows}x{ncols}")
            })?;
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..nrows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&p| cols[p]);
            for &p in &order {
                if indices.len() > indptr[r] && *indices.last().unwrap() == cols[p] {
                    *data.last_mut().unwrap() += vals[p];
                } else {
                    indices.push(cols[p]);
                    data.push(vals[p]);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self::from_parts_unchecked(nrows, ncols, indptr, indices, data))
    }

    /// Sparse copy of a dense matrix keeping entries with `|x| > drop_tol`
    /// (`drop_tol < 0` keeps every entry, zeros included).
    pub fn from_dense(dense: &DMatrix<f64>, drop_tol: f64) -> Self {
        let (nrows, ncols) = dense.shape();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for r in 0..nrows {
            for c in 0..ncols {
                let v = dense[(r, c)];
                if v.abs() > drop_tol {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self::from_parts_unchecked(nrows, ncols, indptr, indices, data)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[(r, c)] = v;
            }
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[lo..hi], &self.data[lo..hi])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure(x.len() == self.ncols, || {
            format!("spmv: vector length {} for {} columns", x.len(), self.ncols)
        })?;
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = 0.0;
            for p in lo..hi {
                acc += self.data[p] * x[self.indices[p]];
            }
            *yr = acc;
        }
    }

    /// `y = Aᵀ x` without forming the transpose.
    pub fn transpose_spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure(x.len() == self.nrows, || {
            format!("transpose_spmv: vector length {} for {} rows", x.len(), self.nrows)
        })?;
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                indices[next[c]] = r;
                data[next[c]] = v;
                next[c] += 1;
            }
        }
        CsrMatrix::from_parts_unchecked(self.ncols, self.nrows, counts, indices, data)
    }

    pub fn scale(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `self + other` on the union pattern.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        ensure(self.shape() == other.shape(), || {
            format!("add: shapes {:?} and {:?}", self.shape(), other.shape())
        })?;
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                if j == cb.len() || (i < ca.len() && ca[i] < cb[j]) {
                    indices.push(ca[i]);
                    data.push(va[i]);
                    i += 1;
                } else if i == ca.len() || cb[j] < ca[i] {
                    indices.push(cb[j]);
                    data.push(vb[j]);
                    j += 1;
                } else {
                    indices.push(ca[i]);
                    data.push(va[i] + vb[j]);
                    i += 1;
                    j += 1;
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix::from_parts_unchecked(self.nrows, self.ncols, indptr, indices, data))
    }

    /// `self · other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        self.matmul_counted(other).map(|(m, _)| m)
    }

    /// `self · other` together with the number of floating point operations
    /// spent (two per multiply-add).
    pub fn matmul_counted(&self, other: &CsrMatrix) -> Result<(CsrMatrix, u64)> {
        ensure(self.ncols == other.nrows, || {
            format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )
        })?;
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut flops = 0u64;
        indptr.push(0);
        for r in 0..self.nrows {
            touched.clear();
            let (ca, va) = self.row(r);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                flops += 2 * cb.len() as u64;
                for (&c, &b) in cb.iter().zip(vb) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                indices.push(c);
                data.push(acc[c]);
            }
            indptr.push(indices.len());
        }
        Ok((
            CsrMatrix::from_parts_unchecked(self.nrows, other.ncols, indptr, indices, data),
            flops,
        ))
    }

    /// `R A Rᵀ`, symmetrized as `(X + Xᵀ)/2` to remove roundoff asymmetry.
    pub fn triple(r: &CsrMatrix, a: &CsrMatrix) -> Result<CsrMatrix> {
        Self::triple_counted(r, a).map(|(m, _)| m)
    }

    pub fn triple_counted(r: &CsrMatrix, a: &CsrMatrix) -> Result<(CsrMatrix, u64)> {
        ensure(a.nrows == a.ncols && r.ncols == a.nrows, || {
            format!(
                "triple: R is {}x{}, A is {}x{}",
                r.nrows, r.ncols, a.nrows, a.ncols
            )
        })?;
        let (ra, f1) = r.matmul_counted(a)?;
        let (x, f2) = ra.matmul_counted(&r.transpose())?;
        let (sym, _) = x.symmetrize();
        let flops = f1 + f2 + 2 * sym.nnz() as u64;
        Ok((sym, flops))
    }

    /// Returns `(X + Xᵀ)/2` and the largest entry of `|X − Xᵀ|`.
    pub fn symmetrize(&self) -> (CsrMatrix, f64) {
        let t = self.transpose();
        let sum = self.add(&t).expect("square matrix");
        let diff = self.add(&t.scale(-1.0)).expect("square matrix");
        (sum.scale(0.5), diff.max_abs())
    }

    /// Largest entry of `|X − Xᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.add(&self.transpose().scale(-1.0)).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    /// Drops entries with `|x| < threshold`; diagonal entries are always kept.
    pub fn drop_below(&self, threshold: f64) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut data = Vec::with_capacity(self.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c == r || v.abs() >= threshold {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix::from_parts_unchecked(self.nrows, self.ncols, indptr, indices, data)
    }

    /// Principal submatrix on a sorted index set.
    pub fn extract_principal(&self, index_set: &[usize]) -> Result<Principal> {
        let (matrix, _) = self.extract_principal_counted(index_set)?;
        Ok(Principal { matrix, global: index_set.to_vec() })
    }

    pub(crate) fn extract_principal_counted(&self, set: &[usize]) -> Result<(CsrMatrix, u64)> {
        ensure(self.nrows == self.ncols, || "principal submatrix of a non-square matrix".into())?;
        for w in set.windows(2) {
            ensure(w[0] < w[1], || "index set must be sorted without duplicates".into())?;
        }
        if let Some(&last) = set.last() {
            ensure(last < self.nrows, || {
                format!("index {last} out of range for {} rows", self.nrows)
            })?;
        }
        let mut indptr = Vec::with_capacity(set.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut work = 0u64;
        indptr.push(0);
        for &g in set {
            let (cols, vals) = self.row(g);
            work += cols.len() as u64;
            // Merge the sorted row pattern against the sorted index set.
            let (mut i, mut j) = (0, 0);
            while i < cols.len() && j < set.len() {
                match cols[i].cmp(&set[j]) {
                    std::cmp::Ordering::Less => {
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        // Skip ahead in the index set.
                        j += set[j..].partition_point(|&s| s < cols[i]);
                    }
                    std::cmp::Ordering::Equal => {
                        indices.push(j);
                        data.push(vals[i]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            indptr.push(indices.len());
        }
        let n = set.len();
        Ok((CsrMatrix::from_parts_unchecked(n, n, indptr, indices, data), work))
    }

    /// Sparse times dense: `self · D`.
    pub fn mul_dense(&self, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure(self.ncols == d.nrows(), || {
            format!(
                "mul_dense: {}x{} times {}x{}",
                self.nrows,
                self.ncols,
                d.nrows(),
                d.ncols()
            )
        })?;
        let mut out = DMatrix::zeros(self.nrows, d.ncols());
        for c in 0..d.ncols() {
            let x = d.column(c);
            let xs = x.as_slice();
            let mut y = out.column_mut(c);
            let ys = y.as_mut_slice();
            self.spmv_into(xs, ys);
        }
        Ok(out)
    }

    /// `selfᵀ · D` without forming the transpose.
    pub fn transpose_mul_dense(&self, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure(self.nrows == d.nrows(), || {
            format!(
                "transpose_mul_dense: ({}x{})ᵀ times {}x{}",
                self.nrows,
                self.ncols,
                d.nrows(),
                d.ncols()
            )
        })?;
        let mut out = DMatrix::zeros(self.ncols, d.ncols());
        for c in 0..d.ncols() {
            let xs = d.column(c);
            let xs = xs.as_slice();
            let mut y = out.column_mut(c);
            let ys = y.as_mut_slice();
            for (r, &xr) in xs.iter().enumerate() {
                if xr == 0.0 {
                    continue;
                }
                let (cols, vals) = self.row(r);
                for (&col, &v) in cols.iter().zip(vals) {
                    ys[col] += v * xr;
                }
            }
        }
        Ok(out)
    }

    /// Keeps only the listed rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Result<CsrMatrix> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for &r in rows {
            ensure(r < self.nrows, || format!("row {r} out of range"))?;
            let (cols, vals) = self.row(r);
            indices.extend_from_slice(cols);
            data.extend_from_slice(vals);
            indptr.push(indices.len());
        }
        Ok(CsrMatrix::from_parts_unchecked(rows.len(), self.ncols, indptr, indices, data))
    }

    /// Stacks rows given as `(sorted columns, values)` pairs.
    pub fn from_rows(ncols: usize, rows: Vec<(Vec<usize>, Vec<f64>)>) -> Result<CsrMatrix> {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let total: usize = rows.iter().map(|(c, _)| c.len()).sum();
        let mut indices = Vec::with_capacity(total);
        let mut data = Vec::with_capacity(total);
        indptr.push(0);
        for (cols, vals) in rows {
            if cols.len() != vals.len() {
                return Err(Error::invalid("row columns and values differ in length"));
            }
            indices.extend(cols);
            data.extend(vals);
            indptr.push(indices.len());
        }
        CsrMatrix::new(nrows, ncols, indptr, indices, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for r in 0..n {
            for c in 0..m {
                if rng.random::<f64>() < density {
                    t.push((r, c, rng.random::<f64>() * 2.0 - 1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n, m, &t).unwrap()
    }

    fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, -1.0)])
            .unwrap();
        assert_eq!(m.indices(), &[0, 2, 1]);
        assert_eq!(m.values(), &[2.0, 1.5, -1.0]);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn new_rejects_unsorted_columns() {
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![0, 2], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn spmv_identity_and_mismatch() {
        let id = CsrMatrix::identity(4);
        let x = vec![1.0, -2.0, 3.5, 0.25];
        assert_eq!(id.spmv(&x).unwrap(), x);
        assert!(matches!(id.spmv(&[1.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn spmv_matches_dense_on_random_5x5() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sparse(&mut rng, 5, 5, 0.6);
        let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let y = a.spmv(&x).unwrap();
        let yd = a.to_dense() * nalgebra::DVector::from_vec(x.clone());
        for i in 0..5 {
            assert!((y[i] - yd[i]).abs() <= 1e-14 * (1.0 + yd[i].abs()));
        }
        let yt = a.transpose_spmv(&x).unwrap();
        let ytd = a.to_dense().transpose() * nalgebra::DVector::from_vec(x);
        for i in 0..5 {
            assert!((yt[i] - ytd[i]).abs() <= 1e-14);
        }
    }

    #[test]
    fn triple_with_identity_and_ones_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_sparse(&mut rng, 6, 6, 0.5);
        let a = b.add(&b.transpose()).unwrap();
        let t = CsrMatrix::triple(&CsrMatrix::identity(6), &a).unwrap();
        assert!(rel_frob(&t.to_dense(), &a.to_dense()) < 1e-15);

        let n = 7;
        let ones = CsrMatrix::from_triplets(1, n, &(0..n).map(|j| (0, j, 1.0)).collect::<Vec<_>>())
            .unwrap();
        let t = CsrMatrix::triple(&ones, &CsrMatrix::identity(n)).unwrap();
        assert_eq!(t.shape(), (1, 1));
        assert_eq!(t.get(0, 0), n as f64);
    }

    #[test]
    fn triple_matches_dense_on_random_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = random_sparse(&mut rng, 5, 8, 0.4);
        let b = random_sparse(&mut rng, 8, 8, 0.3);
        let a = b.add(&b.transpose()).unwrap();
        let t = CsrMatrix::triple(&r, &a).unwrap().to_dense();
        let rd = r.to_dense();
        let expected = &rd * a.to_dense() * rd.transpose();
        assert!(rel_frob(&t, &expected) < 1e-13);
        assert!(t.iter().zip(t.transpose().iter()).all(|(x, y)| x == y));
    }

    #[test]
    fn extract_principal_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_sparse(&mut rng, 6, 6, 0.5);
        let a = b.add(&b.transpose()).unwrap();
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(a.extract_principal(&all).unwrap().matrix, a);
        let single = a.extract_principal(&[3]).unwrap();
        assert_eq!(single.matrix.shape(), (1, 1));
        assert_eq!(single.matrix.get(0, 0), a.get(3, 3));
        let sub = a.extract_principal(&[0, 2, 5]).unwrap();
        let d = a.to_dense();
        for (li, &gi) in sub.global.iter().enumerate() {
            for (lj, &gj) in sub.global.iter().enumerate() {
                assert_eq!(sub.matrix.get(li, lj), d[(gi, gj)]);
            }
        }
        assert_eq!(sub.local_of(5), Some(2));
        assert!(a.extract_principal(&[1, 6]).is_err());
        assert!(a.extract_principal(&[2, 1]).is_err());
    }

    #[test]
    fn dense_products_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = random_sparse(&mut rng, 9, 6, 0.4);
        let d = DMatrix::from_fn(6, 4, |i, j| (i as f64 - 2.0 * j as f64).sin());
        let p = s.mul_dense(&d).unwrap();
        assert!(rel_frob(&p, &(s.to_dense() * &d)) < 1e-14);
        let e = DMatrix::from_fn(9, 3, |i, j| (i * j) as f64 * 0.1 - 0.3);
        let q = s.transpose_mul_dense(&e).unwrap();
        assert!(rel_frob(&q, &(s.to_dense().transpose() * &e)) < 1e-14);
    }

    #[test]
    fn drop_below_keeps_diagonal() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1e-20), (0, 1, 1e-20), (1, 1, 2.0)]).unwrap();
        let d = m.drop_below(1e-10);
        assert_eq!(d.nnz(), 2);
        assert_eq!(d.get(0, 0), 1e-20);
        assert_eq!(d.get(0, 1), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sparse_strategy(n: usize, m: usize) -> impl Strategy<Value = CsrMatrix> {
            proptest::collection::vec(
                proptest::option::weighted(0.35, -10.0f64..10.0),
                n * m,
            )
            .prop_map(move |cells| {
                let t: Vec<_> = cells
                    .iter()
                    .enumerate()
                    .filter_map(|(p, v)| v.map(|v| (p / m, p % m, v)))
                    .collect();
                CsrMatrix::from_triplets(n, m, &t).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn matmul_agrees_with_dense(a in sparse_strategy(12, 9), b in sparse_strategy(9, 14)) {
                let c = a.matmul(&b).unwrap().to_dense();
                let expected = a.to_dense() * b.to_dense();
                let scale = expected.norm().max(1.0);
                prop_assert!((c - expected).norm() / scale < 1e-13);
            }

            #[test]
            fn transpose_is_involution(a in sparse_strategy(7, 11)) {
                prop_assert_eq!(a.transpose().transpose(), a);
            }

            #[test]
            fn principal_of_symmetric_is_symmetric(a in sparse_strategy(10, 10), mask in proptest::collection::vec(any::<bool>(), 10)) {
                let s = a.add(&a.transpose()).unwrap();
                let set: Vec<usize> = (0..10).filter(|&i| mask[i]).collect();
                let p = s.extract_principal(&set).unwrap();
                prop_assert_eq!(p.matrix.asymmetry(), 0.0);
            }
        }
    }
}
