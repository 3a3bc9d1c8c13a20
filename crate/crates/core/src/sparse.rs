//! Minimal sparse linear algebra: CSR storage with the handful of kernels the
//! solver path needs (SpMV, Galerkin triple products, triangular sweeps).

use nalgebra::DMatrix;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets, summing duplicates. Entry order does not affect
    /// the result beyond f64 summation order, which is fixed by sorting.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut data: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut cur_row = 0usize;
        for &(i, j, v) in &sorted {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of bounds");
            while cur_row < i {
                cur_row += 1;
                indptr[cur_row] = indices.len();
            }
            if indices.len() > indptr[cur_row] && *indices.last().unwrap() == j {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
            }
        }
        while cur_row < nrows {
            cur_row += 1;
            indptr[cur_row] = indices.len();
        }
        CsrMatrix { nrows, ncols, indptr, indices, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
        y
    }

    /// Largest absolute asymmetry relative to the largest entry.
    pub fn relative_asymmetry(&self) -> f64 {
        let mut max_entry = 0.0f64;
        let mut max_gap = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                max_entry = max_entry.max(v.abs());
                max_gap = max_gap.max((v - self.get(*c, i)).abs());
            }
        }
        if max_entry == 0.0 {
            0.0
        } else {
            max_gap / max_entry
        }
    }

    pub fn max_nnz_per_row(&self) -> usize {
        (0..self.nrows)
            .map(|i| self.indptr[i + 1] - self.indptr[i])
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c)] = *v;
            }
        }
        m
    }

    /// Keeps rows and columns listed in `keep` (sorted), renumbering densely.
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols.max(self.nrows)];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_i);
            for (c, v) in cols.iter().zip(vals) {
                if map[*c] != usize::MAX {
                    triplets.push((new_i, map[*c], *v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), keep.len(), &triplets)
    }
}

/// A sparse column vector: sorted `(row, value)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

pub fn sparse_dot_dense(s: &SparseVec, d: &[f64]) -> f64 {
    s.iter().map(|&(i, v)| v * d[i]).sum()
}

/// Scatter `alpha * s` into `d`.
pub fn sparse_axpy(alpha: f64, s: &SparseVec, d: &mut [f64]) {
    for &(i, v) in s {
        d[i] += alpha * v;
    }
}

/// Galerkin product `P^T A P` where `P` is given by sparse columns.
/// Rows/cols of the result index the columns of `P`.
pub fn galerkin_product(a: &CsrMatrix, p_cols: &[SparseVec]) -> CsrMatrix {
    let n = a.nrows();
    let m = p_cols.len();
    // inverted index: dof row -> [(col k, value)]
    let mut inverted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, col) in p_cols.iter().enumerate() {
        for &(r, v) in col {
            inverted[r].push((k, v));
        }
    }
    let mut scatter = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut acc = vec![0.0f64; m];
    let mut acc_touched: Vec<usize> = Vec::new();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (j, col) in p_cols.iter().enumerate() {
        // w = A * p_j (sparse)
        for &(r, v) in col {
            let (cols, vals) = a.row(r);
            for (c, av) in cols.iter().zip(vals) {
                if scatter[*c] == 0.0 && !touched.contains(c) {
                    touched.push(*c);
                }
                scatter[*c] += av * v;
            }
        }
        // entries (k, j) = p_k . w
        for &r in &touched {
            let w = scatter[r];
            if w == 0.0 {
                continue;
            }
            for &(k, pv) in &inverted[r] {
                if acc[k] == 0.0 && !acc_touched.contains(&k) {
                    acc_touched.push(k);
                }
                acc[k] += pv * w;
            }
        }
        acc_touched.sort_unstable();
        for &k in &acc_touched {
            if acc[k] != 0.0 {
                triplets.push((k, j, acc[k]));
            }
            acc[k] = 0.0;
        }
        acc_touched.clear();
        for &r in &touched {
            scatter[r] = 0.0;
        }
        touched.clear();
    }
    CsrMatrix::from_triplets(m, m, &triplets)
}

/// Solve `(L + D) y = r` in place of the strictly-lower + diagonal part of `a`.
pub fn forward_substitute(a: &CsrMatrix, r: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut acc = r[i];
        let mut diag = 0.0;
        for (c, v) in cols.iter().zip(vals) {
            if *c < i {
                acc -= v * y[*c];
            } else if *c == i {
                diag = *v;
            }
        }
        assert!(diag != 0.0, "zero diagonal at row {i}");
        y[i] = acc / diag;
    }
    y
}

/// Solve `(D + U) z = r` with the diagonal + strictly-upper part of `a`.
pub fn backward_substitute(a: &CsrMatrix, r: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let (cols, vals) = a.row(i);
        let mut acc = r[i];
        let mut diag = 0.0;
        for (c, v) in cols.iter().zip(vals) {
            if *c > i {
                acc -= v * z[*c];
            } else if *c == i {
                diag = *v;
            }
        }
        assert!(diag != 0.0, "zero diagonal at row {i}");
        z[i] = acc / diag;
    }
    z
}

/// MatrixMarket coordinate-format export (1-based indices).
pub fn to_matrix_market(a: &CsrMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", a.nrows(), a.ncols(), a.nnz()));
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (c, v) in cols.iter().zip(vals) {
            out.push_str(&format!("{} {} {:.17e}\n", i + 1, c + 1, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn spmv() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -2.0]);
    }

    #[test]
    fn galerkin_product_small() {
        // A = [[2,1],[1,2]], P = [[1],[1]] -> P^T A P = [6]
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let p = vec![vec![(0, 1.0), (1, 1.0)]];
        let g = galerkin_product(&a, &p);
        assert_eq!(g.nrows(), 1);
        assert!((g.get(0, 0) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn triangular_solves() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)],
        );
        let y = forward_substitute(&a, &[2.0, 5.0]);
        assert_eq!(y, vec![1.0, 2.0]);
        let z = backward_substitute(&a, &[4.0, 2.0]);
        assert_eq!(z, vec![1.5, 1.0]);
    }

    #[test]
    fn restriction() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 5.0), (2, 0, 5.0)],
        );
        let r = a.restrict(&[0, 2]);
        assert_eq!(r.nrows(), 2);
        assert_eq!(r.get(0, 1), 5.0);
        assert_eq!(r.get(1, 1), 3.0);
    }
}
