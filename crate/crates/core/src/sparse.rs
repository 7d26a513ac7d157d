//! Minimal compressed-sparse-row matrix with the products the SVD needs.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row `(column, value)` lists. Columns within a row must
    /// be strictly increasing.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in &rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for &(c, v) in row {
                assert!(c < n_cols, "column {c} out of bounds ({n_cols})");
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n_rows: rows.len(),
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(m.ncols(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.n_rows
    }

    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Select rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        Self::from_rows(self.n_cols, rows.iter().map(|&i| self.row(i).collect()).collect())
    }

    /// `self * x` for dense `x` (`n_cols x k`).
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_cols);
        let k = x.ncols();
        let mut out = DMatrix::zeros(self.n_rows, k);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                for c in 0..k {
                    out[(i, c)] += v * x[(j, c)];
                }
            }
        }
        out
    }

    /// `selfᵀ * y` for dense `y` (`n_rows x k`).
    pub fn tr_mul_dense(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(y.nrows(), self.n_rows);
        let k = y.ncols();
        let mut out = DMatrix::zeros(self.n_cols, k);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                for c in 0..k {
                    out[(j, c)] += v * y[(i, c)];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let d = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, -3.0, 0.5]);
        let s = CsrMatrix::from_dense(&d);
        assert_eq!(s.nnz(), 4);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(s.mul_dense(&x), &d * &x);
        let y = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]);
        assert_eq!(s.tr_mul_dense(&y), d.transpose() * &y);
        assert_eq!(s.to_dense(), d);
        assert_eq!(s.select_rows(&[1, 0]).to_dense().row(0), d.row(1));
    }
}
