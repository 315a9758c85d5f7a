use crate::error::{Error, Result};

/// Row-compressed sparse matrix with no stored zeros.
///
/// Column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Rejects out-of-range indices, duplicates, explicit zeros and non-finite values.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, v) in &sorted {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Validation(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("a[{r}][{c}]")));
            }
            if v == 0.0 {
                return Err(Error::Validation(format!("explicit zero stored at ({r}, {c})")));
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::Validation(format!(
                "duplicate entry at ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &sorted {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx: sorted.iter().map(|t| t.1).collect(),
            values: sorted.iter().map(|t| t.2).collect(),
        })
    }

    /// Builds a matrix from dense rows, skipping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    what: "dense row length",
                    expected: n_cols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), n_cols, &trip)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        self.row(i).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    /// `A · x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `Aᵀ · y`
    pub fn mul_transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.n_rows);
        let mut out = vec![0.0; self.n_cols];
        for (i, &yi) in y.iter().enumerate() {
            for (j, v) in self.row(i) {
                out[j] += v * yi;
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let trip: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.n_cols, self.n_rows, &trip)
            .expect("transpose of a valid matrix is valid")
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_cols];
        for &j in &self.col_idx {
            deg[j] += 1;
        }
        deg
    }

    /// Returns a copy with row `i` removed.
    pub fn without_row(&self, i: usize) -> SparseMatrix {
        let trip: Vec<_> = self
            .triplets()
            .into_iter()
            .filter(|t| t.0 != i)
            .map(|(r, c, v)| (if r > i { r - 1 } else { r }, c, v))
            .collect();
        SparseMatrix::from_triplets(self.n_rows - 1, self.n_cols, &trip)
            .expect("row removal keeps a valid matrix")
    }

    /// Returns a copy with a new row inserted at position `i`.
    pub fn with_row_inserted(&self, i: usize, entries: &[(usize, f64)]) -> Result<SparseMatrix> {
        let mut trip: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (if r >= i { r + 1 } else { r }, c, v))
            .collect();
        trip.extend(entries.iter().map(|&(c, v)| (i, c, v)));
        SparseMatrix::from_triplets(self.n_rows + 1, self.n_cols, &trip)
    }

    /// Returns a copy with row `i` replaced by `entries`.
    pub fn with_row_replaced(&self, i: usize, entries: &[(usize, f64)]) -> Result<SparseMatrix> {
        self.without_row(i).with_row_inserted(i, entries)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_explicit_zero_and_duplicates() {
        assert!(SparseMatrix::from_triplets(1, 1, &[(0, 0, 0.0)]).is_err());
        assert!(SparseMatrix::from_triplets(1, 2, &[(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        assert!(SparseMatrix::from_triplets(1, 1, &[(0, 0, f64::NAN)]).is_err());
        assert!(SparseMatrix::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let dense = vec![vec![1.0, 0.0, 2.0], vec![0.0, -3.0, 0.5]];
        let a = SparseMatrix::from_dense(&dense).unwrap();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -4.5]);
        assert_eq!(a.mul_transpose_vec(&[1.0, 2.0]), vec![1.0, -6.0, 3.0]);
        assert_eq!(a.transpose().to_dense()[2], vec![2.0, 0.5]);
        assert_eq!(a.row_degrees(), vec![2, 2]);
        assert_eq!(a.col_degrees(), vec![1, 1, 2]);
    }

    #[test]
    fn row_surgery() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = a.without_row(1);
        assert_eq!(b.to_dense(), vec![vec![1.0, 0.0], vec![3.0, 4.0]]);
        let c = b.with_row_inserted(1, &[(0, 9.0)]).unwrap();
        assert_eq!(c.to_dense(), vec![vec![1.0, 0.0], vec![9.0, 0.0], vec![3.0, 4.0]]);
        assert_eq!(a.with_row_replaced(1, &[(0, 9.0)]).unwrap(), c);
    }
}
