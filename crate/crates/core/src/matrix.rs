//! Compressed sparse-column design matrix and dense weight vector.
//!
//! Every kernel in the solver and the clustering heuristic walks feature
//! columns, so the design is stored column-major. Each column keeps its row
//! indices strictly increasing, which makes two-column inner products a
//! linear merge and lets the solver slice a column by row range.

use crate::error::{Error, Result};

/// Compressed sparse-column matrix with `n_rows` samples and `n_cols` features.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    sq_norms: Vec<f64>,
}

/// Borrowed view of one column: parallel slices of row indices and values.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    pub rows: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> Column<'a> {
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.rows.iter().copied().zip(self.values.iter().copied())
    }

    /// Sub-slice of entries whose row lies in `start..end`.
    pub fn row_range(&self, start: usize, end: usize) -> Column<'a> {
        let lo = self.rows.partition_point(|&r| r < start);
        let hi = self.rows.partition_point(|&r| r < end);
        Column {
            rows: &self.rows[lo..hi],
            values: &self.values[lo..hi],
        }
    }
}

/// Per-column scale factors produced by [`SparseColMatrix::normalize_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaling {
    /// Original l2 norm of each column (1.0 for empty columns).
    pub scales: Vec<f64>,
    /// Columns that had no stored entries and were left untouched.
    pub empty: Vec<bool>,
}

impl ColumnScaling {
    /// Maps weights fitted on the normalized design back to the original
    /// column scale, so that `X_orig * w_orig == X_norm * w_norm`.
    pub fn to_original(&self, weights: &WeightVector) -> WeightVector {
        let values = weights
            .values()
            .iter()
            .zip(&self.scales)
            .map(|(&w, &s)| w / s)
            .collect();
        WeightVector::from_vec(values).expect("finite weights stay finite under positive scaling")
    }
}

fn sum_squares(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

impl SparseColMatrix {
    /// Builds a matrix from per-column `(row, value)` lists.
    ///
    /// Rows must be strictly increasing within each column and every value
    /// must be finite and nonzero.
    pub fn from_columns(n_rows: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n_cols = columns.len();
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(n_cols + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for (j, col) in columns.into_iter().enumerate() {
            let mut prev: Option<usize> = None;
            for (r, v) in col {
                if r >= n_rows {
                    return Err(Error::usage(format!(
                        "column {j}: row index {r} out of range for {n_rows} rows"
                    )));
                }
                if prev.is_some_and(|p| r <= p) {
                    return Err(Error::usage(format!(
                        "column {j}: row indices not strictly increasing at row {r}"
                    )));
                }
                if !v.is_finite() || v == 0.0 {
                    return Err(Error::usage(format!(
                        "column {j}, row {r}: stored values must be finite and nonzero, got {v}"
                    )));
                }
                prev = Some(r);
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self::from_raw_parts(n_rows, col_ptr, row_idx, values))
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are rejected.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut columns = vec![Vec::new(); n_cols];
        for &(r, c, v) in triplets {
            if c >= n_cols {
                return Err(Error::usage(format!(
                    "column index {c} out of range for {n_cols} columns"
                )));
            }
            columns[c].push((r, v));
        }
        for (j, col) in columns.iter_mut().enumerate() {
            col.sort_by_key(|&(r, _)| r);
            if col.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::usage(format!("duplicate entry in column {j}")));
            }
        }
        Self::from_columns(n_rows, columns)
    }

    /// Builds a matrix from dense rows, skipping exact zeros.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::usage("dense rows have unequal lengths"));
        }
        let columns = (0..n_cols)
            .map(|j| {
                rows.iter()
                    .enumerate()
                    .filter(|(_, row)| row[j] != 0.0)
                    .map(|(i, row)| (i, row[j]))
                    .collect()
            })
            .collect();
        Self::from_columns(n_rows, columns)
    }

    // Callers guarantee the CSC invariants.
    pub(crate) fn from_raw_parts(
        n_rows: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let n_cols = col_ptr.len() - 1;
        let sq_norms = (0..n_cols)
            .map(|j| sum_squares(&values[col_ptr[j]..col_ptr[j + 1]]))
            .collect();
        Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
            sq_norms,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Total number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> Column<'_> {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        Column {
            rows: &self.row_idx[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    #[inline]
    pub fn column_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    /// Cached squared l2 norm of column `j`.
    #[inline]
    pub fn column_sq_norm(&self, j: usize) -> f64 {
        self.sq_norms[j]
    }

    pub fn column_sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    pub fn is_empty_column(&self, j: usize) -> bool {
        self.column_nnz(j) == 0
    }

    fn check_col(&self, j: usize) -> Result<()> {
        if j >= self.n_cols {
            return Err(Error::usage(format!(
                "feature index {j} out of range for {} features",
                self.n_cols
            )));
        }
        Ok(())
    }

    /// Inner product of feature columns `i` and `j`.
    pub fn column_dot(&self, i: usize, j: usize) -> Result<f64> {
        self.check_col(i)?;
        self.check_col(j)?;
        Ok(self.column_dot_unchecked(i, j))
    }

    /// Inner product without bounds validation; panics on out-of-range indices.
    pub fn column_dot_unchecked(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.sq_norms[i];
        }
        // Canonical pair order keeps the result bit-identical under swapping.
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        sparse_dot(self.column(a), self.column(b))
    }

    /// Dense product `X w`.
    pub fn predictions(&self, w: &WeightVector) -> Result<Vec<f64>> {
        if w.len() != self.n_cols {
            return Err(Error::usage(format!(
                "weight length {} does not match {} features",
                w.len(),
                self.n_cols
            )));
        }
        let mut out = vec![0.0; self.n_rows];
        for (j, &wj) in w.values().iter().enumerate() {
            if wj != 0.0 {
                self.column(j).axpy_into(wj, &mut out);
            }
        }
        Ok(out)
    }

    /// Scales every nonempty column to unit l2 norm.
    pub fn normalize_columns(&self) -> (SparseColMatrix, ColumnScaling) {
        let mut values = self.values.clone();
        let mut scales = vec![1.0; self.n_cols];
        let mut empty = vec![false; self.n_cols];
        for j in 0..self.n_cols {
            let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
            if lo == hi {
                empty[j] = true;
                continue;
            }
            let sq = self.sq_norms[j];
            if sq == 1.0 {
                continue;
            }
            let norm = sq.sqrt();
            scales[j] = norm;
            for v in &mut values[lo..hi] {
                *v /= norm;
            }
        }
        let m = Self::from_raw_parts(self.n_rows, self.col_ptr.clone(), self.row_idx.clone(), values);
        (m, ColumnScaling { scales, empty })
    }

    /// Row-major view: for each row, its `(column, value)` entries in column order.
    pub fn to_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n_rows];
        for j in 0..self.n_cols {
            for (r, v) in self.column(j).iter() {
                rows[r].push((j, v));
            }
        }
        rows
    }
}

impl Column<'_> {
    /// `out += alpha * column`.
    #[inline]
    pub fn axpy_into(&self, alpha: f64, out: &mut [f64]) {
        for (&r, &v) in self.rows.iter().zip(self.values) {
            out[r] += alpha * v;
        }
    }
}

/// Merge-based dot product of two sorted sparse columns.
pub(crate) fn sparse_dot(a: Column<'_>, b: Column<'_>) -> f64 {
    let (mut ia, mut ib) = (0, 0);
    let mut acc = 0.0;
    while ia < a.rows.len() && ib < b.rows.len() {
        let (ra, rb) = (a.rows[ia], b.rows[ib]);
        if ra == rb {
            acc += a.values[ia] * b.values[ib];
            ia += 1;
            ib += 1;
        } else if ra < rb {
            ia += 1;
        } else {
            ib += 1;
        }
    }
    acc
}

/// Dense weight vector with an exact nonzero count.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    nnz: usize,
}

impl WeightVector {
    pub fn zeros(p: usize) -> Self {
        Self {
            values: vec![0.0; p],
            nnz: 0,
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::usage(format!("weight {j} is not finite")));
        }
        let nnz = values.iter().filter(|&&v| v != 0.0).count();
        Ok(Self { values, nnz })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Sets entry `j`, keeping the nonzero count exact.
    #[inline]
    pub fn set(&mut self, j: usize, value: f64) {
        let old = self.values[j];
        match (old != 0.0, value != 0.0) {
            (false, true) => self.nnz += 1,
            (true, false) => self.nnz -= 1,
            _ => {}
        }
        self.values[j] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_pair() -> SparseColMatrix {
        SparseColMatrix::from_columns(6, vec![vec![(0, 1.0), (2, 2.0)], vec![(2, 3.0), (5, 1.0)]])
            .unwrap()
    }

    #[test]
    fn dot_over_shared_row() {
        let m = col_pair();
        assert_eq!(m.column_dot(0, 1).unwrap(), 6.0);
        assert_eq!(m.column_dot(1, 0).unwrap(), 6.0);
    }

    #[test]
    fn dot_disjoint_support_is_zero() {
        let m = SparseColMatrix::from_columns(4, vec![vec![(0, 1.0)], vec![(3, 2.0)]]).unwrap();
        assert_eq!(m.column_dot(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn self_dot_is_cached_norm() {
        let m = col_pair();
        assert_eq!(m.column_dot(0, 0).unwrap(), 5.0);
        assert_eq!(m.column_dot(1, 1).unwrap(), m.column_sq_norm(1));
    }

    #[test]
    fn dot_out_of_range() {
        assert!(matches!(col_pair().column_dot(0, 2), Err(Error::Usage(_))));
    }

    #[test]
    fn rejects_unsorted_and_zero_entries() {
        assert!(SparseColMatrix::from_columns(3, vec![vec![(2, 1.0), (1, 1.0)]]).is_err());
        assert!(SparseColMatrix::from_columns(3, vec![vec![(1, 0.0)]]).is_err());
        assert!(SparseColMatrix::from_columns(3, vec![vec![(3, 1.0)]]).is_err());
        assert!(SparseColMatrix::from_columns(3, vec![vec![(0, f64::NAN)]]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let m = SparseColMatrix::from_columns(
            3,
            vec![vec![(0, 1.0)], vec![(1, 2.0)], vec![(0, 3.0), (2, 4.0)], vec![]],
        )
        .unwrap();
        let (n, s) = m.normalize_columns();
        assert_eq!(s.scales, vec![1.0, 2.0, 5.0, 1.0]);
        assert_eq!(s.empty, vec![false, false, false, true]);
        assert_eq!(n.column(0).values, &[1.0]);
        assert_eq!(n.column(1).values, &[1.0]);
        assert!((n.column(2).values[0] - 0.6).abs() < 1e-15);
        assert!((n.column(2).values[1] - 0.8).abs() < 1e-15);
        for j in 0..3 {
            assert!((n.column_sq_norm(j) - 1.0).abs() < 1e-10);
        }
        assert!(n.is_empty_column(3));
    }

    #[test]
    fn predictions_examples() {
        let m = SparseColMatrix::from_dense_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let w = WeightVector::from_vec(vec![1.0, 1.0]).unwrap();
        assert_eq!(m.predictions(&w).unwrap(), vec![3.0, 7.0]);
        assert_eq!(m.predictions(&WeightVector::zeros(2)).unwrap(), vec![0.0, 0.0]);
        let e1 = WeightVector::from_vec(vec![0.0, 1.0]).unwrap();
        assert_eq!(m.predictions(&e1).unwrap(), vec![2.0, 4.0]);
        assert!(m.predictions(&WeightVector::zeros(3)).is_err());
    }

    #[test]
    fn weight_nnz_tracks_sets() {
        let mut w = WeightVector::zeros(4);
        w.set(1, 2.0);
        w.set(3, -1.0);
        w.set(1, 0.0);
        w.set(3, 5.0);
        assert_eq!(w.nnz(), 1);
        assert_eq!(w.l1_norm(), 5.0);
    }

    #[test]
    fn row_range_slices_by_row() {
        let m = SparseColMatrix::from_columns(10, vec![vec![(1, 1.0), (4, 2.0), (7, 3.0)]]).unwrap();
        let c = m.column(0).row_range(2, 8);
        assert_eq!(c.rows, &[4, 7]);
        assert_eq!(c.values, &[2.0, 3.0]);
    }

    #[test]
    fn scaling_maps_back_to_original() {
        let m = SparseColMatrix::from_dense_rows(&[vec![3.0, 0.0], vec![4.0, 2.0]]).unwrap();
        let (n, s) = m.normalize_columns();
        let w = WeightVector::from_vec(vec![1.5, -2.0]).unwrap();
        let orig = s.to_original(&w);
        let a = n.predictions(&w).unwrap();
        let b = m.predictions(&orig).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
