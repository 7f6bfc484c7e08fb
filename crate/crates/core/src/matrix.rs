//! Compressed-row sparse matrices.
//!
//! Only the coordinate structure matters to the simulator; values ride along
//! when the source provides them and are never interpreted.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

/// A 2D sparse matrix in CSR form with strictly increasing column
/// coordinates in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_starts: Vec<usize>,
    col_indices: Vec<usize>,
    values: Option<Vec<f64>>,
}

impl SparseMatrix {
    /// Build from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_starts: Vec<usize>,
        col_indices: Vec<usize>,
        values: Option<Vec<f64>>,
    ) -> Result<Self> {
        if row_starts.len() != rows + 1 {
            return Err(Error::InvalidMatrix("row_starts must have rows + 1 entries"));
        }
        if row_starts[0] != 0 || row_starts[rows] != col_indices.len() {
            return Err(Error::InvalidMatrix("row_starts must span 0..nnz"));
        }
        if let Some(v) = &values {
            if v.len() != col_indices.len() {
                return Err(Error::InvalidMatrix("values length differs from nnz"));
            }
        }
        for r in 0..rows {
            let (lo, hi) = (row_starts[r], row_starts[r + 1]);
            if lo > hi {
                return Err(Error::InvalidMatrix("row_starts must be non-decreasing"));
            }
            let row = &col_indices[lo..hi];
            for (i, &c) in row.iter().enumerate() {
                if c >= cols {
                    return Err(Error::OutOfBounds { row: r, col: c, rows, cols });
                }
                if i > 0 && row[i - 1] >= c {
                    return Err(if row[i - 1] == c {
                        Error::DuplicateEntry { row: r, col: c }
                    } else {
                        Error::InvalidMatrix("column coordinates must be sorted")
                    });
                }
            }
        }
        Ok(Self { rows, cols, row_starts, col_indices, values })
    }

    /// Build a pattern-only matrix from unordered coordinates.
    pub fn from_coords(rows: usize, cols: usize, coords: &[(usize, usize)]) -> Result<Self> {
        let entries: Vec<_> = coords.iter().map(|&(r, c)| (r, c, 1.0)).collect();
        let mut m = Self::from_triplets(rows, cols, entries)?;
        m.values = None;
        Ok(m)
    }

    /// Build from unordered `(row, col, value)` triplets. Duplicates are an
    /// error rather than being summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, _) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::OutOfBounds { row: r, col: c, rows, cols });
            }
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateEntry { row: w[0].0, col: w[0].1 });
        }
        let mut row_starts = vec![0; rows + 1];
        for &(r, _, _) in &entries {
            row_starts[r + 1] += 1;
        }
        for r in 0..rows {
            row_starts[r + 1] += row_starts[r];
        }
        let col_indices = entries.iter().map(|e| e.1).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Ok(Self { rows, cols, row_starts, col_indices, values: Some(values) })
    }

    /// Assemble from per-row sorted column lists. Callers guarantee sortedness.
    pub(crate) fn from_sorted_rows(rows: usize, cols: usize, row_cols: Vec<Vec<usize>>) -> Self {
        debug_assert_eq!(row_cols.len(), rows);
        let mut row_starts = Vec::with_capacity(rows + 1);
        row_starts.push(0);
        let nnz = row_cols.iter().map(Vec::len).sum();
        let mut col_indices = Vec::with_capacity(nnz);
        for r in row_cols {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_indices.extend_from_slice(&r);
            row_starts.push(col_indices.len());
        }
        Self { rows, cols, row_starts, col_indices, values: None }
    }

    /// The `n`×`n` identity pattern.
    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_starts: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: None,
        }
    }

    /// A fully populated pattern.
    pub fn dense(rows: usize, cols: usize) -> Self {
        let row_cols = (0..rows).map(|_| (0..cols).collect()).collect();
        Self::from_sorted_rows(rows, cols, row_cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Total coordinate-space size, `rows · cols`.
    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn row_starts(&self) -> &[usize] {
        &self.row_starts
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    /// Sorted column coordinates of row `r`.
    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_indices[self.row_starts[r]..self.row_starts[r + 1]]
    }

    /// All nonzero coordinates in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).iter().map(move |&c| (r, c)))
    }

    /// Average nonzero density `nnz / (rows · cols)`.
    pub fn density(&self) -> Result<f64> {
        if self.size() == 0 {
            return Err(Error::EmptyShape);
        }
        Ok(self.nnz() as f64 / self.size() as f64)
    }

    /// Number of nonzeros in the half-open window `rows × cols`.
    ///
    /// Cost is one binary search pair per row in the window, independent of
    /// how many nonzeros the matrix holds elsewhere.
    pub fn count_in_window(&self, rows: Range<usize>, cols: Range<usize>) -> Result<usize> {
        if rows.start > rows.end || cols.start > cols.end || rows.end > self.rows || cols.end > self.cols
        {
            return Err(Error::InvalidWindow);
        }
        Ok(self.count_in_window_unchecked(rows, cols))
    }

    pub(crate) fn count_in_window_unchecked(&self, rows: Range<usize>, cols: Range<usize>) -> usize {
        if cols.start == cols.end {
            return 0;
        }
        if cols.start == 0 && cols.end == self.cols {
            return self.row_starts[rows.end] - self.row_starts[rows.start];
        }
        rows.map(|r| {
            let row = self.row(r);
            let lo = row.partition_point(|&c| c < cols.start);
            let hi = row.partition_point(|&c| c < cols.end);
            hi - lo
        })
        .sum()
    }

    /// The transposed matrix (values carried along).
    /// The same sparsity pattern with values dropped.
    pub fn pattern(&self) -> Self {
        Self { values: None, ..self.clone() }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let row_starts = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = self.values.as_ref().map(|_| vec![0.0; self.nnz()]);
        for r in 0..self.rows {
            for pos in self.row_starts[r]..self.row_starts[r + 1] {
                let c = self.col_indices[pos];
                let dst = next[c];
                next[c] += 1;
                col_indices[dst] = r;
                if let (Some(out), Some(src)) = (values.as_mut(), self.values.as_ref()) {
                    out[dst] = src[pos];
                }
            }
        }
        Self { rows: self.cols, cols: self.rows, row_starts, col_indices, values }
    }

    /// Same coordinate structure, ignoring values.
    pub fn same_pattern(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.row_starts == other.row_starts
            && self.col_indices == other.col_indices
    }
}
