//! Compressed sparse row matrices.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Accumulates `(i, j, value)` contributions; repeated entries are summed in
/// insertion order, so assembly is deterministic.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.nrows && j < self.ncols, "entry ({i}, {j}) out of bounds");
        *self.entries.entry((i, j)).or_insert(0.0) += value;
    }

    pub fn build(self) -> CsrMatrix {
        let mut row_ptr = vec![0; self.nrows + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        for (&(i, j), &v) in &self.entries {
            row_ptr[i + 1] += 1;
            cols.push(j);
            values.push(v);
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            cols,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.build()
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut b = TripletBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    b.add(i, j, m[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_fn(self.nrows.min(self.ncols), |i, _| self.get(i, i))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols);
        DVector::from_fn(self.nrows, |i, _| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.triplets().map(|(i, j, v)| x[i] * v * y[j]).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = TripletBuilder::new(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            t.add(i, j, a * v);
        }
        for (i, j, v) in other.triplets() {
            t.add(i, j, b * v);
        }
        t.build()
    }

    /// Rows `rows` and columns `cols`, renumbered in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            col_map[j] = k;
        }
        let mut t = TripletBuilder::new(rows.len(), cols.len());
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if col_map[j] != usize::MAX {
                    t.add(r, col_map[j], v);
                }
            }
        }
        t.build()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Half-bandwidth `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.triplets().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }
}
