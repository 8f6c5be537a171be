//! Compressed sparse row matrices over `f64`.
//!
//! Only the handful of kernels the propagation and influence code needs:
//! sparse × dense, sparse × sparse, scaled sums and transposition. Column
//! indices inside a row are kept strictly increasing by every constructor.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking the structural invariants.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(offsets.len(), n_rows + 1);
        assert_eq!(indices.len(), values.len());
        assert_eq!(*offsets.last().unwrap(), indices.len());
        for r in 0..n_rows {
            let cols = &indices[offsets[r]..offsets[r + 1]];
            assert!(cols.windows(2).all(|w| w[0] < w[1]), "row {r} not sorted");
            assert!(cols.iter().all(|&c| c < n_cols), "row {r} out of bounds");
        }
        Self {
            n_rows,
            n_cols,
            offsets,
            indices,
            values,
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut offsets = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            offsets[r + 1] += offsets[r];
        }
        Self {
            n_rows,
            n_cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(dense: ArrayView2<'_, f64>) -> Self {
        let (n_rows, n_cols) = dense.dim();
        let mut offsets = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in dense.rows() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            n_rows,
            n_cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_iter(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (cols, vals) = self.row(r);
        cols.iter().copied().zip(vals.iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().sum())
            .collect()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for r in 0..self.n_rows {
            for (c, v) in self.row_iter(r) {
                out[[r, c]] = v;
            }
        }
        out
    }

    /// Returns a copy with every stored value transformed by `f`; entries
    /// mapped to exactly zero are dropped.
    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        let mut offsets = Vec::with_capacity(self.n_rows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        offsets.push(0);
        for r in 0..self.n_rows {
            for (c, v) in self.row_iter(r) {
                let w = f(r, c, v);
                if w != 0.0 {
                    indices.push(c);
                    values.push(w);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_values(|_, _, v| a * v)
    }

    /// `self + b * other`, merged row by row. Exact zeros are not stored.
    pub fn add_scaled(&self, other: &CsrMatrix, b: f64) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut offsets = Vec::with_capacity(self.n_rows + 1);
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(indices.capacity());
        offsets.push(0);
        fn push(indices: &mut Vec<usize>, values: &mut Vec<f64>, c: usize, v: f64) {
            if v != 0.0 {
                indices.push(c);
                values.push(v);
            }
        }
        for r in 0..self.n_rows {
            let (ac, av) = self.row(r);
            let (bc, bv) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ac.len() || j < bc.len() {
                if j == bc.len() || (i < ac.len() && ac[i] < bc[j]) {
                    push(&mut indices, &mut values, ac[i], av[i]);
                    i += 1;
                } else if i == ac.len() || bc[j] < ac[i] {
                    push(&mut indices, &mut values, bc[j], b * bv[j]);
                    j += 1;
                } else {
                    push(&mut indices, &mut values, ac[i], av[i] + b * bv[j]);
                    i += 1;
                    j += 1;
                }
            }
            offsets.push(indices.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            offsets,
            indices,
            values,
        }
    }

    /// Sparse × sparse product using a dense accumulator per output row.
    pub fn matmul(&self, rhs: &CsrMatrix) -> Self {
        assert_eq!(self.n_cols, rhs.n_rows, "inner dimensions differ");
        let n_cols = rhs.n_cols;
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.n_rows)
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; n_cols], vec![false; n_cols]),
                |(acc, seen), r| {
                    let mut touched = Vec::new();
                    for (k, a) in self.row_iter(r) {
                        for (c, b) in rhs.row_iter(k) {
                            if !seen[c] {
                                seen[c] = true;
                                touched.push(c);
                            }
                            acc[c] += a * b;
                        }
                    }
                    touched.sort_unstable();
                    let mut cols = Vec::with_capacity(touched.len());
                    let mut vals = Vec::with_capacity(touched.len());
                    for c in touched {
                        let v = acc[c];
                        acc[c] = 0.0;
                        seen[c] = false;
                        if v != 0.0 {
                            cols.push(c);
                            vals.push(v);
                        }
                    }
                    (cols, vals)
                },
            )
            .collect();
        let mut offsets = Vec::with_capacity(self.n_rows + 1);
        offsets.push(0);
        let total = rows.iter().map(|r| r.0.len()).sum();
        let mut indices = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        for (cols, vals) in rows {
            indices.extend(cols);
            values.extend(vals);
            offsets.push(indices.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols,
            offsets,
            indices,
            values,
        }
    }

    /// Sparse × dense product, parallel over output rows.
    pub fn mul_dense(&self, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(self.n_cols, rhs.nrows(), "inner dimensions differ");
        let mut out = Array2::zeros((self.n_rows, rhs.ncols()));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(r, mut row)| {
                for (k, a) in self.row_iter(r) {
                    row.scaled_add(a, &rhs.row(k));
                }
            });
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0f64; self.nnz()];
        for r in 0..self.n_rows {
            for (c, v) in self.row_iter(r) {
                let slot = cursor[c];
                indices[slot] = r;
                values[slot] = v;
                cursor[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            offsets,
            indices,
            values,
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        let t = self.transpose();
        t.indices == self.indices
            && t.offsets == self.offsets
            && t.values
                .iter()
                .zip(&self.values)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}
