//! Compressed sparse row storage for incidence and weighted operators.

use serde::{Deserialize, Serialize};
use std::ops::{AddAssign, Mul};

/// A CSR matrix. Row entries are kept sorted by column index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Copy + PartialEq + Default + AddAssign> SparseMatrix<T> {
    /// Assembles from (row, col, value) triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < row.len() {
                let col = row[i].0;
                let mut acc = row[i].1;
                let mut j = i + 1;
                while j < row.len() && row[j].0 == col {
                    acc += row[j].1;
                    j += 1;
                }
                if acc != T::default() {
                    indices.push(col);
                    values.push(acc);
                }
                i = j;
            }
            indptr.push(indices.len());
        }
        SparseMatrix { nrows, ncols, indptr, indices, values }
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

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                out.push((r, c, v));
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => T::default(),
        }
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &trip)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::default(); self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    pub fn map<U, F>(&self, f: F) -> SparseMatrix<U>
    where
        F: Fn(T) -> U,
    {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T> SparseMatrix<T>
where
    T: Copy + PartialEq + Default + AddAssign,
{
    /// `y = A x` for any scalar type the entries convert into.
    pub fn mul_vec<S>(&self, x: &[S]) -> Vec<S>
    where
        S: Copy + Default + AddAssign + Mul<Output = S> + From<T>,
    {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let mut acc = S::default();
                for (c, v) in self.row(r) {
                    acc += S::from(v) * x[c];
                }
                acc
            })
            .collect()
    }

    /// `y = Aᵀ x`, accumulated in fixed row order.
    pub fn tr_mul_vec<S>(&self, x: &[S]) -> Vec<S>
    where
        S: Copy + Default + AddAssign + Mul<Output = S> + From<T>,
    {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![S::default(); self.ncols];
        for r in 0..self.nrows {
            let xr = x[r];
            for (c, v) in self.row(r) {
                y[c] += S::from(v) * xr;
            }
        }
        y
    }
}

/// Dense product of two small integer matrices, used in tests and audits.
pub fn dense_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let inner = b.len();
    let mut out = vec![vec![0i64; m]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            if aik == 0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}
