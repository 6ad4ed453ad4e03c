//! Compressed sparse row matrices with deterministic assembly.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

const MIN_ROWS_PER_TASK: usize = 512;

/// Square sparse matrix. The diagonal is stored densely and separately from
/// the off-diagonal CSR part; products add the diagonal term last.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries in `(row, col)` order, then in input order, so
    /// the result does not depend on how the triplets were produced as long
    /// as their sequence is fixed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseMatrix {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut diag = vec![0.0; n];
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if i == j {
                diag[i] += v;
                continue;
            }
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
            diag,
        }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            diag: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal entries plus `n`.
    pub fn nnz(&self) -> usize {
        self.vals.len() + self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i` as `(column, value)`, columns
    /// increasing.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Replaces the diagonal by the negated off-diagonal row sums, so that
    /// `A·𝟙 = 0` holds exactly under [`SparseMatrix::mul_vec`].
    pub fn set_diag_to_negated_row_sums(&mut self) {
        for i in 0..self.n {
            let mut s = 0.0;
            for (_, v) in self.row(i) {
                s += v;
            }
            self.diag[i] = -s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.par_iter_mut()
            .with_min_len(MIN_ROWS_PER_TASK)
            .enumerate()
            .for_each(|(i, yi)| {
                let mut s = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.vals[k] * x[self.cols[k]];
                }
                *yi = s + self.diag[i] * x[i];
            });
    }

    pub fn max_abs(&self) -> f64 {
        self.vals
            .iter()
            .chain(&self.diag)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.diag[i].abs() + self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Bitwise symmetry of the stored entries.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }

    /// `D·A·D` for a diagonal `D = diag(d)`.
    pub fn scale_symmetric(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] = d[i] * self.vals[k] * d[self.cols[k]];
            }
            out.diag[i] = d[i] * self.diag[i] * d[i];
        }
        out
    }

    /// `A + s·diag(d)`.
    pub fn add_diag(&self, s: f64, d: &[f64]) -> SparseMatrix {
        let mut out = self.clone();
        for (a, b) in out.diag.iter_mut().zip(d) {
            *a += s * b;
        }
        out
    }

    /// Zeroes the rows and columns flagged in `constrained` and puts 1 on
    /// their diagonal.
    pub fn masked(&self, constrained: &[bool]) -> SparseMatrix {
        assert_eq!(constrained.len(), self.n);
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        let mut diag = self.diag.clone();
        for i in 0..self.n {
            if constrained[i] {
                diag[i] = 1.0;
            } else {
                for (j, v) in self.row(i) {
                    if !constrained[j] {
                        cols.push(j);
                        vals.push(v);
                    }
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        SparseMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
            diag,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            d[(i, i)] = self.diag[i];
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// MatrixMarket `coordinate real general` text, 1-based, with
    /// round-trip exact values.
    pub fn write_matrix_market(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            let mut wrote_diag = false;
            for (j, v) in self.row(i) {
                if !wrote_diag && j > i {
                    writeln!(out, "{} {} {:?}", i + 1, i + 1, self.diag[i])?;
                    wrote_diag = true;
                }
                writeln!(out, "{} {} {:?}", i + 1, j + 1, v)?;
            }
            if !wrote_diag {
                writeln!(out, "{} {} {:?}", i + 1, i + 1, self.diag[i])?;
            }
        }
        Ok(())
    }
}

/// Rectangular CSR matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from rows given in order, each as `(column, value)` pairs.
    pub fn from_rows(cols: usize, rows: impl IntoIterator<Item = Vec<(usize, f64)>>) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for mut r in rows {
            r.sort_by_key(|&(j, _)| j);
            for (j, v) in r {
                assert!(j < cols);
                col_idx.push(j);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            rows: row_ptr.len() - 1,
            cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok((0..self.rows)
            .into_par_iter()
            .with_min_len(MIN_ROWS_PER_TASK)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] += self.vals[k];
            }
        }
        d
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
