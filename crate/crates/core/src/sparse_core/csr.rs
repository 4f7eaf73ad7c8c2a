//! Compressed sparse row storage in canonical form.
//!
//! Canonical means: `row_ptr` non-decreasing with `row_ptr[0] = 0` and
//! `row_ptr[n_rows] = nnz`, column indices strictly increasing inside each
//! row, and no stored zeros. Every public constructor enforces it, so two
//! matrices with the same support have byte-identical index arrays.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::dense::Dense;
use super::DEFAULT_DENSE_CAP;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Validates raw CSR arrays.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 {
            return Err(Error::InvalidCsr(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n_rows + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[n_rows] != values.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidCsr(
                "row_ptr endpoints do not match the value array".into(),
            ));
        }
        for i in 0..n_rows {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            if start > end {
                return Err(Error::InvalidCsr(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[start..end];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidCsr(format!(
                    "columns in row {i} are not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::InvalidCsr(format!(
                    "column out of bounds in row {i}"
                )));
            }
        }
        if let Some(k) = values
            .iter()
            .position(|v| *v == T::zero() || !v.is_finite())
        {
            return Err(Error::InvalidCsr(format!(
                "stored entry {k} is zero or non-finite"
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a canonical matrix from `(row, col, value)` triplets. Duplicates
    /// are summed (in input order) and exact zeros dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        if let Some(&(i, j, _)) = entries
            .iter()
            .find(|&&(i, j, _)| i >= n_rows || j >= n_cols)
        {
            return Err(Error::InvalidCsr(format!(
                "triplet ({i}, {j}) outside {n_rows}x{n_cols}"
            )));
        }
        if entries.iter().any(|e| !e.2.is_finite()) {
            return Err(Error::InvalidCsr("non-finite triplet value".into()));
        }
        // stable sort keeps duplicate summation in input order
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut it = entries.into_iter().peekable();
        while let Some((i, j, mut v)) = it.next() {
            while let Some(&(i2, j2, v2)) = it.peek() {
                if (i2, j2) != (i, j) {
                    break;
                }
                v += v2;
                it.next();
            }
            if v != T::zero() {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![T::one(); n])
    }

    /// Diagonal matrix; zero entries are not stored.
    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &d)| (i, i, d)))
            .expect("diagonal triplets are in bounds")
    }

    /// Sparsifies a dense matrix, keeping entries with `|v| > drop_tol`.
    pub fn from_dense(m: &Dense<T>, drop_tol: T) -> Self {
        let mut row_ptr = Vec::with_capacity(m.n_rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..m.n_rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v.abs() > drop_tol {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(values.len());
        }
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> Dense<T> {
        let mut d = Dense::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row_iter(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `(col, value)` pairs of row `i`, ascending by column.
    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterates all stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row_iter(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::zero(),
        }
    }

    /// Row sums accumulated in ascending column order.
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n_rows)
            .map(|i| self.row_iter(i).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.n_cols, self.n_rows, triplets).expect("transpose stays in bounds")
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Largest |m_ij - m_ji| over the union of both supports.
    pub fn max_asymmetry(&self) -> Option<T> {
        if !self.is_square() {
            return None;
        }
        let t = self.transpose();
        let mut worst = T::zero();
        for (i, j, v) in self.iter() {
            worst = worst.max((v - t.get(i, j)).abs());
        }
        for (i, j, v) in t.iter() {
            worst = worst.max((v - self.get(i, j)).abs());
        }
        Some(worst)
    }

    /// True when both the support and the stored values are mirror images.
    pub fn is_symmetric_exact(&self) -> bool {
        self.is_square() && self.transpose() == *self
    }

    /// Identical `row_ptr` and `col_idx` arrays.
    pub fn same_pattern(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// `self + shift * I`. With `shift = 0` the matrix is returned unchanged.
    pub fn add_identity(&self, shift: T) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        if shift == T::zero() {
            return Ok(self.clone());
        }
        let diag = (0..self.n_rows).map(|i| (i, i, shift));
        Self::from_triplets(self.n_rows, self.n_cols, self.iter().chain(diag))
    }

    /// Elementwise `self - other` over the union of supports.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "sparse sub",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let neg = other.iter().map(|(i, j, v)| (i, j, -v));
        Self::from_triplets(self.n_rows, self.n_cols, self.iter().chain(neg))
    }

    /// Same support, values replaced by `f(value)`. The caller guarantees
    /// `f` never maps a nonzero to zero.
    pub(crate) fn map_values_unchecked(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `ρ`-th power `M∘M∘…∘M`; the support is unchanged.
    pub fn hadamard_power(&self, rho: u32) -> Result<Self> {
        if rho == 0 {
            return Err(Error::ZeroPower);
        }
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        let exp = i32::try_from(rho)
            .map_err(|_| Error::InvalidArgument(format!("power {rho} too large")))?;
        let out = self.map_values_unchecked(|v| v.powi(exp));
        if let Some(index) = out.values.iter().position(|v| *v == T::zero()) {
            return Err(Error::PowerUnderflow { index });
        }
        Ok(out)
    }

    /// Ordinary matrix power as a dense matrix, for `n_rows <= cap`.
    pub fn matrix_power_dense_capped(&self, rho: u32, cap: usize) -> Result<Dense<T>> {
        if rho == 0 {
            return Err(Error::ZeroPower);
        }
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        if self.n_rows > cap {
            return Err(Error::DenseCapExceeded {
                size: self.n_rows,
                cap,
            });
        }
        let mut acc = self.to_dense();
        for _ in 1..rho {
            acc = self.spmm(&acc)?;
        }
        Ok(acc)
    }

    pub fn matrix_power_dense(&self, rho: u32) -> Result<Dense<T>> {
        self.matrix_power_dense_capped(rho, DEFAULT_DENSE_CAP)
    }

    /// `self * h`, accumulating each output row in ascending column order.
    pub fn spmm(&self, h: &Dense<T>) -> Result<Dense<T>> {
        if self.n_cols != h.n_rows() {
            return Err(Error::DimensionMismatch {
                op: "spmm",
                left: self.shape(),
                right: h.shape(),
            });
        }
        let width = h.n_cols();
        let mut out = Dense::zeros(self.n_rows, width);
        for i in 0..self.n_rows {
            let out_row = out.row_mut(i);
            for (j, v) in self.row_iter(i) {
                for (o, &x) in out_row.iter_mut().zip(h.row(j)) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * h` by scattering rows in ascending row order.
    pub fn spmm_transpose(&self, h: &Dense<T>) -> Result<Dense<T>> {
        if self.n_rows != h.n_rows() {
            return Err(Error::DimensionMismatch {
                op: "spmm_transpose",
                left: self.shape(),
                right: h.shape(),
            });
        }
        let mut out = Dense::zeros(self.n_cols, h.n_cols());
        for i in 0..self.n_rows {
            let src = h.row(i);
            for (j, v) in self.row_iter(i) {
                for (o, &x) in out.row_mut(j).iter_mut().zip(src) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        if self.n_cols != x.len() {
            return Err(Error::DimensionMismatch {
                op: "spmv",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.n_rows)
            .map(|i| self.row_iter(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    /// `diag(left) * self * diag(right)`; zero scale factors are rejected.
    pub fn scale_rows_cols(&self, left: &[T], right: &[T]) -> Result<Self> {
        if left.len() != self.n_rows || right.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                op: "scale_rows_cols",
                left: self.shape(),
                right: (left.len(), right.len()),
            });
        }
        let mut out = self.clone();
        for (i, &li) in left.iter().enumerate() {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                let j = out.col_idx[k];
                out.values[k] = li * out.values[k] * right[j];
            }
        }
        if let Some(index) = out
            .values
            .iter()
            .position(|v| *v == T::zero() || !v.is_finite())
        {
            return Err(Error::InvalidCsr(format!(
                "scaling produced a zero or non-finite entry at {index}"
            )));
        }
        Ok(out)
    }

    /// Symmetric row/column permutation: entry `(i, j)` moves to
    /// `(perm[i], perm[j])`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_rows || !self.is_square() {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().map(|(i, j, v)| (perm[i], perm[j], v)),
        )
    }
}
