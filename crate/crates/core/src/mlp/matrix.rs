//! Minimal row-major dense matrix used by the classifier.

use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// `self · Wᵀ` where `weight` is `out × cols`, row-major.
    pub fn mul_transposed(&self, weight: &[T], out: usize) -> Matrix<T> {
        debug_assert_eq!(weight.len(), out * self.cols);
        let mut res = Matrix::zeros(self.rows, out);
        for r in 0..self.rows {
            let x = self.row(r);
            for o in 0..out {
                let w = &weight[o * self.cols..(o + 1) * self.cols];
                res.data[r * out + o] = x.iter().zip(w).map(|(&a, &b)| a * b).sum();
            }
        }
        res
    }

    /// `self · W` where `weight` is `cols × inner`, row-major.
    pub fn mul(&self, weight: &[T], inner: usize) -> Matrix<T> {
        debug_assert_eq!(weight.len(), self.cols * inner);
        let mut res = Matrix::zeros(self.rows, inner);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == T::zero() {
                    continue;
                }
                let w = &weight[k * inner..(k + 1) * inner];
                for (dst, &b) in res.row_mut(r).iter_mut().zip(w) {
                    *dst = *dst + a * b;
                }
            }
        }
        res
    }

    /// `selfᵀ · other`, flattened row-major as `self.cols × other.cols`.
    pub fn transpose_mul(&self, other: &Matrix<T>) -> Vec<T> {
        debug_assert_eq!(self.rows, other.rows);
        let mut res = vec![T::zero(); self.cols * other.cols];
        for r in 0..self.rows {
            for (i, &a) in self.row(r).iter().enumerate() {
                for (j, &b) in other.row(r).iter().enumerate() {
                    res[i * other.cols + j] = res[i * other.cols + j] + a * b;
                }
            }
        }
        res
    }

    pub fn column_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.cols];
        for r in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(r)) {
                *s = *s + v;
            }
        }
        sums
    }
}
