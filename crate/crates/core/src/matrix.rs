//! Row-major dense matrices.
//!
//! Deliberately minimal: exactly the products the model and its gradients
//! need. The `parallel` feature distributes work over output rows; each row
//! is still reduced sequentially, so results do not depend on thread count.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Dense row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a flat row-major buffer. Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Dense { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Dense { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    /// `self * b`.
    pub fn matmul(&self, b: &Dense) -> Dense {
        assert_eq!(self.cols, b.rows, "matmul: inner dimensions differ");
        let mut out = Dense::zeros(self.rows, b.cols);
        let bc = b.cols;
        let work = |i: usize, out_row: &mut [f64]| {
            for (k, &aik) in self.row(i).iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = b.row(k);
                for j in 0..bc {
                    out_row[j] += aik * brow[j];
                }
            }
        };
        for_each_row(&mut out, work);
        out
    }

    /// `self^T * b` without materializing the transpose.
    pub fn transpose_matmul(&self, b: &Dense) -> Dense {
        assert_eq!(self.rows, b.rows, "transpose_matmul: row counts differ");
        let mut out = Dense::zeros(self.cols, b.cols);
        let bc = b.cols;
        let work = |i: usize, out_row: &mut [f64]| {
            for k in 0..self.rows {
                let aki = self.get(k, i);
                if aki == 0.0 {
                    continue;
                }
                let brow = b.row(k);
                for j in 0..bc {
                    out_row[j] += aki * brow[j];
                }
            }
        };
        for_each_row(&mut out, work);
        out
    }

    /// `self * b^T` without materializing the transpose.
    pub fn matmul_transpose(&self, b: &Dense) -> Dense {
        assert_eq!(self.cols, b.cols, "matmul_transpose: column counts differ");
        let mut out = Dense::zeros(self.rows, b.rows);
        let work = |i: usize, out_row: &mut [f64]| {
            let arow = self.row(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                *o = arow
                    .iter()
                    .zip(b.row(j))
                    .fold(0.0, |acc, (&x, &y)| acc + x * y);
            }
        };
        for_each_row(&mut out, work);
        out
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec: dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0.0, |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }

    /// `self^T * v`.
    pub fn transpose_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "transpose_matvec: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    /// `self += alpha * b`, elementwise.
    pub fn add_scaled(&mut self, alpha: f64, b: &Dense) {
        assert_eq!(self.rows, b.rows);
        assert_eq!(self.cols, b.cols);
        for (a, &x) in self.data.iter_mut().zip(&b.data) {
            *a += alpha * x;
        }
    }

    /// Adds the outer product `u * v^T` (rank-1 update).
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        assert_eq!(self.rows, u.len());
        assert_eq!(self.cols, v.len());
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            for (o, &x) in self.row_mut(i).iter_mut().zip(v) {
                *o += ui * x;
            }
        }
    }

    /// Multiplies row `i` by `scale[i]`.
    pub fn scale_rows(&mut self, scale: &[f64]) {
        assert_eq!(self.rows, scale.len());
        for (i, &s) in scale.iter().enumerate() {
            for x in self.row_mut(i) {
                *x *= s;
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, b: &Dense) -> Dense {
        assert_eq!(self.rows, b.rows);
        assert_eq!(self.cols, b.cols);
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&b.data)
                .map(|(&a, &x)| a * x)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, b: &Dense) -> f64 {
        assert_eq!(self.rows, b.rows);
        assert_eq!(self.cols, b.cols);
        self.data
            .iter()
            .zip(&b.data)
            .fold(0.0f64, |m, (&a, &x)| m.max(libm::fabs(a - x)))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Runs `work(i, row_i)` for every row of `out`, in parallel when enabled.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_row(out: &mut Dense, work: impl Fn(usize, &mut [f64]) + Sync) {
    let cols = out.cols.max(1);
    out.data
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, row)| work(i, row));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_row(out: &mut Dense, work: impl Fn(usize, &mut [f64]) + Sync) {
    let cols = out.cols.max(1);
    for (i, row) in out.data.chunks_mut(cols).enumerate() {
        work(i, row);
    }
}
