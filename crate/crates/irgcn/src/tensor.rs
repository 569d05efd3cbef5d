//! Dense row-major matrices of `f64`.
//!
//! The whole crate works at desk scale, so there is one tensor type: a
//! two-dimensional dense matrix with at least one row and one column.
//! Vectors are 1×n or n×1 matrices; scalars are 1×1. All arithmetic uses
//! fixed iteration orders so that identical inputs produce bit-identical
//! outputs on every run.

use crate::{Error, Result};

/// A dense row-major matrix. Shape is immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Matrix of zeros. Both dimensions must be positive: zero-sized
    /// tensors have no meaning anywhere in this crate, and constructing
    /// one is always a programming error.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "tensor dimensions must be positive");
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Matrix filled with a constant.
    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        assert!(rows > 0 && cols > 0, "tensor dimensions must be positive");
        Tensor {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    /// Matrix from row-major data; the length must match the shape.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Contract(format!(
                "tensor dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Contract(format!(
                "data length {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Tensor { rows, cols, data })
    }

    /// Matrix built entry by entry from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Tensor::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                t.data[i * cols + j] = f(i, j);
            }
        }
        t
    }

    /// A 1×1 matrix holding one value.
    pub fn scalar(v: f64) -> Self {
        Tensor::filled(1, 1, v)
    }

    /// A 1×n row from a non-empty slice.
    pub fn row_from(v: &[f64]) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Contract("row_from requires a non-empty slice".into()));
        }
        Tensor::from_vec(1, v.len(), v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// The single entry of a 1×1 matrix.
    pub fn item(&self) -> f64 {
        assert_eq!((self.rows, self.cols), (1, 1), "item() requires a 1x1 tensor");
        self.data[0]
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert!(i < self.rows);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable row-major backing storage. The shape cannot change.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// True when every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Matrix product `self · rhs`. Accumulates along the inner dimension
    /// in ascending order, so results are bit-stable.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.cols != rhs.rows {
            return Err(Error::Dim {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        let mut out = Tensor::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            let o_row = &mut out.data[i * n..(i + 1) * n];
            // k-outer / j-inner: each output entry still accumulates its
            // k-terms in ascending order (same rounding as a plain dot
            // product), but inner loops stream contiguously.
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = &rhs.data[k * n..(k + 1) * n];
                for j in 0..n {
                    o_row[j] += a_ik * b_row[j];
                }
            }
        }
        Ok(out)
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Entry-wise map into a new tensor.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Adds `rhs` into `self`; shapes must already match.
    pub fn add_assign(&mut self, rhs: &Tensor) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dim {
                op: "add_assign",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(())
    }

    /// Sum of `column j` over rows `[lo, hi)` by pairwise (tree)
    /// reduction. Pairwise order makes the mean of `2^m` identical rows
    /// reproduce the row exactly and keeps duplication invariances exact;
    /// see [`Tensor::mean_rows_value`].
    pub(crate) fn pairwise_col_sum(&self, lo: usize, hi: usize, j: usize) -> f64 {
        debug_assert!(lo < hi && hi <= self.rows);
        if hi - lo == 1 {
            self.get(lo, j)
        } else {
            let mid = lo + (hi - lo) / 2;
            self.pairwise_col_sum(lo, mid, j) + self.pairwise_col_sum(mid, hi, j)
        }
    }

    /// Column-wise mean over all rows as a 1×cols tensor, using pairwise
    /// summation. For a power-of-two number of identical rows the mean is
    /// bit-identical to the row, and duplicating the whole row set never
    /// changes the result (`(s + s) / 2k == s / k` exactly).
    pub fn mean_rows_value(&self) -> Tensor {
        let k = self.rows as f64;
        let mut out = Tensor::zeros(1, self.cols);
        for j in 0..self.cols {
            out.data[j] = self.pairwise_col_sum(0, self.rows, j) / k;
        }
        out
    }

    /// Frobenius-style total sum of all entries, ascending index order.
    pub fn sum_all(&self) -> f64 {
        self.data.iter().sum()
    }
}

impl std::fmt::Display for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn from_vec_validates_shape() {
        assert!(Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Tensor::from_vec(0, 2, vec![]).is_err());
        let t = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.get(1, 0), 3.0);
    }

    #[test]
    fn matmul_small_example() {
        // [1 2] · [3; 4] = [11]
        let a = Tensor::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let b = Tensor::from_vec(2, 1, vec![3.0, 4.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), (1, 1));
        assert_eq!(c.item(), 11.0);
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::zeros(2, 3);
        let b = Tensor::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("2x3"), "message should name shapes: {err}");
    }

    #[test]
    fn matmul_matches_naive_dot_bitwise() {
        let mut rng = Rng::new(77);
        for _ in 0..20 {
            let (m, k, n) = (
                1 + rng.below(6) as usize,
                1 + rng.below(6) as usize,
                1 + rng.below(6) as usize,
            );
            let a = Tensor::from_fn(m, k, |_, _| rng.uniform(-2.0, 2.0));
            let b = Tensor::from_fn(k, n, |_, _| rng.uniform(-2.0, 2.0));
            let c = a.matmul(&b).unwrap();
            for i in 0..m {
                for j in 0..n {
                    let mut acc = 0.0;
                    for kk in 0..k {
                        acc += a.get(i, kk) * b.get(kk, j);
                    }
                    assert_eq!(c.get(i, j), acc, "entry ({i},{j}) differs from dot order");
                }
            }
        }
    }

    #[test]
    fn transpose_round_trip() {
        let t = Tensor::from_fn(3, 5, |i, j| (i * 10 + j) as f64);
        assert_eq!(t.transpose().transpose(), t);
        assert_eq!(t.transpose().get(4, 2), t.get(2, 4));
    }

    #[test]
    fn mean_of_identical_rows_is_exact_for_power_of_two_counts() {
        let mut rng = Rng::new(5);
        for &k in &[1usize, 2, 4, 8, 16] {
            let row: Vec<f64> = (0..7).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let mut data = Vec::new();
            for _ in 0..k {
                data.extend_from_slice(&row);
            }
            let t = Tensor::from_vec(k, 7, data).unwrap();
            let m = t.mean_rows_value();
            assert_eq!(m.row(0), &row[..], "mean of {k} identical rows must be exact");
        }
    }

    #[test]
    fn mean_duplication_invariance_is_exact_for_any_count() {
        let mut rng = Rng::new(6);
        for &k in &[1usize, 2, 3, 5, 7, 12] {
            let base = Tensor::from_fn(k, 4, |_, _| rng.uniform(-2.0, 2.0));
            let mut doubled = Vec::new();
            doubled.extend_from_slice(base.data());
            doubled.extend_from_slice(base.data());
            let twice = Tensor::from_vec(2 * k, 4, doubled).unwrap();
            // Pairwise reduction splits the doubled set exactly at the
            // copy boundary: (s + s) / (2k) == s / k bit for bit.
            assert_eq!(
                base.mean_rows_value(),
                twice.mean_rows_value(),
                "duplicating the row set changed the mean (k = {k})"
            );
        }
    }

    #[test]
    fn mean_rows_close_to_naive_for_odd_counts() {
        let mut rng = Rng::new(7);
        let t = Tensor::from_fn(5, 3, |_, _| rng.uniform(-2.0, 2.0));
        let m = t.mean_rows_value();
        for j in 0..3 {
            let naive: f64 = (0..5).map(|i| t.get(i, j)).sum::<f64>() / 5.0;
            assert!((m.get(0, j) - naive).abs() < 1e-14);
        }
    }

    #[test]
    #[should_panic(expected = "positive")]
    fn zero_dimension_panics() {
        let _ = Tensor::zeros(0, 3);
    }
}
