//! Dense matrix kernel: products, commutators, traces and rank / left null
//! space determination with an explicit tolerance policy.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    BadLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Checked constructor: length must match and every entry must be finite.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience for literals in tests and examples. Panics on ragged input.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                for (o, &b) in out_row.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    fn zip_with(
        &self,
        rhs: &Self,
        op: &'static str,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self += s * other` in place. Shapes must agree.
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "mul_vec length mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(v: &[T], m: &Self) -> Vec<T> {
        assert_eq!(v.len(), m.rows, "vec_mul length mismatch");
        let mut out = vec![T::zero(); m.cols];
        for (&a, i) in v.iter().zip(0..m.rows) {
            for (o, &b) in out.iter_mut().zip(m.row(i)) {
                *o += a * b;
            }
        }
        out
    }

    /// Infinity norm: largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Integer power by repeated squaring. `pow(0)` is the identity.
    pub fn pow(&self, mut exp: u32) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                op: "pow",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.matmul(&base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(&a, &b)| a.bit_eq(b))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `A·B − B·A`, computed as two full products and one subtraction.
pub fn commutator<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "commutator",
            left: a.shape(),
            right: b.shape(),
        });
    }
    a.matmul(b)?.checked_sub(&b.matmul(a)?)
}

/// Sum of diagonal entries. Panics if `a` is not square.
pub fn trace<T: Scalar>(a: &Matrix<T>) -> T {
    assert!(a.is_square(), "trace of a non-square matrix");
    (0..a.rows()).fold(T::zero(), |acc, i| acc + a[(i, i)])
}

/// `Tr(A·B)` without forming the product. Panics on shape mismatch.
pub fn trace_of_product<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    assert!(
        a.cols() == b.rows() && a.rows() == b.cols(),
        "trace_of_product shape mismatch"
    );
    let mut acc = T::zero();
    for i in 0..a.rows() {
        for (l, &x) in a.row(i).iter().enumerate() {
            acc += x * b[(l, i)];
        }
    }
    acc
}

/// Outer product `col ⊗ row` (column vector times row vector).
pub fn outer<T: Scalar>(col: &[T], row: &[T]) -> Matrix<T> {
    Matrix::from_fn(col.len(), row.len(), |i, j| col[i] * row[j])
}

/// Canonical unit row vector `e_k` (zero-based `index`). Materialized only on
/// request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitRowVector {
    pub dim: usize,
    pub index: usize,
}

impl UnitRowVector {
    pub fn new(dim: usize, index: usize) -> Self {
        assert!(index < dim, "unit vector index out of range");
        Self { dim, index }
    }

    pub fn to_vec<T: Scalar>(self) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        v[self.index] = T::one();
        v
    }
}

pub fn vec_norm_inf<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

pub fn vec_norm2<T: Scalar>(v: &[T]) -> f64 {
    v.iter()
        .map(|x| {
            let m = x.modulus();
            m * m
        })
        .sum::<f64>()
        .sqrt()
}

/// Residual bound for a computed left null vector of `p`:
/// `64 · N · ε · ‖P‖∞`.
pub fn null_residual_bound<T: Scalar>(p: &Matrix<T>) -> f64 {
    64.0 * p.rows() as f64 * f64::EPSILON * p.norm_inf()
}

/// Outcome of [`rank_and_left_null`].
#[derive(Clone, Debug, PartialEq)]
pub struct RankNull<T> {
    pub rank: usize,
    /// Unit left null vector; present only when `rank == N - 1` and the
    /// residual `‖n·P‖∞` is within [`null_residual_bound`].
    pub null: Option<Vec<T>>,
    /// Effective singular-value threshold τ.
    pub threshold: f64,
    pub largest_sv: f64,
    /// Smallest singular value above τ (0 when rank is 0).
    pub smallest_retained_sv: f64,
    /// `‖n·P‖∞` of the computed vector when rank is `N - 1`.
    pub null_residual: Option<f64>,
}

/// Numerical rank of a square matrix and, when the rank is exactly `N − 1`,
/// its unit left null vector `n` with `n·P = 0`.
///
/// Rank counts singular values above `τ = max(tol_rank, N·ε·σ_max)`. The null
/// vector comes from Gaussian elimination with complete pivoting on `Pᵀ`,
/// stopped after `N − 1` pivots, so structurally zero entries stay exactly
/// zero. The first nonzero component is rotated to be real and positive.
pub fn rank_and_left_null<T: Scalar>(
    p: &Matrix<T>,
    tol_rank: f64,
) -> Result<RankNull<T>, LinalgError> {
    if !p.is_square() {
        return Err(LinalgError::NotSquare {
            op: "rank_and_left_null",
            rows: p.rows(),
            cols: p.cols(),
        });
    }
    let n = p.rows();
    let sv = if n == 0 {
        Vec::new()
    } else {
        T::singular_values(n, n, p.as_slice())
    };
    let largest_sv = sv.iter().copied().fold(0.0, f64::max);
    let threshold = tol_rank.max(n as f64 * f64::EPSILON * largest_sv);
    let retained: Vec<f64> = sv.iter().copied().filter(|&s| s > threshold).collect();
    let rank = retained.len();
    let smallest_retained_sv = retained.iter().copied().fold(f64::INFINITY, f64::min);
    let smallest_retained_sv = if rank == 0 { 0.0 } else { smallest_retained_sv };

    let mut out = RankNull {
        rank,
        null: None,
        threshold,
        largest_sv,
        smallest_retained_sv,
        null_residual: None,
    };
    if n == 0 || rank + 1 != n {
        return Ok(out);
    }

    let v = normalize_null(eliminate_left_null(p));
    let residual = vec_norm_inf(&Matrix::vec_mul(&v, p));
    out.null_residual = Some(residual);
    if residual <= null_residual_bound(p) {
        out.null = Some(v);
    }
    Ok(out)
}

/// Solves `Pᵀ·x = 0` for a nontrivial `x`, assuming rank `N − 1`.
fn eliminate_left_null<T: Scalar>(p: &Matrix<T>) -> Vec<T> {
    let n = p.rows();
    // Rows of `work` are the column equations Σ_i x_i P{i,c} = 0.
    let mut work = p.transpose();
    let mut row_free = vec![true; n];
    let mut col_free = vec![true; n];
    let mut pivots: Vec<(usize, usize)> = Vec::with_capacity(n.saturating_sub(1));

    for _ in 0..n.saturating_sub(1) {
        let mut best = (usize::MAX, usize::MAX);
        let mut best_mod = -1.0;
        for r in (0..n).filter(|&r| row_free[r]) {
            for c in (0..n).filter(|&c| col_free[c]) {
                let m = work[(r, c)].modulus();
                if m > best_mod {
                    best_mod = m;
                    best = (r, c);
                }
            }
        }
        let (pr, pc) = best;
        row_free[pr] = false;
        col_free[pc] = false;
        pivots.push(best);
        let pivot = work[(pr, pc)];
        if pivot.is_zero() {
            continue;
        }
        for r in (0..n).filter(|&r| row_free[r]) {
            let factor = work[(r, pc)] / pivot;
            if factor.is_zero() {
                continue;
            }
            for c in (0..n).filter(|&c| col_free[c]) {
                let t = work[(pr, c)];
                work[(r, c)] -= factor * t;
            }
            work[(r, pc)] = T::zero();
        }
    }

    let free = col_free.iter().position(|&f| f).unwrap_or(0);
    let mut x = vec![T::zero(); n];
    x[free] = T::one();
    for (s, &(pr, pc)) in pivots.iter().enumerate().rev() {
        let pivot = work[(pr, pc)];
        let mut acc = work[(pr, free)] * x[free];
        for &(_, later) in &pivots[s + 1..] {
            acc += work[(pr, later)] * x[later];
        }
        x[pc] = if pivot.is_zero() {
            T::zero()
        } else {
            -acc / pivot
        };
    }
    x
}

/// Unit 2-norm, first nonzero component real-positive, no negative zeros.
fn normalize_null<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    let norm = vec_norm2(&v);
    if norm == 0.0 {
        return v;
    }
    let inv = T::from_real(1.0 / norm);
    for x in &mut v {
        *x *= inv;
    }
    if let Some(first) = v.iter().position(|x| !x.is_zero()) {
        let z = v[first];
        let m = z.modulus();
        let phase = T::from_parts(z.re() / m, -z.im() / m);
        for x in &mut v {
            *x *= phase;
        }
        v[first] = T::from_real(v[first].modulus());
    }
    v.into_iter().map(Scalar::canonical_zero).collect()
}
