//! Dense real-matrix primitives: storage, row-wise Khatri-Rao products,
//! LU-based multi-right-hand-side solves, numerical rank and 2-norm
//! condition numbers.

use std::cell::Cell;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative pivot magnitude below which a factorization is declared singular.
pub const DEFAULT_PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },
    #[error("matrix storage holds {len} entries, expected {rows}x{cols}")]
    Storage { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is numerically singular at pivot {pivot} (|pivot| = {magnitude:e})")]
    Singular { pivot: usize, magnitude: f64 },
}

/// Row-major dense matrix of finite `f64` values.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = LinalgError;

    fn try_from(raw: RawMatrix) -> Result<Self, Self::Error> {
        DenseMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major storage, rejecting wrong lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Storage {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: idx / cols.max(1),
                col: idx % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Dimension {
                    op: "from_rows",
                    detail: format!("row {i} has {} entries, expected {cols}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.data[i * size + i] = 1.0;
        }
        m
    }

    /// Fills entry `(r, c)` (0-based) from `f`. Panics if `f` yields a
    /// non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite entry at ({r}, {c})");
                data.push(v);
            }
        }
        Self { rows, cols, data }
    }

    pub(crate) fn from_raw_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self · rhs` with an i-k-j loop order.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension {
                op: "matmul",
                detail: format!(
                    "{}x{} times {}x{}",
                    self.rows, self.cols, rhs.rows, rhs.cols
                ),
            });
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw_unchecked(self.rows, rhs.cols, out))
    }

    /// `self += alpha · other` (shapes must match).
    pub fn add_scaled(&mut self, alpha: f64, other: &DenseMatrix) -> Result<(), LinalgError> {
        self.check_same_shape("add_scaled", other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.check_same_shape("sub", other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_raw_unchecked(self.rows, self.cols, data))
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        Self::from_raw_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|v| alpha * v).collect(),
        )
    }

    /// Copies the listed 0-based rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self::from_raw_unchecked(rows.len(), self.cols, data)
    }

    /// Copies the listed 0-based columns, in order.
    pub fn select_cols(&self, cols: &[usize]) -> DenseMatrix {
        Self::from_fn(self.rows, cols.len(), |r, c| self.get(r, cols[c]))
    }

    /// Copies the `rows x cols` window whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> DenseMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Self::from_fn(rows, cols, |r, c| self.get(r0 + r, c0 + c))
    }

    pub(crate) fn write_block(&mut self, r0: usize, c0: usize, src: &DenseMatrix) {
        for r in 0..src.rows {
            let dst = &mut self.data[(r0 + r) * self.cols + c0..(r0 + r) * self.cols + c0 + src.cols];
            dst.copy_from_slice(src.row(r));
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, op: &'static str, other: &DenseMatrix) -> Result<(), LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::Dimension {
                op,
                detail: format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        Ok(())
    }

    fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// 1-based column index of the Khatri-Rao product for the pair of 1-based
/// factor columns `(p_col, q_col)`, with `q_cols` columns in the second factor.
#[inline]
pub fn kr_column(p_col: usize, q_col: usize, q_cols: usize) -> usize {
    (p_col - 1) * q_cols + q_col
}

/// Inverse of [`kr_column`]: `(⌈j/n⌉, ((j−1) mod n) + 1)`.
#[inline]
pub fn kr_factor_columns(j: usize, q_cols: usize) -> (usize, usize) {
    (j.div_ceil(q_cols), (j - 1) % q_cols + 1)
}

/// Row-wise Khatri-Rao product: row `i` of the result is `p[i,:] ⊗ q[i,:]`.
pub fn khatri_rao_rowwise(p: &DenseMatrix, q: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if p.rows() != q.rows() {
        return Err(LinalgError::Dimension {
            op: "khatri_rao_rowwise",
            detail: format!("{} rows vs {} rows", p.rows(), q.rows()),
        });
    }
    let (m, n) = (p.cols(), q.cols());
    let mut data = Vec::with_capacity(p.rows() * m * n);
    for i in 0..p.rows() {
        for &a in p.row(i) {
            data.extend(q.row(i).iter().map(|&b| a * b));
        }
    }
    Ok(DenseMatrix::from_raw_unchecked(p.rows(), m * n, data))
}

/// Options controlling [`solve_linear_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative pivot threshold; `0.0` only rejects exactly-zero pivots.
    pub pivot_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            pivot_tolerance: DEFAULT_PIVOT_TOLERANCE,
        }
    }
}

/// Result of a linear solve together with the 2-norm condition number of
/// the coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: DenseMatrix,
    pub condition_estimate: f64,
}

/// LU factorization with partial pivoting, `P·A = L·U`, stored compactly.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    // perm[i] = original row placed at position i
    perm: Vec<usize>,
}

impl LuFactorization {
    /// Factorizes a square matrix. A pivot whose magnitude falls below
    /// `tolerance · max|a_ij|` (or is exactly zero) is reported as singular,
    /// carrying the 1-based pivot index.
    pub fn factor(a: &DenseMatrix, tolerance: f64) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Dimension {
                op: "lu",
                detail: format!("{}x{} is not square", a.rows(), a.cols()),
            });
        }
        let size = a.rows();
        let threshold = tolerance * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..size).collect();
        for k in 0..size {
            let (pivot_row, magnitude) = (k..size)
                .map(|r| (r, lu.get(r, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if magnitude == 0.0 || magnitude < threshold {
                return Err(LinalgError::Singular {
                    pivot: k + 1,
                    magnitude,
                });
            }
            if pivot_row != k {
                for c in 0..size {
                    lu.data.swap(k * size + c, pivot_row * size + c);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu.get(k, k);
            for r in k + 1..size {
                let factor = lu.get(r, k) / pivot;
                lu.set(r, k, factor);
                if factor == 0.0 {
                    continue;
                }
                for c in k + 1..size {
                    let v = lu.get(r, c) - factor * lu.get(k, c);
                    lu.set(r, c, v);
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn size(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A·X = B` for every column of `B` using the stored factors.
    /// Each column follows the same arithmetic sequence regardless of how
    /// many columns are solved together.
    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        let size = self.size();
        if b.rows() != size {
            return Err(LinalgError::Dimension {
                op: "lu_solve",
                detail: format!("factor is {size}x{size}, rhs has {} rows", b.rows()),
            });
        }
        let mut x = b.select_rows(&self.perm);
        let width = x.cols();
        // forward substitution with unit-diagonal L
        for i in 0..size {
            for k in 0..i {
                let l = self.lu.get(i, k);
                if l == 0.0 {
                    continue;
                }
                for c in 0..width {
                    let v = x.get(i, c) - l * x.get(k, c);
                    x.set(i, c, v);
                }
            }
        }
        // back substitution
        for i in (0..size).rev() {
            for k in i + 1..size {
                let u = self.lu.get(i, k);
                if u == 0.0 {
                    continue;
                }
                for c in 0..width {
                    let v = x.get(i, c) - u * x.get(k, c);
                    x.set(i, c, v);
                }
            }
            let d = self.lu.get(i, i);
            for v in x.row_mut(i) {
                *v /= d;
            }
        }
        if let Some(idx) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: idx / width.max(1),
                col: idx % width.max(1),
            });
        }
        Ok(x)
    }
}

thread_local! {
    static SOLVE_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`solve_linear`] / [`solve_linear_with`] calls made on the
/// current thread.
pub fn solve_call_count() -> u64 {
    SOLVE_CALLS.with(Cell::get)
}

pub fn reset_solve_call_count() {
    SOLVE_CALLS.with(|c| c.set(0));
}

/// Solves `a·x = b` for a square `a` and multi-column `b`, reporting the
/// condition number of `a`.
pub fn solve_linear(a: &DenseMatrix, b: &DenseMatrix) -> Result<SolveOutcome, LinalgError> {
    solve_linear_with(a, b, SolveOptions::default())
}

pub fn solve_linear_with(
    a: &DenseMatrix,
    b: &DenseMatrix,
    options: SolveOptions,
) -> Result<SolveOutcome, LinalgError> {
    SOLVE_CALLS.with(|c| c.set(c.get() + 1));
    if b.rows() != a.rows() {
        return Err(LinalgError::Dimension {
            op: "solve_linear",
            detail: format!("matrix has {} rows, rhs has {}", a.rows(), b.rows()),
        });
    }
    let lu = LuFactorization::factor(a, options.pivot_tolerance)?;
    let solution = lu.solve(b)?;
    Ok(SolveOutcome {
        solution,
        condition_estimate: condition_number(a),
    })
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// 2-norm condition number `σ_max / σ_min`; infinite for singular input and
/// `1.0` for an empty matrix.
///
/// When `σ_min` is below what the SVD resolves (`≤ σ_max·ε·max(rows, cols)`)
/// a square matrix falls back to `σ_max · ‖A⁻¹‖₂` with the inverse taken
/// from an unguarded LU factorization, as LAPACK-style drivers would report.
pub fn condition_number(a: &DenseMatrix) -> f64 {
    let sv = singular_values(a);
    let (Some(&hi), Some(&lo)) = (sv.first(), sv.last()) else {
        return 1.0;
    };
    if hi == 0.0 {
        return f64::INFINITY;
    }
    let resolved = lo > hi * f64::EPSILON * a.rows().max(a.cols()) as f64;
    if resolved || !a.is_square() {
        return if lo > 0.0 { hi / lo } else { f64::INFINITY };
    }
    let inverse_norm = LuFactorization::factor(a, 0.0)
        .and_then(|lu| lu.solve(&DenseMatrix::identity(a.rows())))
        .map(|inv| singular_values(&inv)[0]);
    match inverse_norm {
        Ok(norm) if norm.is_finite() => hi * norm,
        _ => f64::INFINITY,
    }
}

/// Numerical rank: singular values above `max(rows, cols) · ε · σ_max`.
pub fn rank_of(a: &DenseMatrix) -> usize {
    let sv = singular_values(a);
    let Some(&top) = sv.first() else {
        return 0;
    };
    let tol = a.rows().max(a.cols()) as f64 * f64::EPSILON * top;
    sv.iter().filter(|&&s| s > tol).count()
}
