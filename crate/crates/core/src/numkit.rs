//! Dense vectors, CSR matrices and the linear-algebra kernels used by the
//! objectives and solvers.
//!
//! All reductions accumulate in a fixed order (ascending index) so that a run
//! is bit-reproducible for a given seed, regardless of thread count.

use std::ops::{Deref, DerefMut, Index};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::par::Execution;
use crate::{Error, Result};

/// Row count above which [`spmv`] fans out over rows.
pub const PAR_MIN_ROWS: usize = 4096;

/// Default number of power iterations for [`spectral_norm_sq`].
pub const POWER_ITERS: usize = 100;

const POWER_REL_TOL: f64 = 1e-10;

/// A dense vector of `f64`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| s * v).collect())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Standard-normal entries scaled by `scale`, drawn from a seeded stream.
    pub fn random_normal(len: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self(
            (0..len)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    scale * v
                })
                .collect::<Vec<f64>>(),
        )
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for DenseVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<f64> for DenseVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Shortest text that parses back to exactly `v`: the shorter of the plain
/// and the exponent forms, both of which round-trip.
pub fn format_float(v: f64) -> String {
    let plain = v.to_string();
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrixCsr {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrixCsr {
    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::MalformedMatrix(msg));
        if row_ptr.len() != n_rows + 1 {
            return bad(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n_rows + 1
            ));
        }
        if row_ptr[0] != 0 {
            return bad("row_ptr[0] must be 0".into());
        }
        if col_idx.len() != vals.len() || row_ptr[n_rows] != vals.len() {
            return bad(format!(
                "row_ptr[n_rows]={}, col_idx={}, vals={}",
                row_ptr[n_rows],
                col_idx.len(),
                vals.len()
            ));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if lo > hi {
                return bad(format!("row_ptr decreases at row {r}"));
            }
            let cols = &col_idx[lo..hi];
            if cols.iter().any(|&c| c >= n_cols) {
                return bad(format!("column index out of range in row {r}"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("column indices not strictly increasing in row {r}"));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Builds a matrix from per-row `(column, value)` lists.
    pub fn from_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for &(c, v) in row {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self::new(rows.len(), n_cols, row_ptr, col_idx, vals)
    }

    /// Builds a matrix from a dense row-major array, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidArgument("ragged dense matrix".into()));
        }
        let sparse: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(n_cols, &sparse)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.vals[lo..hi])
    }

    /// Returns a copy with the same sparsity pattern and every value scaled.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vals: self.vals.iter().map(|v| s * v).collect(),
            ..self.clone()
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }

    pub fn max_row_norm_sq(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
    }
}

impl Index<(usize, usize)> for SparseMatrixCsr {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(pos) => &vals[pos],
            Err(_) => &0.0,
        }
    }
}

/// `A x`, fanning out over rows for large matrices.
pub fn spmv(a: &SparseMatrixCsr, x: &DenseVector) -> Result<DenseVector> {
    let exec = if a.n_rows >= PAR_MIN_ROWS {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    spmv_with(a, x, exec)
}

/// `A x` with an explicit execution mode. Each output entry is a sequential
/// dot product in ascending column order, so both modes give identical bits.
pub fn spmv_with(a: &SparseMatrixCsr, x: &DenseVector, exec: Execution) -> Result<DenseVector> {
    if x.len() != a.n_cols {
        return Err(Error::DimensionMismatch {
            expected: a.n_cols,
            actual: x.len(),
        });
    }
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        let out: Vec<f64> = (0..a.n_rows)
            .into_par_iter()
            .map(|r| a.row_dot(r, x))
            .collect();
        return Ok(DenseVector(out));
    }
    let _ = exec;
    Ok((0..a.n_rows).map(|r| a.row_dot(r, x)).collect())
}

/// `Aᵀ y`, accumulated by a row-major sweep.
pub fn spmv_transpose(a: &SparseMatrixCsr, y: &DenseVector) -> Result<DenseVector> {
    if y.len() != a.n_rows {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows,
            actual: y.len(),
        });
    }
    let mut out = vec![0.0; a.n_cols];
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        let (cols, vals) = a.row(r);
        for (&c, v) in cols.iter().zip(vals) {
            out[c] += v * yr;
        }
    }
    Ok(DenseVector(out))
}

/// Estimates `‖A‖₂²` by power iteration on `AᵀA` from a seeded Gaussian start.
///
/// Returns the Rayleigh quotient `‖A v‖²` of the last unit iterate, which is a
/// lower bound on the true value that is nondecreasing in `iters`. Stops early
/// once the relative change drops below 1e-10.
pub fn spectral_norm_sq(a: &SparseMatrixCsr, iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(Error::InvalidArgument("power iteration needs iters >= 1".into()));
    }
    if a.n_cols == 0 || a.vals.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut v = DenseVector::random_normal(a.n_cols, 1.0, seed);
    let nv = v.norm();
    v = v.scale(1.0 / nv);
    let mut estimate = 0.0;
    for _ in 0..iters {
        let av = spmv(a, &v)?;
        let rayleigh = av.norm_sq();
        let w = spmv_transpose(a, &av)?;
        let nw = w.norm();
        let prev = estimate;
        estimate = rayleigh.max(prev);
        if nw == 0.0 {
            break;
        }
        v = w.scale(1.0 / nw);
        if prev > 0.0 && (estimate - prev).abs() <= POWER_REL_TOL * estimate {
            break;
        }
    }
    Ok(estimate)
}
