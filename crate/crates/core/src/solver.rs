//! Dense LU factorization with partial pivoting, a 1-norm reciprocal
//! condition estimate, and the singularity census built on top of them.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::assembly::KansaSystem;
use crate::error::{KansaError, Result};

/// Column block width of the blocked factorization.
const BLOCK: usize = 48;

/// Below this reciprocal condition estimate a solve is flagged as near singular.
pub const NEAR_SINGULAR_RCOND: f64 = 1e-15;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(KansaError::SizeMismatch {
                what: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(KansaError::SizeMismatch {
                    what: "matrix row",
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.cols.max(1))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Position of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Raised when elimination meets a column with no nonzero pivot candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroPivot {
    pub column: usize,
}

/// `P A = L U` with unit lower `L`, stored packed in row-major order.
///
/// `perm[i]` is the row of `A` that ended up in row `i`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm_one: f64,
}

fn swap_rows(a: &mut [f64], n: usize, r1: usize, r2: usize) {
    if r1 == r2 {
        return;
    }
    let (lo, hi) = (r1.min(r2), r1.max(r2));
    let (head, tail) = a.split_at_mut(hi * n);
    head[lo * n..(lo + 1) * n].swap_with_slice(&mut tail[..n]);
}

impl LuFactorization {
    /// Right-looking blocked factorization. Stops at the first column whose
    /// pivot candidates are all exactly zero.
    pub fn new(matrix: &DenseMatrix) -> std::result::Result<Self, ZeroPivot> {
        assert_eq!(matrix.rows, matrix.cols, "LU needs a square matrix");
        let n = matrix.rows;
        let norm_one = matrix.norm_one();
        let mut a = matrix.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        let mut k0 = 0;
        while k0 < n {
            let k1 = (k0 + BLOCK).min(n);

            // Panel: columns k0..k1, rows k0..n.
            for j in k0..k1 {
                let mut p = j;
                let mut best = a[j * n + j].abs();
                for i in j + 1..n {
                    let v = a[i * n + j].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if best == 0.0 {
                    return Err(ZeroPivot { column: j });
                }
                swap_rows(&mut a, n, j, p);
                perm.swap(j, p);

                let (upper, lower) = a.split_at_mut((j + 1) * n);
                let pivot_row = &upper[j * n..];
                let pivot = pivot_row[j];
                for row in lower.chunks_exact_mut(n) {
                    let l = row[j] / pivot;
                    row[j] = l;
                    if l != 0.0 {
                        for (x, u) in row[j + 1..k1].iter_mut().zip(&pivot_row[j + 1..k1]) {
                            *x -= l * u;
                        }
                    }
                }
            }

            if k1 < n {
                // U12 = L11^{-1} A12
                for j in k0..k1 {
                    let (upper, lower) = a.split_at_mut((j + 1) * n);
                    let src = &upper[j * n + k1..j * n + n];
                    for i in j + 1..k1 {
                        let row = &mut lower[(i - j - 1) * n..(i - j) * n];
                        let l = row[j];
                        if l != 0.0 {
                            for (x, u) in row[k1..].iter_mut().zip(src) {
                                *x -= l * u;
                            }
                        }
                    }
                }

                // A22 -= L21 * U12
                let m = n - k1;
                let kb = k1 - k0;
                let base = a.as_mut_ptr();
                // SAFETY: L21 (rows k1.., cols k0..k1), U12 (rows k0..k1,
                // cols k1..) and A22 (rows k1.., cols k1..) are disjoint
                // regions of the same n*n buffer, and the strides keep every
                // access inside it.
                unsafe {
                    matrixmultiply::dgemm(
                        m,
                        kb,
                        m,
                        -1.0,
                        base.add(k1 * n + k0),
                        n as isize,
                        1,
                        base.add(k0 * n + k1),
                        n as isize,
                        1,
                        1.0,
                        base.add(k1 * n + k1),
                        n as isize,
                        1,
                    );
                }
            }
            k0 = k1;
        }
        Ok(Self {
            n,
            lu: a,
            perm,
            norm_one,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Diagonal of `U`.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.lu[i * self.n + i]).collect()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut z = b.to_vec();
        // U^T w = b
        for i in 0..n {
            let row = &self.lu[i * n..(i + 1) * n];
            z[i] /= row[i];
            let zi = z[i];
            for (t, u) in z[i + 1..].iter_mut().zip(&row[i + 1..]) {
                *t -= u * zi;
            }
        }
        // L^T v = w
        for i in (0..n).rev() {
            let row = &self.lu[i * n..i * n + i];
            let zi = z[i];
            for (t, l) in z[..i].iter_mut().zip(row) {
                *t -= l * zi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    /// Estimate of `||A^{-1}||_1` by Hager's method with Higham's
    /// refinements (the LAPACK `xLACN2` iteration).
    pub fn inverse_norm_one_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let sign = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
        let argmax = |v: &[f64]| {
            let mut j = 0;
            for (i, x) in v.iter().enumerate() {
                if x.abs() > v[j].abs() {
                    j = i;
                }
            }
            j
        };
        let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();

        let x = self.solve(&vec![1.0 / n as f64; n]);
        if n == 1 {
            return x[0].abs();
        }
        let mut est = norm1(&x);
        let mut signs: Vec<f64> = x.iter().map(|&v| sign(v)).collect();
        let z = self.solve_transpose(&signs);
        let mut j = argmax(&z);
        let mut iter = 2;
        loop {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let x = self.solve(&e);
            let previous = est;
            est = norm1(&x);
            let new_signs: Vec<f64> = x.iter().map(|&v| sign(v)).collect();
            if new_signs == signs || est <= previous {
                est = est.max(previous);
                break;
            }
            signs = new_signs;
            let z = self.solve_transpose(&signs);
            let last = j;
            j = argmax(&z);
            if z[last].abs() == z[j].abs() || iter >= 5 {
                break;
            }
            iter += 1;
        }
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n - 1) as f64)
            })
            .collect();
        let temp = 2.0 * norm1(&self.solve(&alt)) / (3 * n) as f64;
        est.max(temp)
    }

    /// Reciprocal 1-norm condition estimate, clamped to `[0, 1]`.
    pub fn rcond_estimate(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        if self.norm_one == 0.0 {
            return 0.0;
        }
        let inv = self.inverse_norm_one_estimate();
        if !inv.is_finite() || inv == 0.0 {
            return 0.0;
        }
        (1.0 / (self.norm_one * inv)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Ok,
    NearSingular,
    Singular,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Ok => "ok",
            SolveStatus::NearSingular => "near_singular",
            SolveStatus::Singular => "singular",
        }
    }

    fn from_rcond(rcond: f64) -> Self {
        if rcond < NEAR_SINGULAR_RCOND {
            SolveStatus::NearSingular
        } else {
            SolveStatus::Ok
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Absent exactly when the status is `Singular`.
    pub coefficients: Option<Vec<f64>>,
    pub rcond_estimate: f64,
    pub status: SolveStatus,
    /// `||K x - b||_inf / (||K||_inf ||x||_inf + ||b||_inf)`
    pub relative_residual: Option<f64>,
}

fn check_finite(matrix: &DenseMatrix) -> Result<()> {
    match matrix.first_non_finite() {
        Some((row, col)) => Err(KansaError::NonFinite { row, col }),
        None => Ok(()),
    }
}

/// Solves a square dense system without refinement or scaling.
pub fn solve_dense(matrix: &DenseMatrix, rhs: &[f64]) -> Result<SolveResult> {
    if matrix.rows() != matrix.cols() {
        return Err(KansaError::SizeMismatch {
            what: "square matrix columns",
            expected: matrix.rows(),
            actual: matrix.cols(),
        });
    }
    if rhs.len() != matrix.rows() {
        return Err(KansaError::SizeMismatch {
            what: "right-hand side",
            expected: matrix.rows(),
            actual: rhs.len(),
        });
    }
    check_finite(matrix)?;
    let lu = match LuFactorization::new(matrix) {
        Ok(lu) => lu,
        Err(_) => {
            return Ok(SolveResult {
                coefficients: None,
                rcond_estimate: 0.0,
                status: SolveStatus::Singular,
                relative_residual: None,
            })
        }
    };
    let x = lu.solve(rhs);
    let rcond = lu.rcond_estimate();

    let kx = matrix.mul_vec(&x);
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let resid: Vec<f64> = kx.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let denom = matrix.norm_inf() * inf(&x) + inf(rhs);
    let relative_residual = if denom > 0.0 { inf(&resid) / denom } else { 0.0 };

    Ok(SolveResult {
        coefficients: Some(x),
        rcond_estimate: rcond,
        status: SolveStatus::from_rcond(rcond),
        relative_residual: Some(relative_residual),
    })
}

/// Solves the collocation system `K c = rhs`.
pub fn solve(system: &KansaSystem) -> Result<SolveResult> {
    solve_dense(&system.matrix, &system.rhs)
}

/// Factorizes without solving and reports the status and rcond estimate.
pub fn classify_matrix(matrix: &DenseMatrix) -> Result<(SolveStatus, f64)> {
    check_finite(matrix)?;
    Ok(match LuFactorization::new(matrix) {
        Ok(lu) => {
            let rcond = lu.rcond_estimate();
            (SolveStatus::from_rcond(rcond), rcond)
        }
        Err(_) => (SolveStatus::Singular, 0.0),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub trials: usize,
    pub singular: usize,
    pub near_singular: usize,
    pub rcond_min: f64,
    pub rcond_median: f64,
    pub rcond_max: f64,
}

impl CensusReport {
    pub fn from_outcomes<I>(outcomes: I) -> Self
    where
        I: IntoIterator<Item = (SolveStatus, f64)>,
    {
        let mut singular = 0;
        let mut near_singular = 0;
        let mut rconds = Vec::new();
        for (status, rcond) in outcomes {
            match status {
                SolveStatus::Singular => singular += 1,
                SolveStatus::NearSingular => near_singular += 1,
                SolveStatus::Ok => {}
            }
            rconds.push(rcond);
        }
        rconds.sort_by(f64::total_cmp);
        let median = match rconds.len() {
            0 => f64::NAN,
            len if len % 2 == 1 => rconds[len / 2],
            len => 0.5 * (rconds[len / 2 - 1] + rconds[len / 2]),
        };
        Self {
            trials: rconds.len(),
            singular,
            near_singular,
            rcond_min: rconds.first().copied().unwrap_or(f64::NAN),
            rcond_median: median,
            rcond_max: rconds.last().copied().unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for CensusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} trials: {} singular, {} near-singular; rcond min {:.3e} median {:.3e} max {:.3e}",
            self.trials,
            self.singular,
            self.near_singular,
            self.rcond_min,
            self.rcond_median,
            self.rcond_max
        )
    }
}

/// Factorizes every system and tallies exact and numerical singularity.
pub fn smallest_pivot_census<I>(systems: I) -> Result<CensusReport>
where
    I: IntoIterator<Item = KansaSystem>,
{
    let outcomes = systems
        .into_iter()
        .map(|s| classify_matrix(&s.matrix))
        .collect::<Result<Vec<_>>>()?;
    Ok(CensusReport::from_outcomes(outcomes))
}
