//! Complex scalars, dense matrices and LU factorization with partial pivoting.
//!
//! Everything here is dense. Power-flow Jacobians and admittance matrices for
//! desk-scale cases are tiny, so the factorization is kept simple. Callers that
//! only need "solve this system" go through [`LinearSolver`], which is the seam
//! a sparse backend would plug into.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};

use crate::Error;

pub use num_complex::Complex64 as Complex;

/// Pivots whose magnitude relative to their original row scale falls below
/// this value mark the matrix as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// Field element the factorization works over (`f64` or [`Complex`]).
pub trait Scalar:
    Copy
    + PartialEq
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Magnitude used for pivot selection and norms.
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn magnitude(self) -> f64 {
        libm::fabs(self)
    }
}

impl Scalar for Complex {
    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex::new(1.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
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

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, Error> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[T]]) -> Result<Self, Error> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>, Error> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    pub fn mul_mat(&self, other: &Self) -> Result<Self, Error> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.magnitude()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Packed LU factors of `P·A`: unit lower-triangular `L` below the diagonal,
/// `U` on and above it.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors<T> {
    lu: DenseMatrix<T>,
    /// `perm[i]` is the row of `A` that ended up in row `i`.
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactors<T> {
    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut l = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l[(i, j)] = self.lu[(i, j)];
            }
        }
        l
    }

    pub fn upper(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut u = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                u[(i, j)] = self.lu[(i, j)];
            }
        }
        u
    }

    /// Permutation matrix `P` with `P·A = L·U`.
    pub fn permutation_matrix(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut p = DenseMatrix::zeros(n, n);
        for (i, &src) in self.perm.iter().enumerate() {
            p[(i, src)] = T::one();
        }
        p
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, Error> {
        lu_solve(self, rhs)
    }
}

/// Factors a square matrix with row partial pivoting.
///
/// The pivot in each column is the largest remaining entry, so every
/// multiplier in `L` has magnitude at most one. Singularity is judged on the
/// pivot relative to the largest entry of its original row: a relative pivot
/// below [`SINGULAR_PIVOT`] (or an all-zero row) is reported as
/// [`Error::SingularMatrix`].
pub fn lu_factor<T: Scalar>(m: &DenseMatrix<T>) -> Result<LuFactors<T>, Error> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            found: m.cols,
        });
    }
    let n = m.rows;
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut scale: Vec<f64> = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.magnitude()).fold(0.0, f64::max))
        .collect();

    for k in 0..n {
        let (p, pmag) = (k..n)
            .map(|i| (i, lu[(i, k)].magnitude()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let relative = if scale[p] > 0.0 { pmag / scale[p] } else { 0.0 };
        if relative.is_nan() || relative < SINGULAR_PIVOT {
            return Err(Error::SingularMatrix {
                column: k,
                pivot: relative,
            });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            scale.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                lu[(i, j)] = lu[(i, j)] - factor * ukj;
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

/// Solves `A·x = rhs` given the factors of `A`.
pub fn lu_solve<T: Scalar>(factors: &LuFactors<T>, rhs: &[T]) -> Result<Vec<T>, Error> {
    let n = factors.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let lu = &factors.lu;
    let mut x: Vec<T> = factors.perm.iter().map(|&src| rhs[src]).collect();
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc = acc - lu[(i, j)] * x[j];
        }
        x[i] = acc;
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc = acc - lu[(i, j)] * x[j];
        }
        x[i] = acc / lu[(i, i)];
    }
    Ok(x)
}

/// Factor-and-solve in one call.
pub fn solve<T: Scalar>(m: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>, Error> {
    lu_solve(&lu_factor(m)?, rhs)
}

/// Linear-system backend used by the power-flow iteration.
pub trait LinearSolver {
    fn solve(&self, m: &DenseMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, Error>;
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseLu;

impl LinearSolver for DenseLu {
    fn solve(&self, m: &DenseMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, Error> {
        solve(m, rhs)
    }
}
