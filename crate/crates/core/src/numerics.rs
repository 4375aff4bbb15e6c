//! Dense numerical kernel shared by the reconstruction engines.
//!
//! Least squares goes through an orthogonal factorization: a Householder QR
//! compresses tall systems to a square triangle, and an SVD of that triangle
//! yields the numerical rank and the minimum-norm solution. Normal equations
//! are never formed.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{check_len, invalid, Error, Result};

/// Dense matrix storage used throughout the crate.
pub type DenseMatrix<T = f64> = DMatrix<T>;

/// Relative singular-value cutoff used when the caller does not supply one:
/// `1e-10 * max(rows, cols)`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    1e-10 * rows.max(cols) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresSolution<T: ComplexField<RealField = f64>> {
    pub solution: DVector<T>,
    pub residual_norm: f64,
    pub rank: usize,
    /// Ratio of the largest to the smallest singular value (infinite when
    /// the smallest one is exactly zero).
    pub condition_estimate: f64,
}

impl<T: ComplexField<RealField = f64>> LeastSquaresSolution<T> {
    pub fn is_full_column_rank(&self) -> bool {
        self.rank == self.solution.len()
    }
}

/// A factored least-squares operator that can be applied to many right-hand
/// sides.
#[derive(Debug, Clone)]
pub struct LeastSquaresFactor<T: ComplexField<RealField = f64>> {
    matrix: DMatrix<T>,
    // Maps b to the coordinates of its projection in the left singular basis.
    left_adjoint: DMatrix<T>,
    right: DMatrix<T>,
    singular_values: Vec<f64>,
    cutoff: f64,
}

fn ensure_finite<T: ComplexField<RealField = f64>>(
    values: impl IntoIterator<Item = T>,
    what: &'static str,
) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl<T: ComplexField<RealField = f64>> LeastSquaresFactor<T> {
    /// Factors `a` with the default rank cutoff.
    pub fn new(a: DMatrix<T>) -> Result<Self> {
        let tol = default_rank_tol(a.nrows(), a.ncols());
        Self::with_tolerance(a, tol)
    }

    /// Factors `a`; singular values at or below `rel_tol * sigma_max` are
    /// treated as zero.
    pub fn with_tolerance(a: DMatrix<T>, rel_tol: f64) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(invalid("least-squares matrix must have at least one row and column"));
        }
        if !(rel_tol.is_finite() && rel_tol >= 0.0) {
            return Err(invalid("rank tolerance must be finite and nonnegative"));
        }
        ensure_finite(a.iter().cloned(), "least-squares matrix")?;

        let (left_adjoint, right, singular_values) = if a.nrows() >= a.ncols() {
            let qr = a.clone().qr();
            let q = qr.q();
            let r = qr.r();
            let svd = r.svd(true, true);
            let u = svd.u.expect("left singular vectors requested");
            let v_t = svd.v_t.expect("right singular vectors requested");
            ((q * u).adjoint(), v_t.adjoint(), svd.singular_values)
        } else {
            let svd = a.clone().svd(true, true);
            let u = svd.u.expect("left singular vectors requested");
            let v_t = svd.v_t.expect("right singular vectors requested");
            (u.adjoint(), v_t.adjoint(), svd.singular_values)
        };
        let singular_values: Vec<f64> = singular_values.iter().copied().collect();
        let sigma_max = singular_values.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            matrix: a,
            left_adjoint,
            right,
            singular_values,
            cutoff: rel_tol * sigma_max,
        })
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn rank(&self) -> usize {
        self.singular_values
            .iter()
            .filter(|&&s| s > self.cutoff)
            .count()
    }

    pub fn condition_estimate(&self) -> f64 {
        let max = self.singular_values.iter().copied().fold(0.0, f64::max);
        // A wide system has cols - rows implicit zero singular values.
        let min = if self.rows() < self.cols() {
            0.0
        } else {
            self.singular_values
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        };
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }

    /// Minimum-norm minimizer of `||b - A x||`.
    pub fn solve(&self, b: &DVector<T>) -> Result<LeastSquaresSolution<T>> {
        check_len("least-squares right-hand side", self.rows(), b.len())?;
        ensure_finite(b.iter().cloned(), "least-squares right-hand side")?;
        let mut z = &self.left_adjoint * b;
        for (zi, &s) in z.iter_mut().zip(&self.singular_values) {
            if s > self.cutoff {
                *zi = zi.clone().unscale(s);
            } else {
                *zi = T::zero();
            }
        }
        let solution = &self.right * z;
        let residual = b - &self.matrix * &solution;
        Ok(LeastSquaresSolution {
            residual_norm: residual.norm(),
            rank: self.rank(),
            condition_estimate: self.condition_estimate(),
            solution,
        })
    }
}

/// Minimum-norm least-squares solution of `A x ≈ b` with the default rank
/// cutoff.
pub fn solve_least_squares<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    b: &DVector<T>,
) -> Result<LeastSquaresSolution<T>> {
    check_len("least-squares right-hand side", a.nrows(), b.len())?;
    LeastSquaresFactor::new(a.clone())?.solve(b)
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid("rank tolerance must lie in (0, 1)"));
    }
    if a.is_empty() {
        return Ok(0);
    }
    ensure_finite(a.iter().cloned(), "rank matrix")?;
    let singular = if a.nrows() > a.ncols() {
        a.clone().qr().r().singular_values()
    } else {
        a.singular_values()
    };
    let max = singular.iter().copied().fold(0.0, f64::max);
    Ok(singular.iter().filter(|&&s| s > rel_tol * max).count())
}

/// Unnormalized forward DFT, or the inverse DFT with `1/n` scaling.
pub fn dft(v: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    let n = v.len();
    if n == 0 {
        return Err(invalid("DFT input must be nonempty"));
    }
    if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("DFT input"));
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = sign * 2.0 * PI * k as f64 / n as f64;
            Complex64::from_polar(1.0, angle)
        })
        .collect();
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    Ok((0..n)
        .map(|k| {
            let acc = v
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (j, &x)| {
                    acc + x * twiddles[(j * k) % n]
                });
            acc * scale
        })
        .collect())
}
