//! Dense matrix kernels used by the closed-form transform update.
//!
//! Matrices are [`faer::Mat<f64>`] values, stored column-major. Every entry
//! point validates that its inputs are finite. All kernels are deterministic
//! for identical inputs within one build, provided faer's global parallelism
//! is left sequential (see [`use_sequential_kernels`]).

use faer::linalg::solvers::DenseSolveCore;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

/// Dense real matrix, column-major.
pub type Matrix = Mat<f64>;

/// Default cap on the condition estimate accepted by [`invert`].
pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

/// Relative tolerance for the symmetry precondition of [`symmetric_psd_sqrt`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Pins faer's decompositions to a single thread.
///
/// Outputs of the decompositions are then bit-identical regardless of the
/// size of any rayon pool used elsewhere.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(Par::Seq);
}

/// Full singular value decomposition `a = left * diag(singulars) * right^T`.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub left: Matrix,
    /// Non-negative, sorted descending.
    pub singulars: Vec<f64>,
    pub right: Matrix,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> Matrix {
        let scaled = scale_columns(self.left.as_ref(), &self.singulars);
        matmul(scaled.as_ref(), self.right.transpose())
    }
}

/// A symmetric square root `root` of an SPD matrix together with its inverse.
#[derive(Debug, Clone)]
pub struct SymmetricRoot {
    pub root: Matrix,
    pub inverse: Matrix,
}

/// Builds a matrix from row-major data, rejecting non-finite entries.
pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Matrix> {
    if data.len() != rows * cols {
        return Err(Error::Shape(format!(
            "{} values cannot fill a {rows}x{cols} matrix",
            data.len()
        )));
    }
    let m = Mat::from_fn(rows, cols, |i, j| data[i * cols + j]);
    ensure_finite(m.as_ref())?;
    Ok(m)
}

pub fn ensure_finite(a: MatRef<'_, f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NotFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn ensure_square(a: MatRef<'_, f64>, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!(
            "{what} needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `a * b`, single-threaded so that results never depend on a thread pool.
pub fn matmul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Matrix {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// `acc = scale * acc + a * b`.
pub fn matmul_accumulate(acc: &mut Matrix, scale: f64, a: MatRef<'_, f64>, b: MatRef<'_, f64>) {
    if scale == 0.0 {
        faer::linalg::matmul::matmul(acc.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
        return;
    }
    if scale != 1.0 {
        for j in 0..acc.ncols() {
            for x in acc.col_mut(j).iter_mut() {
                *x *= scale;
            }
        }
    }
    faer::linalg::matmul::matmul(acc.as_mut(), Accum::Add, a, b, 1.0, Par::Seq);
}

/// `a * diag(d)`.
pub fn scale_columns(a: MatRef<'_, f64>, d: &[f64]) -> Matrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[j])
}

pub fn frobenius_norm(a: MatRef<'_, f64>) -> f64 {
    a.norm_l2()
}

pub fn is_symmetric(a: MatRef<'_, f64>, rel_tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let scale = a.norm_l2().max(f64::MIN_POSITIVE);
    let mut diff = 0.0;
    for j in 0..a.ncols() {
        for i in (j + 1)..a.nrows() {
            let d = a[(i, j)] - a[(j, i)];
            diff += 2.0 * d * d;
        }
    }
    diff.sqrt() <= rel_tol * scale
}

fn symmetric_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Matrix)> {
    ensure_square(a, "symmetric square root")?;
    ensure_finite(a)?;
    if !is_symmetric(a, SYMMETRY_TOLERANCE) {
        return Err(Error::Shape("matrix is not symmetric".into()));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence {
            n: a.nrows(),
            detail: format!("symmetric eigendecomposition failed: {e:?}"),
        })?;
    let values: Vec<f64> = (0..a.nrows()).map(|i| evd.S()[i]).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok((values, evd.U().to_owned()))
}

/// Symmetric square root of an SPD matrix: `V diag(sqrt(l)) V^T` from the
/// eigendecomposition `a = V diag(l) V^T`. The result is symmetric, so
/// `q * q^T = q * q = a`.
pub fn symmetric_psd_sqrt(a: MatRef<'_, f64>) -> Result<Matrix> {
    let (values, vectors) = symmetric_eigen(a)?;
    let roots: Vec<f64> = values.iter().map(|l| l.sqrt()).collect();
    Ok(matmul(
        scale_columns(vectors.as_ref(), &roots).as_ref(),
        vectors.transpose(),
    ))
}

/// Like [`symmetric_psd_sqrt`], also returning the inverse root from the same
/// eigendecomposition.
pub fn symmetric_sqrt_with_inverse(a: MatRef<'_, f64>) -> Result<SymmetricRoot> {
    let (values, vectors) = symmetric_eigen(a)?;
    let roots: Vec<f64> = values.iter().map(|l| l.sqrt()).collect();
    let inv_roots: Vec<f64> = roots.iter().map(|r| 1.0 / r).collect();
    let root = matmul(
        scale_columns(vectors.as_ref(), &roots).as_ref(),
        vectors.transpose(),
    );
    let inverse = matmul(
        scale_columns(vectors.as_ref(), &inv_roots).as_ref(),
        vectors.transpose(),
    );
    Ok(SymmetricRoot { root, inverse })
}

/// Full SVD of a square matrix.
///
/// Sign convention: the first entry of each left singular vector whose
/// magnitude exceeds `1e-10` is made non-negative, flipping the matching right
/// singular vector with it. Singular values are sorted descending.
pub fn full_svd(a: MatRef<'_, f64>) -> Result<SvdTriple> {
    ensure_square(a, "full SVD")?;
    ensure_finite(a)?;
    let n = a.nrows();
    let svd = a.svd().map_err(|e| Error::NoConvergence {
        n,
        detail: format!("{e:?}"),
    })?;
    let mut left = svd.U().to_owned();
    let mut right = svd.V().to_owned();
    let mut singulars: Vec<f64> = (0..n).map(|i| svd.S()[i]).collect();

    // faer already returns descending values; keep the order stable anyway.
    if singulars.windows(2).any(|w| w[0] < w[1]) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| singulars[j].total_cmp(&singulars[i]));
        left = Mat::from_fn(n, n, |i, j| left[(i, order[j])]);
        right = Mat::from_fn(n, n, |i, j| right[(i, order[j])]);
        singulars = order.iter().map(|&k| singulars[k]).collect();
    }

    for j in 0..n {
        let pivot = (0..n).map(|i| left[(i, j)]).find(|v| v.abs() > 1e-10);
        if matches!(pivot, Some(v) if v < 0.0) {
            for i in 0..n {
                left[(i, j)] = -left[(i, j)];
                right[(i, j)] = -right[(i, j)];
            }
        }
    }
    for s in singulars.iter_mut() {
        // exact zeros can come back as -0.0
        *s = s.abs();
    }
    Ok(SvdTriple {
        left,
        singulars,
        right,
    })
}

fn norm_one(a: MatRef<'_, f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.col(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse via partial-pivot LU. Rejects matrices whose 1-norm condition
/// estimate `|a|_1 |a^-1|_1` exceeds `max_condition`.
pub fn invert_with_cap(a: MatRef<'_, f64>, max_condition: f64) -> Result<Matrix> {
    ensure_square(a, "inversion")?;
    ensure_finite(a)?;
    let norm = norm_one(a);
    if norm == 0.0 {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    let inverse = a.partial_piv_lu().inverse();
    let condition = norm * norm_one(inverse.as_ref());
    if !condition.is_finite() || condition > max_condition {
        return Err(Error::Singular { condition });
    }
    Ok(inverse)
}

pub fn invert(a: MatRef<'_, f64>) -> Result<Matrix> {
    invert_with_cap(a, DEFAULT_MAX_CONDITION)
}

/// Ratio of the largest to the smallest singular value (`inf` when singular).
pub fn condition_number(a: MatRef<'_, f64>) -> Result<f64> {
    ensure_square(a, "condition number")?;
    ensure_finite(a)?;
    let s = a.singular_values().map_err(|e| Error::NoConvergence {
        n: a.nrows(),
        detail: format!("{e:?}"),
    })?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// `log |det a|` from the LU factors; `-inf` for a singular matrix.
pub fn log_abs_det(a: MatRef<'_, f64>) -> Result<f64> {
    ensure_square(a, "determinant")?;
    ensure_finite(a)?;
    let det = a.determinant();
    if det != 0.0 && det.is_finite() {
        return Ok(det.abs().ln());
    }
    // Determinant over/underflowed or is exactly zero: sum log singular values.
    let s = a.singular_values().map_err(|e| Error::NoConvergence {
        n: a.nrows(),
        detail: format!("{e:?}"),
    })?;
    Ok(s.iter().map(|v| v.ln()).sum())
}
