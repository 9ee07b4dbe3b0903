//! Separable 3D DCT used as the initial transform.

use faer::Mat;

use crate::linalg::Matrix;

/// Orthonormal 1D DCT-II matrix; row `u` is the `u`-th basis vector.
pub fn dct_matrix(k: usize) -> Matrix {
    let kf = k as f64;
    Mat::from_fn(k, k, |u, x| {
        let c = if u == 0 { (1.0 / kf).sqrt() } else { (2.0 / kf).sqrt() };
        c * (std::f64::consts::PI * (2.0 * x as f64 + 1.0) * u as f64 / (2.0 * kf)).cos()
    })
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// 3D DCT for `n1 x n2 x m` patches, `D_m (x) D_n1 (x) D_n2`.
///
/// The Kronecker order matches the patch vectorization, where the column
/// index varies fastest, then the row, then the temporal depth.
pub fn dct3d(n1: usize, n2: usize, m: usize) -> Matrix {
    kron(&dct_matrix(m), &kron(&dct_matrix(n1), &dct_matrix(n2)))
}
