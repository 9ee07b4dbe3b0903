//! Online mini-batch sparsifying transform learner.
//!
//! For each mini-batch `U` (one vectorized patch per column) the learner
//! sparse-codes the batch by hard thresholding `W U`, folds the batch into the
//! forgetting-factor accumulators
//!
//! ```text
//! gamma <- rho * gamma + U U^T
//! theta <- rho * theta + U X^T
//! beta  <- rho * beta  + lambda0 * |U|_F^2
//! ```
//!
//! and replaces `W` by the exact minimizer of
//! `tr(W gamma W^T) - 2 tr(W theta) + beta * (|W|_F^2 - log|det W|)`:
//!
//! ```text
//! Q Q^T = gamma + beta I,   Q^-1 theta = Phi S Psi^T,
//! W = 1/2 Psi (S + (S^2 + 2 beta I)^(1/2)) Phi^T Q^-1
//! ```
//!
//! The batch is then re-coded with the new transform and reconstructed as
//! `W^-1 X`. `W^-1` comes directly from the same factors, so no separate
//! inversion is needed.

mod checkpoint;
pub mod dct;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Hard thresholding: zeroes entries with `|d_r| < alpha`, keeps the rest.
///
/// Ties (`|d_r| == alpha`) are kept. `alpha == 0` passes everything through.
pub fn hard_threshold(d: &[f64], alpha: f64) -> Vec<f64> {
    d.iter()
        .map(|&x| if x.abs() < alpha { 0.0 } else { x })
        .collect()
}

fn hard_threshold_in_place(d: &mut [f64], alpha: f64) {
    for x in d.iter_mut() {
        if x.abs() < alpha {
            *x = 0.0;
        }
    }
}

/// `-log|det w| + |w|_F^2`; `+inf` for a singular `w`.
pub fn regularizer_value(w: MatRef<'_, f64>) -> Result<f64> {
    let log_det = linalg::log_abs_det(w)?;
    if log_det == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(-log_det + w.squared_norm_l2())
}

/// Value of the transform-update objective at `w`, up to the constant
/// `sum rho^(J-j) |X_j|_F^2`.
pub fn update_objective(
    w: MatRef<'_, f64>,
    gamma: MatRef<'_, f64>,
    theta: MatRef<'_, f64>,
    beta: f64,
) -> Result<f64> {
    let wg = linalg::matmul(w, gamma);
    let mut quad = 0.0;
    let mut cross = 0.0;
    for j in 0..w.ncols() {
        for i in 0..w.nrows() {
            quad += wg[(i, j)] * w[(i, j)];
            // tr(W theta) = sum_ij W_ij theta_ji
            cross += w[(i, j)] * theta[(j, i)];
        }
    }
    Ok(quad - 2.0 * cross + beta * regularizer_value(w)?)
}

/// A mini-batch of vectorized patches with per-patch thresholds.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    columns: Matrix,
    alphas: Vec<f64>,
}

impl MiniBatch {
    pub fn new(columns: Matrix, alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() != columns.ncols() {
            return Err(Error::Shape(format!(
                "{} thresholds for {} patches",
                alphas.len(),
                columns.ncols()
            )));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(Error::Config(format!("threshold {a} must be finite and >= 0")));
        }
        linalg::ensure_finite(columns.as_ref())?;
        Ok(Self { columns, alphas })
    }

    /// Every patch shares the threshold `alpha`.
    pub fn uniform(columns: Matrix, alpha: f64) -> Result<Self> {
        let alphas = vec![alpha; columns.ncols()];
        Self::new(columns, alphas)
    }

    pub fn columns(&self) -> &Matrix {
        &self.columns
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }
}

/// Transform-domain sparse codes of a mini-batch, one column per patch.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodes {
    pub columns: Matrix,
}

impl SparseCodes {
    pub fn nonzeros(&self, col: usize) -> usize {
        self.columns.col(col).iter().filter(|x| **x != 0.0).count()
    }
}

/// Result of [`LearnerState::denoise_minibatch`].
#[derive(Debug, Clone)]
pub struct DenoisedBatch {
    pub patches: Matrix,
    pub codes: SparseCodes,
    /// False when the transform update was skipped for degenerate
    /// accumulators and the previous transform was used.
    pub updated: bool,
}

/// Transform, its inverse, and the forgetting-factor accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    w: Matrix,
    w_inv: Matrix,
    gamma: Matrix,
    theta: Matrix,
    beta: f64,
    rho: f64,
    lambda0: f64,
    minibatch_count: u64,
    adaptive: bool,
    alternations: usize,
}

impl LearnerState {
    /// Starts from `initial` with empty accumulators.
    pub fn new(initial: Matrix, rho: f64, lambda0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Config(format!("forgetting factor {rho} not in [0, 1]")));
        }
        if !(lambda0 > 0.0) || !lambda0.is_finite() {
            return Err(Error::Config(format!("lambda0 {lambda0} must be positive")));
        }
        let w_inv = linalg::invert(initial.as_ref())?;
        let n = initial.nrows();
        Ok(Self {
            w: initial,
            w_inv,
            gamma: Mat::zeros(n, n),
            theta: Mat::zeros(n, n),
            beta: 0.0,
            rho,
            lambda0,
            minibatch_count: 0,
            adaptive: true,
            alternations: 1,
        })
    }

    /// Starts from the 3D DCT for `n1 x n2 x m` patches.
    pub fn with_dct(n1: usize, n2: usize, m: usize, rho: f64, lambda0: f64) -> Result<Self> {
        Self::new(dct::dct3d(n1, n2, m), rho, lambda0)
    }

    /// A learner that never updates its transform (fixed-transform baseline).
    pub fn frozen(mut self) -> Self {
        self.adaptive = false;
        self
    }

    /// Number of sparse-coding/update alternations per mini-batch (default 1).
    pub fn with_alternations(mut self, alternations: usize) -> Self {
        self.alternations = alternations.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }
    pub fn w(&self) -> &Matrix {
        &self.w
    }
    pub fn w_inv(&self) -> &Matrix {
        &self.w_inv
    }
    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }
    pub fn theta(&self) -> &Matrix {
        &self.theta
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }
    pub fn minibatch_count(&self) -> u64 {
        self.minibatch_count
    }
    pub fn is_adaptive(&self) -> bool {
        self.adaptive
    }

    fn check_batch(&self, batch: &MiniBatch) -> Result<()> {
        if batch.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "patches of length {} for a {n}x{n} transform",
                batch.dim(),
                n = self.dim()
            )));
        }
        Ok(())
    }

    fn code_with(w: &Matrix, batch: &MiniBatch) -> SparseCodes {
        let mut columns = linalg::matmul(w.as_ref(), batch.columns.as_ref());
        for (j, &alpha) in batch.alphas.iter().enumerate() {
            hard_threshold_in_place(columns.col_as_slice_mut(j), alpha);
        }
        SparseCodes { columns }
    }

    /// Column `i` is `hard_threshold(W u_i, alpha_i)`.
    pub fn sparse_code(&self, batch: &MiniBatch) -> Result<SparseCodes> {
        self.check_batch(batch)?;
        Ok(Self::code_with(&self.w, batch))
    }

    /// Folds a batch and its codes into the accumulators and advances the
    /// mini-batch counter.
    pub fn accumulate(&mut self, batch: &MiniBatch, codes: &SparseCodes) -> Result<()> {
        self.check_batch(batch)?;
        if codes.columns.nrows() != batch.dim() || codes.columns.ncols() != batch.len() {
            return Err(Error::Shape(format!(
                "codes are {}x{}, batch is {}x{}",
                codes.columns.nrows(),
                codes.columns.ncols(),
                batch.dim(),
                batch.len()
            )));
        }
        let u = batch.columns.as_ref();
        linalg::matmul_accumulate(&mut self.gamma, self.rho, u, u.transpose());
        linalg::matmul_accumulate(&mut self.theta, self.rho, u, codes.columns.transpose());
        self.beta = self.rho * self.beta + self.lambda0 * u.squared_norm_l2();
        self.minibatch_count += 1;
        Ok(())
    }

    /// Closed-form transform update from the current accumulators.
    ///
    /// On error the transform is left unchanged.
    pub fn transform_update(&mut self) -> Result<()> {
        let (w, w_inv) = closed_form_update(&self.gamma, &self.theta, self.beta)?;
        self.w = w;
        self.w_inv = w_inv;
        Ok(())
    }

    /// Sparse code, accumulate, update the transform, re-code with the new
    /// transform, and reconstruct the batch as `W^-1 X`.
    ///
    /// When the accumulators are degenerate the update is skipped and the
    /// previous transform is used for the reconstruction.
    pub fn denoise_minibatch(&mut self, batch: &MiniBatch) -> Result<DenoisedBatch> {
        self.check_batch(batch)?;
        let mut updated = false;
        if self.adaptive {
            let before = (self.alternations > 1).then(|| (self.theta.clone(), self.beta));
            for round in 0..self.alternations {
                let codes = Self::code_with(&self.w, batch);
                if round == 0 {
                    self.accumulate(batch, &codes)?;
                } else if let Some((theta0, _)) = &before {
                    // Re-fit against this batch's refreshed codes only.
                    self.theta = theta0.clone();
                    let u = batch.columns.as_ref();
                    linalg::matmul_accumulate(
                        &mut self.theta,
                        self.rho,
                        u,
                        codes.columns.transpose(),
                    );
                }
                match self.transform_update() {
                    Ok(()) => updated = true,
                    Err(Error::DegenerateAccumulators { .. }) => break,
                    Err(e) => return Err(e),
                }
            }
        } else {
            self.minibatch_count += 1;
        }
        let codes = Self::code_with(&self.w, batch);
        let patches = linalg::matmul(self.w_inv.as_ref(), codes.columns.as_ref());
        Ok(DenoisedBatch {
            patches,
            codes,
            updated,
        })
    }
}

/// Returns the minimizing transform and its inverse for the accumulators.
pub fn closed_form_update(gamma: &Matrix, theta: &Matrix, beta: f64) -> Result<(Matrix, Matrix)> {
    let n = gamma.nrows();
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::DegenerateAccumulators { beta });
    }
    let mut shifted = gamma.clone();
    for i in 0..n {
        shifted[(i, i)] += beta;
    }
    // Accumulated U U^T is symmetric only up to rounding in the gemm.
    let shifted = Mat::from_fn(n, n, |i, j| 0.5 * (shifted[(i, j)] + shifted[(j, i)]));
    let root = match linalg::symmetric_sqrt_with_inverse(shifted.as_ref()) {
        Ok(r) => r,
        Err(Error::NotPositiveDefinite { .. }) => {
            return Err(Error::DegenerateAccumulators { beta });
        }
        Err(e) => return Err(e),
    };
    let b = linalg::matmul(root.inverse.as_ref(), theta.as_ref());
    let svd = linalg::full_svd(b.as_ref())?;
    let diag: Vec<f64> = svd
        .singulars
        .iter()
        .map(|s| 0.5 * (s + (s * s + 2.0 * beta).sqrt()))
        .collect();
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    // W = Psi D Phi^T Q^-1
    let psi_d = linalg::scale_columns(svd.right.as_ref(), &diag);
    let phi_t_qinv = linalg::matmul(svd.left.transpose(), root.inverse.as_ref());
    let w = linalg::matmul(psi_d.as_ref(), phi_t_qinv.as_ref());
    // W^-1 = Q Phi D^-1 Psi^T
    let q_phi = linalg::matmul(root.root.as_ref(), svd.left.as_ref());
    let q_phi_dinv = linalg::scale_columns(q_phi.as_ref(), &inv_diag);
    let w_inv = linalg::matmul(q_phi_dinv.as_ref(), svd.right.transpose());
    linalg::ensure_finite(w.as_ref())?;
    linalg::ensure_finite(w_inv.as_ref())?;
    Ok((w, w_inv))
}
