//! Small dense helpers used as independent oracles in the integration tests.
//! Matrices are plain row-major `Vec<Vec<f64>>`, nothing shared with the
//! library's kernels.

#![allow(dead_code)]

use faer::Mat;
use rand::Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![0.0; c]; r]
}

pub fn identity(n: usize) -> Dense {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    a
}

pub fn random(rng: &mut impl Rng, r: usize, c: usize) -> Dense {
    (0..r)
        .map(|_| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            out[i][j] = (0..k).map(|t| a[i][t] * b[t][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn add_scaled(a: &Dense, s: f64, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + s * q).collect())
        .collect()
}

pub fn frob2(a: &Dense) -> f64 {
    a.iter().flatten().map(|x| x * x).sum()
}

pub fn to_mat(a: &Dense) -> Mat<f64> {
    Mat::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

pub fn from_mat(a: &Mat<f64>) -> Dense {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

/// Determinant and inverse by Gauss-Jordan elimination with partial pivoting.
pub fn det_inv(a: &Dense) -> (f64, Dense) {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity(n);
    let mut det = 1.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[p][col] == 0.0 {
            return (0.0, zeros(n, n));
        }
        if p != col {
            m.swap(p, col);
            inv.swap(p, col);
            det = -det;
        }
        let d = m[col][col];
        det *= d;
        for j in 0..n {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[i][j] -= f * m[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    (det, inv)
}

/// `tr(W G W^T) - 2 tr(W T) + beta (|W|_F^2 - log|det W|)`.
pub fn objective(w: &Dense, gamma: &Dense, theta: &Dense, beta: f64) -> f64 {
    let n = w.len();
    let wg = mul(w, gamma);
    let mut quad = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += wg[i][j] * w[i][j];
            cross += w[i][j] * theta[j][i];
        }
    }
    let (det, _) = det_inv(w);
    if det == 0.0 {
        return f64::INFINITY;
    }
    quad - 2.0 * cross + beta * (frob2(w) - det.abs().ln())
}

fn gradient(w: &Dense, gamma: &Dense, theta: &Dense, beta: f64) -> Dense {
    // 2 W G - 2 T^T + 2 beta W - beta W^-T
    let (_, inv) = det_inv(w);
    let inv_t = transpose(&inv);
    let g = add_scaled(&mul(w, gamma), -1.0, &transpose(theta));
    let g = add_scaled(&g, beta, w);
    let g = add_scaled(&g, 1.0, &g.clone());
    add_scaled(&g, -beta, &inv_t)
}

fn flatten(a: &Dense) -> Vec<f64> {
    a.iter().flatten().copied().collect()
}

fn unflatten(v: &[f64], n: usize) -> Dense {
    v.chunks(n).map(|c| c.to_vec()).collect()
}

/// BFGS with Armijo backtracking, started at `start`. Steps that would flip
/// the sign of `det W` are rejected, so the search stays in the start's
/// connected component.
pub fn bfgs_minimize(gamma: &Dense, theta: &Dense, beta: f64, start: Dense) -> (Dense, f64) {
    let n = start.len();
    let dim = n * n;
    let f = |x: &[f64]| objective(&unflatten(x, n), gamma, theta, beta);
    let grad = |x: &[f64]| flatten(&gradient(&unflatten(x, n), gamma, theta, beta));
    let sign = det_inv(&start).0.signum();
    let mut x = flatten(&start);
    let mut fx = f(&x);
    let mut g = grad(&x);
    let mut h = vec![vec![0.0; dim]; dim];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..5000 {
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        let mut p: Vec<f64> = (0..dim).map(|i| -(0..dim).map(|j| h[i][j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // lost descent direction: restart from steepest descent
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0;
            }
            p = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let wn = unflatten(&xn, n);
            if det_inv(&wn).0.signum() == sign {
                let fn_ = f(&xn);
                if fn_ <= fx + 1e-4 * t * slope {
                    accepted = Some((xn, fn_));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_)) = accepted else { break };
        let gn = grad(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..dim).map(|i| (0..dim).map(|j| h[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..dim {
                for j in 0..dim {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    (unflatten(&x, n), fx)
}

/// Best of BFGS runs started at the identity and at a reflection, covering
/// both signs of the determinant.
pub fn numerical_minimum(gamma: &Dense, theta: &Dense, beta: f64) -> f64 {
    let n = gamma.len();
    let mut reflect = identity(n);
    reflect[0][0] = -1.0;
    let a = bfgs_minimize(gamma, theta, beta, identity(n)).1;
    let b = bfgs_minimize(gamma, theta, beta, reflect).1;
    a.min(b)
}

/// A random accumulator triple: PSD gamma, arbitrary theta, beta > 0.
pub fn random_triple(rng: &mut impl Rng, n: usize) -> (Dense, Dense, f64) {
    let a = random(rng, n, n + 2);
    let gamma = mul(&a, &transpose(&a));
    let theta = random(rng, n, n);
    let beta = rng.gen_range(0.05..2.0);
    (gamma, theta, beta)
}

/// Exhaustive sparse-coding oracle: minimum over all supports `S` of
/// `|d - x_S|^2 + alpha^2 |S|` with `x_S = d` on `S`.
pub fn exhaustive_code_objective(d: &[f64], alpha: f64) -> f64 {
    let n = d.len();
    (0u32..1 << n)
        .map(|mask| {
            (0..n)
                .map(|r| {
                    if mask >> r & 1 == 1 {
                        alpha * alpha
                    } else {
                        d[r] * d[r]
                    }
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `|d - x|^2 + alpha^2 |x|_0`.
pub fn code_objective(d: &[f64], x: &[f64], alpha: f64) -> f64 {
    d.iter()
        .zip(x)
        .map(|(a, b)| (a - b) * (a - b) + if *b != 0.0 { alpha * alpha } else { 0.0 })
        .sum()
}
