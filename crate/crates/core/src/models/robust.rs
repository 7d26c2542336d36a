//! Huber regression (iteratively reweighted least squares) and the
//! passive-aggressive online regressor.

use nalgebra::{DMatrix, DVector};

use super::linear::{min_norm_solve, LinearFit};
use crate::error::Result;
use crate::stats;

#[derive(Debug, Clone, Copy)]
pub(crate) struct HuberConfig {
    /// Residuals beyond `epsilon` robust scales are down-weighted.
    pub epsilon: f64,
    /// L2 penalty on the slopes.
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
}

/// Normal-consistency factor for the median absolute deviation.
const MAD_SCALE: f64 = 0.674_489_750_196_081_7;

fn weighted_solve(x: &DMatrix<f64>, y: &[f64], w: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let (n, p) = (x.nrows(), x.ncols());
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, p + 1, |i, j| sqrt_w[i] * if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let target = DVector::from_iterator(n, (0..n).map(|i| sqrt_w[i] * y[i]));
    let mut lhs = scaled.tr_mul(&scaled);
    for j in 1..=p {
        lhs[(j, j)] += alpha;
    }
    if let Some(chol) = lhs.cholesky() {
        let sol = chol.solve(&scaled.tr_mul(&target));
        if sol.iter().all(|v| v.is_finite()) {
            return Ok(sol.iter().copied().collect());
        }
    }
    // Rank-deficient weighted system: fall back to the minimum-norm solution.
    let mut aug = scaled.resize_vertically(n + p, 0.0);
    for j in 0..p {
        aug[(n + j, j + 1)] = alpha.sqrt();
    }
    let target = target.resize_vertically(n + p, 0.0);
    Ok(min_norm_solve(&aug, &target)?.0)
}

pub(crate) fn huber(x: &DMatrix<f64>, y: &[f64], cfg: &HuberConfig) -> Result<LinearFit> {
    let n = x.nrows();
    let mut w = vec![1.0; n];
    let mut theta = weighted_solve(x, y, &w, cfg.alpha)?;
    let y_scale = 1.0 + y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let resid: Vec<f64> = (0..n)
            .map(|i| y[i] - theta[0] - (0..x.ncols()).map(|j| x[(i, j)] * theta[j + 1]).sum::<f64>())
            .collect();
        let center = stats::median(&resid);
        let abs_dev: Vec<f64> = resid.iter().map(|r| (r - center).abs()).collect();
        let sigma = stats::median(&abs_dev) / MAD_SCALE;
        if sigma <= 1e-12 * y_scale {
            converged = true;
            break;
        }
        let cut = cfg.epsilon * sigma;
        for (wi, r) in w.iter_mut().zip(&resid) {
            *wi = if r.abs() <= cut { 1.0 } else { cut / r.abs() };
        }
        let next = weighted_solve(x, y, &w, cfg.alpha)?;
        let moved = next.iter().zip(&theta).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let size = next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        theta = next;
        if moved <= cfg.tol * (1.0 + size) {
            converged = true;
            break;
        }
    }
    Ok(LinearFit {
        intercept: theta[0],
        coef: theta[1..].to_vec(),
        iterations,
        converged,
        singular: false,
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PaConfig {
    /// Step-size cap (aggressiveness).
    pub c: f64,
    /// Width of the insensitive zone.
    pub epsilon: f64,
    pub epochs: usize,
}

/// PA-I updates in data order; the intercept is an extra always-one input.
pub(crate) fn passive_aggressive(x: &DMatrix<f64>, y: &[f64], cfg: &PaConfig) -> LinearFit {
    let (n, p) = (x.nrows(), x.ncols());
    let mut coef = vec![0.0; p];
    let mut intercept = 0.0;
    let sq_norms: Vec<f64> = x.row_iter().map(|r| r.norm_squared() + 1.0).collect();
    for _ in 0..cfg.epochs {
        for i in 0..n {
            let pred = intercept + (0..p).map(|j| coef[j] * x[(i, j)]).sum::<f64>();
            let err = y[i] - pred;
            let loss = err.abs() - cfg.epsilon;
            if loss > 0.0 {
                let step = (loss / sq_norms[i]).min(cfg.c) * err.signum();
                for (j, b) in coef.iter_mut().enumerate() {
                    *b += step * x[(i, j)];
                }
                intercept += step;
            }
        }
    }
    LinearFit {
        intercept,
        coef,
        iterations: cfg.epochs,
        converged: true,
        singular: false,
    }
}
