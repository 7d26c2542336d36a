//! Least squares, ridge and elastic-net coordinate descent.
//!
//! All solvers work on column-centered data and recover the intercept from
//! the means afterwards; the intercept is never penalized.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct Centered {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_mean: Vec<f64>,
    pub y_mean: f64,
}

impl Centered {
    pub fn new(x: &DMatrix<f64>, y: &[f64]) -> Self {
        let n = x.nrows() as f64;
        let x_mean: Vec<f64> = x.column_iter().map(|c| c.sum() / n).collect();
        let mut xc = x.clone();
        for (j, mut col) in xc.column_iter_mut().enumerate() {
            col.add_scalar_mut(-x_mean[j]);
        }
        let y_mean = y.iter().sum::<f64>() / n;
        let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - y_mean));
        Self {
            x: xc,
            y: yc,
            x_mean,
            y_mean,
        }
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn intercept(&self, coef: &[f64]) -> f64 {
        self.y_mean - self.x_mean.iter().zip(coef).map(|(m, b)| m * b).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LinearFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Rank-deficient system solved by the minimum-norm convention.
    pub singular: bool,
}

/// Minimum-norm least squares via SVD.
pub(crate) fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<LinearFit> {
    let c = Centered::new(x, y);
    let (coef, singular) = min_norm_solve(&c.x, &c.y)?;
    Ok(LinearFit {
        intercept: c.intercept(&coef),
        coef,
        iterations: 1,
        converged: true,
        singular,
    })
}

pub(crate) fn min_norm_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(Vec<f64>, bool)> {
    let p = x.ncols();
    if p == 0 {
        return Ok((vec![], false));
    }
    let svd = x.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let eps = s_max * x.nrows().max(p) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let beta = svd
        .solve(y, eps.max(f64::MIN_POSITIVE))
        .map_err(|m| Error::Numerical {
            iteration: 0,
            message: m.to_string(),
        })?;
    Ok((beta.iter().copied().collect(), rank < p))
}

/// Minimizes `‖y − Xβ − b‖² + α‖β‖²` in closed form.
pub(crate) fn ridge(x: &DMatrix<f64>, y: &[f64], alpha: f64) -> Result<LinearFit> {
    if alpha == 0.0 {
        return ols(x, y);
    }
    let c = Centered::new(x, y);
    let mut gram = c.x.tr_mul(&c.x);
    for j in 0..c.p() {
        gram[(j, j)] += alpha;
    }
    let rhs = c.x.tr_mul(&c.y);
    let chol = gram.cholesky().ok_or_else(|| Error::Numerical {
        iteration: 0,
        message: "ridge system is not positive definite".into(),
    })?;
    let coef: Vec<f64> = chol.solve(&rhs).iter().copied().collect();
    Ok(LinearFit {
        intercept: c.intercept(&coef),
        coef,
        iterations: 1,
        converged: true,
        singular: false,
    })
}

/// `sign(z) · max(|z| − γ, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0, "threshold must be non-negative");
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CdOptions {
    pub alpha: f64,
    pub l1_ratio: f64,
    pub max_iter: usize,
    /// Stop once the KKT residual (in gradient units) drops to this level.
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct CdResult {
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Objective after each full sweep.
    pub objective: Vec<f64>,
}

/// Elastic-net objective on centered data:
/// `(1/2n)‖y − Xβ‖² + α·ρ‖β‖₁ + (α(1 − ρ)/2)‖β‖²`.
pub fn elastic_net_objective(x: &DMatrix<f64>, y: &DVector<f64>, coef: &[f64], alpha: f64, l1_ratio: f64) -> f64 {
    let beta = DVector::from_column_slice(coef);
    let r = y - x * beta;
    objective_from_residual(&r, coef, x.nrows(), alpha, l1_ratio)
}

fn objective_from_residual(r: &DVector<f64>, coef: &[f64], n: usize, alpha: f64, l1_ratio: f64) -> f64 {
    let l1: f64 = coef.iter().map(|b| b.abs()).sum();
    let l2: f64 = coef.iter().map(|b| b * b).sum();
    r.norm_squared() / (2.0 * n as f64) + alpha * l1_ratio * l1 + 0.5 * alpha * (1.0 - l1_ratio) * l2
}

fn kkt_residual(x: &DMatrix<f64>, r: &DVector<f64>, coef: &[f64], opts: &CdOptions, active: &[bool]) -> f64 {
    let n = x.nrows() as f64;
    let l1 = opts.alpha * opts.l1_ratio;
    let l2 = opts.alpha * (1.0 - opts.l1_ratio);
    let mut worst: f64 = 0.0;
    for (j, &b) in coef.iter().enumerate() {
        if !active[j] {
            continue;
        }
        let grad = x.column(j).dot(r) / n - l2 * b;
        let violation = if b != 0.0 {
            (grad - l1 * b.signum()).abs()
        } else {
            (grad.abs() - l1).max(0.0)
        };
        worst = worst.max(violation);
    }
    worst
}

/// Cyclic coordinate descent for the elastic-net objective on centered data.
pub fn coordinate_descent(x: &DMatrix<f64>, y: &DVector<f64>, opts: &CdOptions, warm: Option<&[f64]>) -> CdResult {
    let (n, p) = (x.nrows(), x.ncols());
    let nf = n as f64;
    let l1 = opts.alpha * opts.l1_ratio;
    let l2 = opts.alpha * (1.0 - opts.l1_ratio);
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / nf).collect();
    // Zero-variance columns carry no information and stay at zero.
    let usable: Vec<bool> = col_sq.iter().map(|&s| s > 0.0).collect();

    let mut coef = vec![0.0; p];
    if let Some(w) = warm {
        for j in 0..p {
            if usable[j] {
                coef[j] = w[j];
            }
        }
    }
    let mut r = y - x * DVector::from_column_slice(&coef);
    let mut objective = Vec::new();
    let mut kkt = kkt_residual(x, &r, &coef, opts, &usable);
    let mut iterations = 0;
    while kkt > opts.tol && iterations < opts.max_iter {
        for j in 0..p {
            if !usable[j] {
                continue;
            }
            let col = x.column(j);
            let old = coef[j];
            let rho = col.dot(&r) / nf + col_sq[j] * old;
            let new = soft_threshold(rho, l1) / (col_sq[j] + l2);
            if new != old {
                r.axpy(old - new, &col, 1.0);
                coef[j] = new;
            }
        }
        iterations += 1;
        objective.push(objective_from_residual(&r, &coef, n, opts.alpha, opts.l1_ratio));
        kkt = kkt_residual(x, &r, &coef, opts, &usable);
    }
    CdResult {
        coef,
        iterations,
        converged: kkt <= opts.tol,
        kkt_residual: kkt,
        objective,
    }
}

pub(crate) fn elastic_net(x: &DMatrix<f64>, y: &[f64], opts: &CdOptions) -> LinearFit {
    let c = Centered::new(x, y);
    let res = coordinate_descent(&c.x, &c.y, opts, None);
    LinearFit {
        intercept: c.intercept(&res.coef),
        coef: res.coef,
        iterations: res.iterations,
        converged: res.converged,
        singular: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testutil::random_problem;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-4.0, 1.5), -2.5);
    }

    #[test]
    fn exact_interpolation() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let fit = ols(&x, &[2.0, 4.0]).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn singular_design_flagged() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let fit = ols(&x, &[1.0, 2.0, 3.0]).unwrap();
        assert!(fit.singular);
        // Minimum-norm split of the collinear pair: β ∝ (1, 2).
        assert!((fit.coef[1] - 2.0 * fit.coef[0]).abs() < 1e-10);
    }

    #[test]
    fn zero_penalty_matches_ols() {
        let (x, y) = random_problem(40, 6, 1);
        let ls = ols(&x, &y).unwrap();
        let cd = elastic_net(&x, &y, &CdOptions { alpha: 0.0, l1_ratio: 1.0, max_iter: 100_000, tol: 1e-12 });
        for (a, b) in ls.coef.iter().zip(&cd.coef) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!((ls.intercept - cd.intercept).abs() < 1e-8);
    }

    #[test]
    fn deactivation_threshold() {
        let (x, y) = random_problem(50, 5, 2);
        let c = Centered::new(&x, &y);
        let alpha_max = (0..5)
            .map(|j| c.x.column(j).dot(&c.y).abs() / 50.0)
            .fold(0.0, f64::max);
        let opts = CdOptions { alpha: alpha_max, l1_ratio: 1.0, max_iter: 1000, tol: 1e-10 };
        let fit = elastic_net(&x, &y, &opts);
        assert!(fit.coef.iter().all(|&b| b == 0.0));
        let below = CdOptions { alpha: 0.9 * alpha_max, ..opts };
        assert!(elastic_net(&x, &y, &below).coef.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn ridge_closed_form_matches_coordinate_descent() {
        for seed in 0..5 {
            let (x, y) = random_problem(20, 10, seed);
            let alpha = 2.5;
            let closed = ridge(&x, &y, alpha).unwrap();
            let opts = CdOptions { alpha: alpha / 20.0, l1_ratio: 0.0, max_iter: 100_000, tol: 1e-13 };
            let iterative = elastic_net(&x, &y, &opts);
            for (a, b) in closed.coef.iter().zip(&iterative.coef) {
                assert!((a - b).abs() < 1e-8, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn objective_non_increasing_and_kkt_met() {
        for seed in 0..10 {
            let (x, y) = random_problem(30, 8, seed);
            let c = Centered::new(&x, &y);
            let opts = CdOptions { alpha: 0.05, l1_ratio: 0.7, max_iter: 10_000, tol: 1e-9 };
            let start = elastic_net_objective(&c.x, &c.y, &[0.0; 8], opts.alpha, opts.l1_ratio);
            let res = coordinate_descent(&c.x, &c.y, &opts, None);
            let mut prev = start;
            for &o in &res.objective {
                assert!(o <= prev + 1e-12, "seed {seed}: {o} > {prev}");
                prev = o;
            }
            assert!(res.converged);
            assert!(res.kkt_residual <= opts.tol);
        }
    }

    #[test]
    fn constant_column_ignored() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0]);
        let fit = elastic_net(&x, &[1.0, 2.0, 3.0, 4.0], &CdOptions { alpha: 0.0, l1_ratio: 1.0, max_iter: 1000, tol: 1e-12 });
        assert_eq!(fit.coef[1], 0.0);
        assert!((fit.coef[0] - 1.0).abs() < 1e-10);
    }
}
