//! Bayesian ridge regression with evidence maximization.
//!
//! Gaussian likelihood with noise precision `alpha`, isotropic Gaussian prior
//! with precision `lambda`, Gamma hyperpriors on both. The precisions are
//! updated by expectation-maximization in the eigenbasis of `XᵀX`, which makes
//! the penalized log evidence non-decreasing from one iteration to the next.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::linear::{Centered, LinearFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesPriors {
    pub max_iter: usize,
    /// Stop once the coefficients move less than this in L1.
    pub tol: f64,
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
}

impl Default for BayesPriors {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-3,
            alpha_1: 1e-6,
            alpha_2: 1e-6,
            lambda_1: 1e-6,
            lambda_2: 1e-6,
        }
    }
}

/// Centered data and its spectral decomposition.
pub struct BayesianRidgeProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    eig: Vec<f64>,
    basis: DMatrix<f64>,
    /// `Vᵀ Xᵀ y`.
    proj: DVector<f64>,
    priors: BayesPriors,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianRidgeState {
    /// Noise precision.
    pub alpha: f64,
    /// Weight precision.
    pub lambda: f64,
    /// Posterior mean at (`alpha`, `lambda`).
    pub coef: Vec<f64>,
    /// Log marginal likelihood plus Gamma hyperprior terms.
    pub log_evidence: f64,
    pub iteration: usize,
}

impl BayesianRidgeProblem {
    /// `x` and `y` must already be centered.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, priors: BayesPriors) -> Self {
        let gram = x.tr_mul(&x);
        let se = gram.symmetric_eigen();
        let eig = se.eigenvalues.iter().map(|&e| e.max(0.0)).collect();
        let basis = se.eigenvectors;
        let proj = basis.tr_mul(&x.tr_mul(&y));
        Self {
            x,
            y,
            eig,
            basis,
            proj,
            priors,
        }
    }

    fn n(&self) -> f64 {
        self.x.nrows() as f64
    }

    fn p(&self) -> f64 {
        self.x.ncols() as f64
    }

    /// Starting point: `alpha = 1/var(y)`, `lambda = 1`.
    pub fn initial_state(&self) -> Result<BayesianRidgeState> {
        let var = self.y.norm_squared() / self.n();
        self.state(1.0 / (var + f64::EPSILON), 1.0, 0)
    }

    /// Posterior mean and evidence at the given precisions.
    pub fn state(&self, alpha: f64, lambda: f64, iteration: usize) -> Result<BayesianRidgeState> {
        if !(alpha.is_finite() && lambda.is_finite() && alpha > 0.0 && lambda > 0.0) {
            return Err(Error::Numerical {
                iteration,
                message: format!("precisions left the positive reals (alpha={alpha}, lambda={lambda})"),
            });
        }
        let (coef, resid_sq, logdet) = self.posterior(alpha, lambda);
        let pr = &self.priors;
        let coef_sq: f64 = coef.iter().map(|b| b * b).sum();
        let log_evidence = pr.lambda_1 * lambda.ln() - pr.lambda_2 * lambda + pr.alpha_1 * alpha.ln() - pr.alpha_2 * alpha
            + 0.5
                * (self.p() * lambda.ln() + self.n() * alpha.ln() - alpha * resid_sq - lambda * coef_sq - logdet
                    - self.n() * (2.0 * PI).ln());
        if !log_evidence.is_finite() || coef.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numerical {
                iteration,
                message: "posterior solve produced non-finite values".into(),
            });
        }
        Ok(BayesianRidgeState {
            alpha,
            lambda,
            coef,
            log_evidence,
            iteration,
        })
    }

    /// Returns (posterior mean, ‖y − Xm‖², log|αXᵀX + λI|).
    fn posterior(&self, alpha: f64, lambda: f64) -> (Vec<f64>, f64, f64) {
        let m_eig = DVector::from_iterator(
            self.eig.len(),
            self.eig.iter().zip(self.proj.iter()).map(|(&e, &b)| alpha * b / (alpha * e + lambda)),
        );
        let m = &self.basis * m_eig;
        let resid = &self.y - &self.x * &m;
        let logdet = self.eig.iter().map(|&e| (alpha * e + lambda).ln()).sum();
        (m.iter().copied().collect(), resid.norm_squared(), logdet)
    }
}

/// One expectation-maximization step on the precisions, then the posterior at the new values.
pub fn bayesian_ridge_update(problem: &BayesianRidgeProblem, state: &BayesianRidgeState) -> Result<BayesianRidgeState> {
    let (alpha, lambda) = (state.alpha, state.lambda);
    let (m, resid_sq, _) = problem.posterior(alpha, lambda);
    let trace_w: f64 = problem.eig.iter().map(|&e| 1.0 / (alpha * e + lambda)).sum();
    let trace_r: f64 = problem.eig.iter().map(|&e| e / (alpha * e + lambda)).sum();
    let expected_w = m.iter().map(|b| b * b).sum::<f64>() + trace_w;
    let expected_r = resid_sq + trace_r;
    let pr = &problem.priors;
    let lambda_new = (problem.p() + 2.0 * pr.lambda_1) / (expected_w + 2.0 * pr.lambda_2);
    let alpha_new = (problem.n() + 2.0 * pr.alpha_1) / (expected_r + 2.0 * pr.alpha_2);
    problem.state(alpha_new, lambda_new, state.iteration + 1)
}

pub(crate) fn fit(x: &DMatrix<f64>, y: &[f64], priors: &BayesPriors) -> Result<LinearFit> {
    let c = Centered::new(x, y);
    if c.p() == 0 {
        return Ok(LinearFit {
            intercept: c.y_mean,
            coef: vec![],
            iterations: 0,
            converged: true,
            singular: false,
        });
    }
    let (x_mean, y_mean) = (c.x_mean.clone(), c.y_mean);
    let problem = BayesianRidgeProblem::new(c.x, c.y, *priors);
    let mut state = problem.initial_state()?;
    let mut converged = false;
    while state.iteration < priors.max_iter {
        let next = bayesian_ridge_update(&problem, &state)?;
        let moved: f64 = next.coef.iter().zip(&state.coef).map(|(a, b)| (a - b).abs()).sum();
        state = next;
        if moved < priors.tol {
            converged = true;
            break;
        }
    }
    let intercept = y_mean - x_mean.iter().zip(&state.coef).map(|(m, b)| m * b).sum::<f64>();
    Ok(LinearFit {
        intercept,
        coef: state.coef,
        iterations: state.iteration,
        converged,
        singular: false,
    })
}
