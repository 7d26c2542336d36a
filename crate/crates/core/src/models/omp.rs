//! Orthogonal matching pursuit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linear::{Centered, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmpStep {
    /// Active features in selection order.
    pub selected: Vec<usize>,
    /// Full-length coefficient vector after the least-squares refit.
    pub coef: Vec<f64>,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmpPath {
    pub steps: Vec<OmpStep>,
    /// The path ended because the next candidate made the active set rank deficient.
    pub rank_deficient: bool,
}

impl OmpPath {
    pub fn selected(&self) -> &[usize] {
        self.steps.last().map_or(&[], |s| &s.selected)
    }

    pub fn coef(&self, p: usize) -> Vec<f64> {
        self.steps.last().map_or_else(|| vec![0.0; p], |s| s.coef.clone())
    }
}

/// Greedy path on `X`, `y` as given (no centering). Each step adds the column
/// with the largest normalized correlation with the residual and refits least
/// squares on the active set.
pub fn omp_path(x: &DMatrix<f64>, y: &DVector<f64>, k_max: usize) -> OmpPath {
    let p = x.ncols();
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let y_norm = y.norm();
    let mut selected: Vec<usize> = Vec::new();
    let mut residual = y.clone();
    let mut steps = Vec::new();
    let mut rank_deficient = false;

    while selected.len() < k_max.min(p) {
        let r_norm = residual.norm();
        if r_norm <= 1e-14 * y_norm.max(f64::MIN_POSITIVE) {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|j| norms[*j] > 0.0 && !selected.contains(j)) {
            let score = x.column(j).dot(&residual).abs() / norms[j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, score)) = best else { break };
        if score <= 1e-10 * r_norm {
            break;
        }
        selected.push(j);
        let xa = x.select_columns(&selected);
        let Some(chol) = xa.tr_mul(&xa).cholesky() else {
            selected.pop();
            rank_deficient = true;
            break;
        };
        let beta_a = chol.solve(&xa.tr_mul(y));
        // Guard against a numerically singular but factorizable system.
        if beta_a.iter().any(|b| !b.is_finite()) {
            selected.pop();
            rank_deficient = true;
            break;
        }
        residual = y - &xa * &beta_a;
        let mut coef = vec![0.0; p];
        for (t, &k) in selected.iter().enumerate() {
            coef[k] = beta_a[t];
        }
        steps.push(OmpStep {
            selected: selected.clone(),
            coef,
            residual_norm: residual.norm(),
        });
    }
    OmpPath {
        steps,
        rank_deficient,
    }
}

pub(crate) fn fit(x: &DMatrix<f64>, y: &[f64], k: usize) -> LinearFit {
    let c = Centered::new(x, y);
    let path = omp_path(&c.x, &c.y, k);
    let coef = path.coef(c.p());
    LinearFit {
        intercept: c.intercept(&coef),
        coef,
        iterations: path.steps.len(),
        converged: !path.rank_deficient,
        singular: path.rank_deficient,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::linear::ols;
    use crate::models::testutil::random_problem;

    #[test]
    fn orthonormal_design_picks_largest_projection() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let y = DVector::from_column_slice(&[0.5, -3.0, 2.0, 1.0]);
        let path = omp_path(&x, &y, 3);
        assert_eq!(path.steps[0].selected, vec![1]);
        assert_eq!(path.selected(), &[1, 2, 0]);
    }

    #[test]
    fn full_path_reproduces_least_squares() {
        let (x, y) = random_problem(40, 6, 8);
        let omp = fit(&x, &y, 6);
        let ls = ols(&x, &y).unwrap();
        for (a, b) in omp.coef.iter().zip(&ls.coef) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((omp.intercept - ls.intercept).abs() < 1e-9);
    }

    #[test]
    fn residual_norm_non_increasing() {
        for seed in 0..10 {
            let (x, y) = random_problem(30, 10, seed);
            let c = Centered::new(&x, &y);
            let path = omp_path(&c.x, &c.y, 10);
            let mut prev = c.y.norm();
            for s in &path.steps {
                assert!(s.residual_norm <= prev + 1e-12);
                prev = s.residual_norm;
            }
        }
    }

    #[test]
    fn orthogonal_target_selects_nothing() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let f = fit(&x, &[1.0, -1.0, 1.0, -1.0], 1);
        assert_eq!(f.coef, vec![0.0]);
        assert_eq!(f.intercept, 0.0);
        assert_eq!(f.iterations, 0);
    }

    #[test]
    fn duplicate_column_stops_with_flag() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
        let y = DVector::from_column_slice(&[1.0, 2.5, 2.9, 4.2]);
        let path = omp_path(&x, &y, 2);
        assert_eq!(path.selected(), &[0]);
        assert!(path.rank_deficient || path.steps.len() == 1);
    }
}
