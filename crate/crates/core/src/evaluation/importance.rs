//! Coefficient-based importance of sparse linear models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::FittedModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    /// Non-zero coefficients with their sign, largest magnitude first.
    pub ranked: Vec<(String, f64)>,
    /// Number of features whose coefficient is exactly zero.
    pub eliminated: usize,
}

impl CoefficientReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "coefficient"])?;
        for (name, c) in &self.ranked {
            w.write_record([name.as_str(), &c.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn lasso_importance(model: &FittedModel, names: &[String]) -> Result<CoefficientReport> {
    let coef = model.coefficients().ok_or_else(|| {
        Error::Unsupported(format!("{} has no coefficients", model.family().display_name()))
    })?;
    coefficient_report(coef, names)
}

/// Ranks `coef` by magnitude; ties keep feature order.
pub fn coefficient_report(coef: &[f64], names: &[String]) -> Result<CoefficientReport> {
    if coef.len() != names.len() {
        return Err(Error::DimensionMismatch { expected: coef.len(), actual: names.len() });
    }
    let mut ranked: Vec<(String, f64)> = names
        .iter()
        .zip(coef)
        .filter(|(_, &c)| c != 0.0)
        .map(|(n, &c)| (n.clone(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    Ok(CoefficientReport {
        eliminated: coef.len() - ranked.len(),
        ranked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, Family, ModelSpec};
    use nalgebra::DMatrix;

    fn names(p: usize) -> Vec<String> {
        (1..=p).map(|j| format!("feature {j}")).collect()
    }

    #[test]
    fn magnitude_order_keeps_sign() {
        let r = coefficient_report(&[0.0, 0.5, -2.0, 0.0], &names(4)).unwrap();
        assert_eq!(r.ranked, vec![("feature 3".to_string(), -2.0), ("feature 2".to_string(), 0.5)]);
        assert_eq!(r.eliminated, 2);
    }

    #[test]
    fn all_zero() {
        let r = coefficient_report(&[0.0; 3], &names(3)).unwrap();
        assert!(r.ranked.is_empty());
        assert_eq!(r.eliminated, 3);
        assert_eq!(r.to_csv().unwrap(), "feature,coefficient\n");
    }

    #[test]
    fn requires_linear_model() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i * (j + 1)) as f64);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let tree = fit(&ModelSpec::new(Family::DecisionTree), &x, &y).unwrap();
        assert!(lasso_importance(&tree, &names(2)).is_err());
        let lasso = fit(&ModelSpec::new(Family::Lasso).with("alpha", 0.01), &x, &y).unwrap();
        assert!(lasso_importance(&lasso, &names(2)).is_ok());
        assert!(lasso_importance(&lasso, &names(3)).is_err());
    }
}
