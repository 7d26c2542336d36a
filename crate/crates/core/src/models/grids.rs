//! Default hyperparameter grids for tuning.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Family, ModelSpec};
use crate::error::{Error, Result};

type Point = BTreeMap<String, f64>;

/// `count` log-spaced values from `10^lo` to `10^hi`.
fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let e = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            // Round to 12 significant digits so grid values print cleanly.
            let v = 10f64.powf(e);
            format!("{v:.11e}").parse().expect("formatted float parses")
        })
        .collect()
}

fn product(axes: &[(&str, Vec<f64>)]) -> Vec<Point> {
    let mut points = vec![Point::new()];
    for (name, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.insert(name.to_string(), v);
                    q
                })
            })
            .collect();
    }
    points
}

fn default_points(family: Family) -> Vec<Point> {
    let alphas = log_space(-4.0, 2.0, 13);
    let rounds = vec![100.0, 200.0, 300.0];
    let depths = vec![2.0, 3.0, 4.0, 5.0, 6.0];
    match family {
        Family::LinearRegression | Family::Dummy | Family::BayesianRidge => vec![Point::new()],
        Family::Ridge | Family::Lasso | Family::LassoLars => product(&[("alpha", alphas)]),
        Family::ElasticNet => product(&[("alpha", alphas), ("l1_ratio", vec![0.2, 0.5, 0.8])]),
        Family::Lars => product(&[("n_nonzero_coefs", vec![1.0, 2.0, 5.0, 10.0, 20.0, 40.0])]),
        Family::OrthogonalMatchingPursuit => {
            product(&[("n_nonzero_coefs", vec![1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 15.0, 20.0, 30.0])])
        }
        Family::Huber => product(&[("epsilon", vec![1.1, 1.35, 1.75, 2.0]), ("alpha", vec![1e-4, 1e-2, 1.0])]),
        Family::PassiveAggressive => product(&[("c", vec![0.01, 0.1, 1.0])]),
        Family::Knn => product(&[("k", vec![3.0, 5.0, 10.0, 25.0])]),
        Family::DecisionTree => product(&[("max_depth", depths)]),
        Family::RandomForest | Family::ExtraTrees => {
            product(&[("n_estimators", vec![100.0, 300.0]), ("max_depth", vec![2.0, 4.0, 6.0])])
        }
        Family::AdaBoost => product(&[("n_estimators", vec![100.0, 300.0]), ("learning_rate", vec![0.1, 1.0])]),
        Family::GradientBoosting => product(&[
            ("n_estimators", rounds),
            ("max_depth", vec![2.0, 3.0, 4.0]),
            ("learning_rate", vec![0.05, 0.1]),
        ]),
        Family::LightGbm => product(&[("n_estimators", vec![100.0, 300.0]), ("max_leaves", vec![4.0, 8.0, 31.0])]),
        Family::CatBoost => product(&[("n_estimators", vec![100.0, 300.0]), ("max_depth", vec![2.0, 4.0, 6.0])]),
    }
}

/// Grid of specs for `family` with the given seed.
pub fn default_grid(family: Family, seed: u64) -> Vec<ModelSpec> {
    GridManifest::default().specs(family, seed)
}

/// Per-family hyperparameter grids, overridable from JSON such as
/// `{"lasso": [{"alpha": 0.1}, {"alpha": 1.0}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridManifest {
    grids: BTreeMap<Family, Vec<Point>>,
}

impl Default for GridManifest {
    fn default() -> Self {
        Self {
            grids: Family::ALL.into_iter().map(|f| (f, default_points(f))).collect(),
        }
    }
}

impl GridManifest {
    pub fn specs(&self, family: Family, seed: u64) -> Vec<ModelSpec> {
        self.grids
            .get(&family)
            .map(|points| {
                points
                    .iter()
                    .map(|p| ModelSpec {
                        family,
                        params: p.clone(),
                        seed,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Replaces the grids of the families named in `json`; each point is validated.
    pub fn with_overrides(mut self, json: &str) -> Result<Self> {
        let overrides: BTreeMap<Family, Vec<Point>> = serde_json::from_str(json)?;
        for (family, points) in overrides {
            if points.is_empty() {
                return Err(Error::validation(family.key(), "grid must not be empty"));
            }
            for p in &points {
                ModelSpec {
                    family,
                    params: p.clone(),
                    seed: 0,
                }
                .validate()?;
            }
            self.grids.insert(family, points);
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
