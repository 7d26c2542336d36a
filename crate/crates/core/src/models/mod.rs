//! Regression model zoo behind a single fit/predict contract.
//!
//! ```
//! use riskpref_core::models::{fit, Family, ModelSpec};
//! use nalgebra::DMatrix;
//!
//! let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
//! let model = fit(&ModelSpec::new(Family::Dummy), &x, &[1.0, 2.0, 3.0]).unwrap();
//! assert_eq!(model.predict(&x).unwrap(), vec![2.0; 3]);
//! ```

mod bayes;
mod ensemble;
mod grids;
mod knn;
mod lars;
mod linear;
mod omp;
mod params;
mod robust;
mod tree;

#[cfg(test)]
pub(crate) mod testutil;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use params::Params;

pub use bayes::{bayesian_ridge_update, BayesPriors, BayesianRidgeProblem, BayesianRidgeState};
pub use ensemble::{gbm_round, Aggregation, Ensemble};
pub use grids::{default_grid, GridManifest};
pub use linear::{coordinate_descent, elastic_net_objective, soft_threshold, CdOptions, CdResult};
pub use omp::{omp_path, OmpPath, OmpStep};
pub use tree::{cart_best_split, GrowthMode, Node, Split, Tree, TreeParams};

/// Version tag written into every serialized model.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LinearRegression,
    Ridge,
    Lasso,
    ElasticNet,
    Lars,
    LassoLars,
    OrthogonalMatchingPursuit,
    BayesianRidge,
    Huber,
    PassiveAggressive,
    Knn,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    AdaBoost,
    GradientBoosting,
    LightGbm,
    CatBoost,
    Dummy,
}

impl Family {
    pub const ALL: [Family; 19] = [
        Family::LinearRegression,
        Family::Ridge,
        Family::Lasso,
        Family::ElasticNet,
        Family::Lars,
        Family::LassoLars,
        Family::OrthogonalMatchingPursuit,
        Family::BayesianRidge,
        Family::Huber,
        Family::PassiveAggressive,
        Family::Knn,
        Family::DecisionTree,
        Family::RandomForest,
        Family::ExtraTrees,
        Family::AdaBoost,
        Family::GradientBoosting,
        Family::LightGbm,
        Family::CatBoost,
        Family::Dummy,
    ];

    /// The leaderboard roster: every family except plain LARS.
    pub const LEADERBOARD: [Family; 18] = [
        Family::OrthogonalMatchingPursuit,
        Family::ElasticNet,
        Family::Lasso,
        Family::BayesianRidge,
        Family::AdaBoost,
        Family::Dummy,
        Family::LassoLars,
        Family::RandomForest,
        Family::GradientBoosting,
        Family::CatBoost,
        Family::ExtraTrees,
        Family::LightGbm,
        Family::Knn,
        Family::DecisionTree,
        Family::Huber,
        Family::LinearRegression,
        Family::PassiveAggressive,
        Family::Ridge,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Family::LinearRegression => "linear_regression",
            Family::Ridge => "ridge",
            Family::Lasso => "lasso",
            Family::ElasticNet => "elastic_net",
            Family::Lars => "lars",
            Family::LassoLars => "lasso_lars",
            Family::OrthogonalMatchingPursuit => "orthogonal_matching_pursuit",
            Family::BayesianRidge => "bayesian_ridge",
            Family::Huber => "huber",
            Family::PassiveAggressive => "passive_aggressive",
            Family::Knn => "knn",
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::ExtraTrees => "extra_trees",
            Family::AdaBoost => "ada_boost",
            Family::GradientBoosting => "gradient_boosting",
            Family::LightGbm => "light_gbm",
            Family::CatBoost => "cat_boost",
            Family::Dummy => "dummy",
        }
    }

    /// Human-readable name used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::LinearRegression => "Linear Regression",
            Family::Ridge => "Ridge Regression",
            Family::Lasso => "Lasso Regression",
            Family::ElasticNet => "Elastic Net",
            Family::Lars => "Least Angle Regression",
            Family::LassoLars => "Lasso Least Angle Regression",
            Family::OrthogonalMatchingPursuit => "Orthogonal Matching Pursuit",
            Family::BayesianRidge => "Bayesian Ridge",
            Family::Huber => "Huber Regressor",
            Family::PassiveAggressive => "Passive Aggressive Regressor",
            Family::Knn => "KNN Regressor",
            Family::DecisionTree => "Decision Tree",
            Family::RandomForest => "Random Forest Regressor",
            Family::ExtraTrees => "Extra Trees Regressor",
            Family::AdaBoost => "Adaboost Regressor",
            Family::GradientBoosting => "Gradient Boosting Regressor",
            Family::LightGbm => "Light Gradient Boosting Machine",
            Family::CatBoost => "Catboost Regressor",
            Family::Dummy => "Dummy Regressor",
        }
    }

    /// Whether `feature_importance` is defined for fitted models of this family.
    pub fn has_importance(self) -> bool {
        !matches!(self, Family::Knn | Family::Dummy)
    }

    /// Ensembles where a fit with fewer trees is a prefix of a larger fit.
    pub fn prefix_truncates(self) -> bool {
        matches!(
            self,
            Family::RandomForest
                | Family::ExtraTrees
                | Family::AdaBoost
                | Family::GradientBoosting
                | Family::LightGbm
                | Family::CatBoost
        )
    }

    pub fn is_linear(self) -> bool {
        matches!(
            self,
            Family::LinearRegression
                | Family::Ridge
                | Family::Lasso
                | Family::ElasticNet
                | Family::Lars
                | Family::LassoLars
                | Family::OrthogonalMatchingPursuit
                | Family::BayesianRidge
                | Family::Huber
                | Family::PassiveAggressive
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.key() == s || f.display_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation("family", format!("unknown model family `{s}`")))
    }
}

/// A family plus its hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            params: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Compact `key=value` rendering of the hyperparameters.
    pub fn describe(&self) -> String {
        let body: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.family, body.join(", "))
    }

    /// Checks the hyperparameters without fitting.
    pub fn validate(&self) -> Result<()> {
        Config::parse(self, usize::MAX).map(|_| ())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub iterations: usize,
    pub converged: bool,
    /// Least squares solved on a rank-deficient system.
    #[serde(default)]
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Constant { value: f64 },
    Linear { intercept: f64, coef: Vec<f64> },
    Neighbors { k: usize, points: Vec<Vec<f64>>, targets: Vec<f64> },
    Trees(Ensemble),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub n_features: usize,
    pub state: ModelState,
    pub meta: FitMeta,
}

impl FittedModel {
    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.ncols(),
            });
        }
        check_finite(x.as_slice(), "prediction input")?;
        let out = match &self.state {
            ModelState::Constant { value } => vec![*value; x.nrows()],
            ModelState::Linear { intercept, coef } => (0..x.nrows())
                .map(|i| intercept + coef.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum::<f64>())
                .collect(),
            ModelState::Neighbors { k, points, targets } => knn::predict(*k, points, targets, x),
            ModelState::Trees(e) => e.predict(x),
        };
        Ok(out)
    }

    /// The same fit cut down to its first `n` trees, for ensemble families
    /// whose tree count is a prefix parameter. Equal to fitting with
    /// `n_estimators = n` directly.
    pub fn with_estimators(&self, n: usize) -> Option<FittedModel> {
        if !self.family().prefix_truncates() {
            return None;
        }
        let ModelState::Trees(e) = &self.state else {
            return None;
        };
        let e = e.truncated(n);
        let mut spec = self.spec.clone();
        spec.params.insert("n_estimators".to_string(), n as f64);
        Some(FittedModel {
            format_version: self.format_version,
            spec,
            n_features: self.n_features,
            meta: FitMeta {
                iterations: e.trees.len(),
                ..self.meta.clone()
            },
            state: ModelState::Trees(e),
        })
    }

    /// Coefficients of a linear-family model.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.state {
            ModelState::Linear { coef, .. } => Some(coef),
            _ => None,
        }
    }

    /// `|coefficient|` for linear families, total split gain for tree families.
    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        match &self.state {
            ModelState::Linear { coef, .. } => Ok(coef.iter().map(|b| b.abs()).collect()),
            ModelState::Trees(e) => Ok(e.split_gain(self.n_features)),
            _ => Err(Error::Unsupported(format!(
                "{} does not expose feature importance",
                self.family().display_name()
            ))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: FittedModel = serde_json::from_str(s)?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::validation(
                "format_version",
                format!("unsupported model format {}", model.format_version),
            ));
        }
        Ok(model)
    }
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Parsed, validated hyperparameters.
enum Config {
    Dummy,
    Ols,
    Ridge { alpha: f64 },
    ElasticNet(CdOptions),
    Lars { n_nonzero: usize },
    LassoLars { alpha: f64 },
    Omp { n_nonzero: Option<usize> },
    Bayes(bayes::BayesPriors),
    Huber(robust::HuberConfig),
    PassiveAggressive(robust::PaConfig),
    Knn { k: usize },
    Trees(ensemble::EnsembleConfig),
}

impl Config {
    fn parse(spec: &ModelSpec, n_features: usize) -> Result<Config> {
        let p = Params::new(&spec.params);
        let cd = |p: &Params, l1_ratio: f64| -> Result<CdOptions> {
            Ok(CdOptions {
                alpha: p.non_negative("alpha", 1.0)?,
                l1_ratio,
                max_iter: p.count("max_iter", 10_000, 1)?,
                tol: p.positive("tol", 1e-8)?,
            })
        };
        let cfg = match spec.family {
            Family::Dummy => Config::Dummy,
            Family::LinearRegression => Config::Ols,
            Family::Ridge => Config::Ridge {
                alpha: p.non_negative("alpha", 1.0)?,
            },
            Family::Lasso => Config::ElasticNet(cd(&p, 1.0)?),
            Family::ElasticNet => {
                let l1 = p.unit_interval("l1_ratio", 0.5)?;
                Config::ElasticNet(cd(&p, l1)?)
            }
            Family::Lars => Config::Lars {
                n_nonzero: p.count("n_nonzero_coefs", 500, 1)?.min(n_features),
            },
            Family::LassoLars => Config::LassoLars {
                alpha: p.non_negative("alpha", 1.0)?,
            },
            Family::OrthogonalMatchingPursuit => Config::Omp {
                n_nonzero: if spec.params.contains_key("n_nonzero_coefs") {
                    Some(p.count("n_nonzero_coefs", 1, 1)?)
                } else {
                    None
                },
            },
            Family::BayesianRidge => Config::Bayes(bayes::BayesPriors {
                max_iter: p.count("max_iter", 300, 1)?,
                tol: p.positive("tol", 1e-3)?,
                alpha_1: p.non_negative("alpha_1", 1e-6)?,
                alpha_2: p.non_negative("alpha_2", 1e-6)?,
                lambda_1: p.non_negative("lambda_1", 1e-6)?,
                lambda_2: p.non_negative("lambda_2", 1e-6)?,
            }),
            Family::Huber => Config::Huber(robust::HuberConfig {
                epsilon: p.real("epsilon", 1.35, |v| v >= 1.0, ">= 1")?,
                alpha: p.non_negative("alpha", 1e-4)?,
                max_iter: p.count("max_iter", 100, 1)?,
                tol: p.positive("tol", 1e-5)?,
            }),
            Family::PassiveAggressive => Config::PassiveAggressive(robust::PaConfig {
                c: p.positive("c", 1.0)?,
                epsilon: p.non_negative("epsilon", 0.1)?,
                epochs: p.count("max_iter", 1, 1)?,
            }),
            Family::Knn => Config::Knn {
                k: p.count("k", 5, 1)?,
            },
            Family::DecisionTree
            | Family::RandomForest
            | Family::ExtraTrees
            | Family::AdaBoost
            | Family::GradientBoosting
            | Family::LightGbm
            | Family::CatBoost => Config::Trees(ensemble::EnsembleConfig::parse(spec.family, &p)?),
        };
        p.finish()?;
        Ok(cfg)
    }
}

/// Fits `spec` on a complete numeric design matrix.
pub fn fit(spec: &ModelSpec, x: &DMatrix<f64>, y: &[f64]) -> Result<FittedModel> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Empty("training rows"));
    }
    check_finite(x.as_slice(), "design matrix")?;
    check_finite(y, "target")?;
    let config = Config::parse(spec, x.ncols())?;
    let p = x.ncols();

    let linear = |fit: linear::LinearFit| {
        (
            ModelState::Linear {
                intercept: fit.intercept,
                coef: fit.coef,
            },
            FitMeta {
                iterations: fit.iterations,
                converged: fit.converged,
                singular: fit.singular,
            },
        )
    };
    let (state, meta) = match config {
        Config::Dummy => (
            ModelState::Constant {
                value: y.iter().sum::<f64>() / y.len() as f64,
            },
            FitMeta {
                iterations: 0,
                converged: true,
                singular: false,
            },
        ),
        Config::Ols => linear(linear::ols(x, y)?),
        Config::Ridge { alpha } => linear(linear::ridge(x, y, alpha)?),
        Config::ElasticNet(opts) => linear(linear::elastic_net(x, y, &opts)),
        Config::Lars { n_nonzero } => linear(lars::fit(x, y, lars::Stop::Steps(n_nonzero))),
        Config::LassoLars { alpha } => linear(lars::fit(x, y, lars::Stop::Alpha(alpha))),
        Config::Omp { n_nonzero } => {
            let k = n_nonzero.unwrap_or((p / 10).max(1)).min(p);
            linear(omp::fit(x, y, k))
        }
        Config::Bayes(priors) => linear(bayes::fit(x, y, &priors)?),
        Config::Huber(cfg) => linear(robust::huber(x, y, &cfg)?),
        Config::PassiveAggressive(cfg) => linear(robust::passive_aggressive(x, y, &cfg)),
        Config::Knn { k } => (
            ModelState::Neighbors {
                k,
                points: x.row_iter().map(|r| r.iter().copied().collect()).collect(),
                targets: y.to_vec(),
            },
            FitMeta {
                iterations: 0,
                converged: true,
                singular: false,
            },
        ),
        Config::Trees(cfg) => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let (ensemble, meta) = ensemble::fit(&cfg, x, y, &mut rng);
            (ModelState::Trees(ensemble), meta)
        }
    };
    Ok(FittedModel {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        n_features: p,
        state,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use testutil::random_problem;

    #[test]
    fn dummy_predicts_mean() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 5.0, 9.0]);
        let m = fit(&ModelSpec::new(Family::Dummy), &x, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![2.0; 3]);
    }

    #[test]
    fn linear_interpolation_example() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let m = fit(&ModelSpec::new(Family::LinearRegression), &x, &[2.0, 4.0]).unwrap();
        let pred = m.predict(&x).unwrap();
        assert!((pred[0] - 2.0).abs() < 1e-12 && (pred[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lasso_without_penalty_is_ols() {
        let (x, y) = random_problem(30, 4, 9);
        let ols = fit(&ModelSpec::new(Family::LinearRegression), &x, &y).unwrap();
        let lasso = fit(&ModelSpec::new(Family::Lasso).with("alpha", 0.0).with("tol", 1e-12), &x, &y).unwrap();
        for (a, b) in ols.coefficients().unwrap().iter().zip(lasso.coefficients().unwrap()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn reduction_chain() {
        for seed in 0..5 {
            let (x, y) = random_problem(25, 6, seed);
            let en1 = fit(&ModelSpec::new(Family::ElasticNet).with("alpha", 0.1).with("l1_ratio", 1.0), &x, &y).unwrap();
            let lasso = fit(&ModelSpec::new(Family::Lasso).with("alpha", 0.1), &x, &y).unwrap();
            assert_eq!(en1.coefficients(), lasso.coefficients());

            let alpha = 0.3;
            let en0 = fit(
                &ModelSpec::new(Family::ElasticNet)
                    .with("alpha", alpha)
                    .with("l1_ratio", 0.0)
                    .with("tol", 1e-12),
                &x,
                &y,
            )
            .unwrap();
            let ridge = fit(&ModelSpec::new(Family::Ridge).with("alpha", alpha * 25.0), &x, &y).unwrap();
            for (a, b) in en0.coefficients().unwrap().iter().zip(ridge.coefficients().unwrap()) {
                assert!((a - b).abs() < 1e-6, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn validation_errors() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let y = [1.0, 2.0];
        let bad = [
            ModelSpec::new(Family::Ridge).with("alpha", -1.0),
            ModelSpec::new(Family::Knn).with("k", 0.0),
            ModelSpec::new(Family::Knn).with("k", 2.5),
            ModelSpec::new(Family::GradientBoosting).with("learning_rate", 0.0),
            ModelSpec::new(Family::GradientBoosting).with("learning_rate", 1.5),
            ModelSpec::new(Family::DecisionTree).with("max_depth", 0.0),
            ModelSpec::new(Family::Lasso).with("gamma", 1.0),
        ];
        for spec in bad {
            let err = fit(&spec, &x, &y).unwrap_err();
            assert!(matches!(err, Error::InvalidParameter { .. }), "{spec:?}: {err}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(matches!(
            fit(&ModelSpec::new(Family::Dummy), &x, &[1.0, 2.0]),
            Err(Error::NonFinite(_))
        ));
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let m = fit(&ModelSpec::new(Family::Dummy), &x, &[1.0, 2.0]).unwrap();
        assert!(matches!(
            m.predict(&DMatrix::zeros(1, 2)),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        ));
        assert!(fit(&ModelSpec::new(Family::Dummy), &DMatrix::zeros(0, 1), &[]).is_err());
    }

    #[test]
    fn every_family_fits_serializes_and_is_deterministic() {
        let (x, y) = random_problem(60, 5, 3);
        for family in Family::ALL {
            let spec = ModelSpec::new(family).with_seed(11);
            let a = fit(&spec, &x, &y).unwrap();
            let b = fit(&spec, &x, &y).unwrap();
            let ja = a.to_json().unwrap();
            assert_eq!(ja, b.to_json().unwrap(), "{family}");
            let back = FittedModel::from_json(&ja).unwrap();
            assert_eq!(back, a, "{family}");
            let pa = a.predict(&x).unwrap();
            assert!(pa.iter().all(|v| v.is_finite()), "{family}");
            assert_eq!(pa, back.predict(&x).unwrap());
            assert_eq!(a.feature_importance().is_ok(), family.has_importance(), "{family}");
        }
    }

    #[test]
    fn family_names_parse() {
        for f in Family::ALL {
            assert_eq!(f.key().parse::<Family>().unwrap(), f);
            assert_eq!(f.display_name().parse::<Family>().unwrap(), f);
        }
        assert!("xgboost".parse::<Family>().is_err());
        assert_eq!(Family::LEADERBOARD.len(), 18);
        assert!(Family::LEADERBOARD.contains(&Family::Dummy));
    }
}
