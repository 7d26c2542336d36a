//! Tree ensembles: single tree, bagged and randomized forests, AdaBoost.R2 and
//! gradient boosting on squared loss.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::Params;
use super::tree::{grow, GrowthMode, Prepared, Tree, TreeParams};
use super::{Family, FitMeta};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Aggregation {
    /// Average of the tree outputs.
    Mean,
    /// `base + Σ tree`; leaf values already include the learning rate.
    Additive { base: f64 },
    /// Weighted median of the tree outputs.
    WeightedMedian { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub aggregation: Aggregation,
    pub trees: Vec<Tree>,
}

impl Ensemble {
    /// An empty boosted ensemble predicting `mean(y)`.
    pub fn boosting_start(y: &[f64]) -> Self {
        Self {
            aggregation: Aggregation::Additive {
                base: y.iter().sum::<f64>() / y.len() as f64,
            },
            trees: Vec::new(),
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let n = x.nrows();
        match &self.aggregation {
            Aggregation::Mean => {
                let mut out = vec![0.0; n];
                for t in &self.trees {
                    for (o, v) in out.iter_mut().zip(t.predict(x)) {
                        *o += v;
                    }
                }
                let k = self.trees.len().max(1) as f64;
                out.iter_mut().for_each(|o| *o /= k);
                out
            }
            Aggregation::Additive { base } => {
                let mut out = vec![*base; n];
                for t in &self.trees {
                    for (o, v) in out.iter_mut().zip(t.predict(x)) {
                        *o += v;
                    }
                }
                out
            }
            Aggregation::WeightedMedian { weights } => {
                let per_tree: Vec<Vec<f64>> = self.trees.iter().map(|t| t.predict(x)).collect();
                (0..n)
                    .map(|i| {
                        let preds: Vec<f64> = per_tree.iter().map(|p| p[i]).collect();
                        weighted_median(&preds, weights)
                    })
                    .collect()
            }
        }
    }

    /// The ensemble made of the first `n` trees. Tree seeds depend only on the
    /// tree index and boosting is sequential, so this equals a fresh fit with
    /// `n` estimators.
    pub fn truncated(&self, n: usize) -> Ensemble {
        let k = n.min(self.trees.len());
        let aggregation = match &self.aggregation {
            Aggregation::WeightedMedian { weights } => Aggregation::WeightedMedian {
                weights: weights[..k].to_vec(),
            },
            other => other.clone(),
        };
        Ensemble {
            aggregation,
            trees: self.trees[..k].to_vec(),
        }
    }

    /// Total split gain per feature across all trees.
    pub fn split_gain(&self, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        for t in &self.trees {
            t.accumulate_gain(&mut out);
        }
        out
    }
}

/// Smallest value whose cumulative weight reaches half the total; ties keep tree order.
fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let half = 0.5 * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        if acc >= half {
            return values[i];
        }
    }
    values[*order.last().expect("at least one tree")]
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Single,
    Forest { bootstrap: bool },
    AdaBoost,
    Boosting,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EnsembleConfig {
    kind: Kind,
    tree: TreeParams,
    n_estimators: usize,
    learning_rate: f64,
}

impl EnsembleConfig {
    pub fn parse(family: Family, p: &Params) -> Result<Self> {
        let depthwise = |p: &Params, depth: usize| -> Result<TreeParams> {
            Ok(TreeParams {
                mode: GrowthMode::Depthwise,
                max_depth: p.count("max_depth", depth, 1)?,
                min_samples_split: p.count("min_samples_split", 2, 2)?,
                min_samples_leaf: p.count("min_samples_leaf", 1, 1)?,
                ..TreeParams::default()
            })
        };
        let cfg = match family {
            Family::DecisionTree => Self {
                kind: Kind::Single,
                tree: depthwise(p, 32)?,
                n_estimators: 1,
                learning_rate: 1.0,
            },
            Family::RandomForest | Family::ExtraTrees => {
                let extra = family == Family::ExtraTrees;
                let mut tree = depthwise(p, 32)?;
                tree.max_features = p.fraction("max_features", 1.0)?;
                tree.random_splits = extra;
                Self {
                    kind: Kind::Forest {
                        bootstrap: p.flag("bootstrap", !extra)?,
                    },
                    tree,
                    n_estimators: p.count("n_estimators", 100, 1)?,
                    learning_rate: 1.0,
                }
            }
            Family::AdaBoost => Self {
                kind: Kind::AdaBoost,
                tree: depthwise(p, 3)?,
                n_estimators: p.count("n_estimators", 50, 1)?,
                learning_rate: p.fraction("learning_rate", 1.0)?,
            },
            Family::GradientBoosting => Self {
                kind: Kind::Boosting,
                tree: depthwise(p, 3)?,
                n_estimators: p.count("n_estimators", 100, 0)?,
                learning_rate: p.fraction("learning_rate", 0.1)?,
            },
            Family::LightGbm => Self {
                kind: Kind::Boosting,
                tree: TreeParams {
                    mode: GrowthMode::Leafwise,
                    max_depth: p.count("max_depth", usize::MAX, 1)?,
                    max_leaves: p.count("max_leaves", 31, 2)?,
                    max_bins: bins(p, 255)?,
                    min_samples_leaf: p.count("min_samples_leaf", 20, 1)?,
                    ..TreeParams::default()
                },
                n_estimators: p.count("n_estimators", 100, 0)?,
                learning_rate: p.fraction("learning_rate", 0.1)?,
            },
            Family::CatBoost => Self {
                kind: Kind::Boosting,
                tree: TreeParams {
                    mode: GrowthMode::Oblivious,
                    max_depth: p.real("max_depth", 6.0, |v| v.fract() == 0.0 && (1.0..=16.0).contains(&v), "integer in [1, 16]")?
                        as usize,
                    max_bins: bins(p, 254)?,
                    ..TreeParams::default()
                },
                n_estimators: p.count("n_estimators", 100, 0)?,
                learning_rate: p.fraction("learning_rate", 0.1)?,
            },
            _ => unreachable!("not a tree family"),
        };
        Ok(cfg)
    }
}

fn bins(p: &Params, default: usize) -> Result<usize> {
    p.real(
        "max_bins",
        default as f64,
        |v| v.fract() == 0.0 && (2.0..=65535.0).contains(&v),
        "integer in [2, 65535]",
    )
    .map(|v| v as usize)
}

/// Independent generator for tree `t` of an ensemble.
fn tree_rng(base: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(t as u64);
    rng
}

pub(crate) fn fit(cfg: &EnsembleConfig, x: &DMatrix<f64>, y: &[f64], rng: &mut ChaCha8Rng) -> (Ensemble, FitMeta) {
    let n = y.len();
    let prep = Prepared::new(x, &cfg.tree);
    let base_seed: u64 = rng.random();
    let ensemble = match cfg.kind {
        Kind::Single => Ensemble {
            aggregation: Aggregation::Mean,
            trees: vec![grow(&cfg.tree, x, &prep, y, &vec![1.0; n], &mut tree_rng(base_seed, 0))],
        },
        Kind::Forest { bootstrap } => {
            let trees = (0..cfg.n_estimators)
                .map(|t| {
                    let mut r = tree_rng(base_seed, t);
                    let mut w = vec![if bootstrap { 0.0 } else { 1.0 }; n];
                    if bootstrap {
                        for _ in 0..n {
                            w[r.random_range(0..n)] += 1.0;
                        }
                    }
                    grow(&cfg.tree, x, &prep, y, &w, &mut r)
                })
                .collect();
            Ensemble {
                aggregation: Aggregation::Mean,
                trees,
            }
        }
        Kind::AdaBoost => adaboost(cfg, x, y, &prep, base_seed, None),
        Kind::Boosting => {
            let mut e = Ensemble::boosting_start(y);
            let mut pred = e.predict(x);
            for t in 0..cfg.n_estimators {
                // Boosting trees are deterministic, so a no-op round repeats forever.
                if !boost_step(&mut e, &mut pred, x, y, &prep, &cfg.tree, cfg.learning_rate, &mut tree_rng(base_seed, t)) {
                    break;
                }
            }
            e
        }
    };
    let meta = FitMeta {
        iterations: ensemble.trees.len(),
        converged: true,
        singular: false,
    };
    (ensemble, meta)
}

#[allow(clippy::too_many_arguments)]
fn boost_step(
    e: &mut Ensemble,
    pred: &mut [f64],
    x: &DMatrix<f64>,
    y: &[f64],
    prep: &Prepared,
    params: &TreeParams,
    learning_rate: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let residual: Vec<f64> = y.iter().zip(pred.iter()).map(|(a, b)| a - b).collect();
    let mut tree = grow(params, x, prep, &residual, &vec![1.0; y.len()], rng);
    tree.scale_leaves(learning_rate);
    if tree.is_zero() {
        return false;
    }
    for (p, v) in pred.iter_mut().zip(tree.predict(x)) {
        *p += v;
    }
    e.trees.push(tree);
    true
}

/// One boosting round: fits a tree of the given growth mode to `y − ensemble(x)`
/// and appends it, shrunk by `learning_rate`.
pub fn gbm_round(ensemble: &Ensemble, x: &DMatrix<f64>, y: &[f64], learning_rate: f64, params: &TreeParams) -> Ensemble {
    assert!(
        learning_rate > 0.0 && learning_rate <= 1.0,
        "learning rate must lie in (0, 1]"
    );
    let mut next = ensemble.clone();
    let mut pred = ensemble.predict(x);
    let prep = Prepared::new(x, params);
    let mut rng = tree_rng(0, ensemble.trees.len());
    boost_step(&mut next, &mut pred, x, y, &prep, params, learning_rate, &mut rng);
    next
}

/// AdaBoost.R2 with linear loss; weighted tree fits instead of resampling.
/// When `trace` is given, the sample weights after every round are recorded.
fn adaboost(
    cfg: &EnsembleConfig,
    x: &DMatrix<f64>,
    y: &[f64],
    prep: &Prepared,
    base_seed: u64,
    mut trace: Option<&mut Vec<Vec<f64>>>,
) -> Ensemble {
    let n = y.len();
    let lr = cfg.learning_rate;
    let mut w = vec![1.0 / n as f64; n];
    let mut trees = Vec::new();
    let mut weights = Vec::new();
    for t in 0..cfg.n_estimators {
        let tree = grow(&cfg.tree, x, prep, y, &w, &mut tree_rng(base_seed, t));
        let err: Vec<f64> = tree.predict(x).iter().zip(y).map(|(p, v)| (p - v).abs()).collect();
        let max_err = err.iter().fold(0.0_f64, |m, &e| m.max(e));
        if max_err == 0.0 {
            trees.push(tree);
            weights.push(1.0);
            break;
        }
        let loss: Vec<f64> = err.iter().map(|e| e / max_err).collect();
        let avg_loss: f64 = loss.iter().zip(&w).map(|(l, wi)| l * wi).sum();
        if avg_loss >= 0.5 {
            if trees.is_empty() {
                trees.push(tree);
                weights.push(1.0);
            }
            break;
        }
        if avg_loss <= 0.0 {
            trees.push(tree);
            weights.push(1.0);
            break;
        }
        let beta = avg_loss / (1.0 - avg_loss);
        trees.push(tree);
        weights.push(lr * (1.0 / beta).ln());
        for (wi, l) in w.iter_mut().zip(&loss) {
            *wi *= beta.powf((1.0 - l) * lr);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= total);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(w.clone());
        }
    }
    Ensemble {
        aggregation: Aggregation::WeightedMedian { weights },
        trees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testutil::random_problem;
    use crate::models::{fit as fit_model, ModelSpec};
    use proptest::prelude::*;

    fn mse(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / a.len() as f64
    }

    #[test]
    fn zero_rounds_predict_mean() {
        let (x, y) = random_problem(20, 3, 0);
        let m = fit_model(&ModelSpec::new(Family::GradientBoosting).with("n_estimators", 0.0), &x, &y).unwrap();
        let mean = y.iter().sum::<f64>() / 20.0;
        assert!(m.predict(&x).unwrap().iter().all(|&p| p == mean));
    }

    #[test]
    fn one_deep_round_memorizes() {
        let x = DMatrix::from_fn(8, 1, |i, _| i as f64);
        let y = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, 6.0];
        let params = TreeParams {
            max_depth: 8,
            ..TreeParams::default()
        };
        let e = gbm_round(&Ensemble::boosting_start(&y), &x, &y, 1.0, &params);
        assert!(mse(&e.predict(&x), &y) < 1e-24);
    }

    #[test]
    fn zero_residual_round_is_noop() {
        let x = DMatrix::from_fn(5, 1, |i, _| i as f64);
        let y = [2.0; 5];
        let start = Ensemble::boosting_start(&y);
        for mode in [GrowthMode::Depthwise, GrowthMode::Leafwise, GrowthMode::Oblivious] {
            let params = TreeParams { mode, ..TreeParams::default() };
            assert_eq!(gbm_round(&start, &x, &y, 0.5, &params), start);
        }
    }

    #[test]
    fn single_tree_forest_equals_cart() {
        let (x, y) = random_problem(50, 4, 7);
        let cart = fit_model(&ModelSpec::new(Family::DecisionTree).with("max_depth", 5.0), &x, &y).unwrap();
        let forest = fit_model(
            &ModelSpec::new(Family::RandomForest)
                .with("n_estimators", 1.0)
                .with("max_features", 1.0)
                .with("bootstrap", 0.0)
                .with("max_depth", 5.0)
                .with_seed(99),
            &x,
            &y,
        )
        .unwrap();
        assert_eq!(cart.predict(&x).unwrap(), forest.predict(&x).unwrap());
    }

    #[test]
    fn forests_differ_by_seed_and_repeat_by_seed() {
        let (x, y) = random_problem(40, 4, 1);
        let spec = ModelSpec::new(Family::ExtraTrees).with("n_estimators", 10.0);
        let a = fit_model(&spec.clone().with_seed(1), &x, &y).unwrap();
        let b = fit_model(&spec.clone().with_seed(1), &x, &y).unwrap();
        let c = fit_model(&spec.with_seed(2), &x, &y).unwrap();
        assert_eq!(a, b);
        // Fully grown trees agree on training rows, so compare off-sample.
        let (query, _) = random_problem(20, 4, 2);
        assert_ne!(a.predict(&query).unwrap(), c.predict(&query).unwrap());
    }

    #[test]
    fn weighted_median_rule() {
        assert_eq!(weighted_median(&[3.0, 1.0, 2.0], &[1.0, 1.0, 1.0]), 2.0);
        assert_eq!(weighted_median(&[3.0, 1.0, 2.0], &[5.0, 1.0, 1.0]), 3.0);
        assert_eq!(weighted_median(&[1.0, 2.0], &[1.0, 1.0]), 1.0);
    }

    #[test]
    fn adaboost_improves_on_training_data() {
        let (x, y) = random_problem(80, 3, 5);
        let stump = fit_model(&ModelSpec::new(Family::DecisionTree).with("max_depth", 3.0), &x, &y).unwrap();
        let boosted = fit_model(&ModelSpec::new(Family::AdaBoost).with("n_estimators", 30.0), &x, &y).unwrap();
        assert!(mse(&boosted.predict(&x).unwrap(), &y) < mse(&stump.predict(&x).unwrap(), &y));
    }

    fn dataset(n: usize, p: usize, values: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_fn(n, p, |i, j| values[(i * p + j) % values.len()]);
        let y = (0..n).map(|i| values[(i * 7 + 3) % values.len()] * 2.0 - x[(i, 0)]).collect();
        (x, y)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn adaboost_weights_stay_on_simplex(values in prop::collection::vec(-5.0..5.0f64, 30..120), lr in 0.1..1.0f64) {
            let (x, y) = dataset(30, 2, &values);
            let cfg = EnsembleConfig {
                kind: Kind::AdaBoost,
                tree: TreeParams { max_depth: 2, ..TreeParams::default() },
                n_estimators: 15,
                learning_rate: lr,
            };
            let prep = Prepared::new(&x, &cfg.tree);
            let mut trace = Vec::new();
            adaboost(&cfg, &x, &y, &prep, 0, Some(&mut trace));
            for w in trace {
                prop_assert!(w.iter().all(|&v| v >= 0.0));
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn boosting_mse_never_increases(values in prop::collection::vec(-10.0..10.0f64, 40..200), lr in 0.05..1.0f64) {
            let (x, y) = dataset(40, 3, &values);
            for mode in [GrowthMode::Depthwise, GrowthMode::Leafwise, GrowthMode::Oblivious] {
                let params = TreeParams { mode, max_depth: 3, max_leaves: 6, min_samples_leaf: 2, max_bins: 16, ..TreeParams::default() };
                let mut e = Ensemble::boosting_start(&y);
                let mut prev = mse(&e.predict(&x), &y);
                for _ in 0..10 {
                    e = gbm_round(&e, &x, &y, lr, &params);
                    let now = mse(&e.predict(&x), &y);
                    prop_assert!(now <= prev + 1e-12 * (1.0 + prev), "{:?}: {} > {}", mode, now, prev);
                    prev = now;
                }
            }
        }
    }
}
