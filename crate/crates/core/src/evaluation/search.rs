//! k-fold cross-validation and grid search.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Metric;
use crate::error::{Error, Result};
use crate::models::{self, FittedModel, ModelSpec};
use crate::preprocess::kfold_indices;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub metric: Metric,
}

impl CvOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            k: 10,
            seed,
            metric: Metric::Mape,
        }
    }
}

/// Train/validation matrices of each fold, built once and shared by all specs.
pub struct Folds {
    pub folds: Vec<FoldData>,
}

pub struct FoldData {
    pub x_train: DMatrix<f64>,
    pub y_train: Vec<f64>,
    pub x_valid: DMatrix<f64>,
    pub y_valid: Vec<f64>,
}

impl Folds {
    pub fn new(x: &DMatrix<f64>, y: &[f64], k: usize, seed: u64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), actual: y.len() });
        }
        let folds = kfold_indices(y.len(), k, seed)?
            .into_iter()
            .map(|valid| {
                let mut in_valid = vec![false; y.len()];
                for &i in &valid {
                    in_valid[i] = true;
                }
                let train: Vec<usize> = (0..y.len()).filter(|&i| !in_valid[i]).collect();
                FoldData {
                    x_train: x.select_rows(&train),
                    y_train: train.iter().map(|&i| y[i]).collect(),
                    x_valid: x.select_rows(&valid),
                    y_valid: valid.iter().map(|&i| y[i]).collect(),
                }
            })
            .collect();
        Ok(Self { folds })
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }
}

fn fold_score(spec: &ModelSpec, fold: &FoldData, metric: Metric) -> Result<f64> {
    let model = models::fit(spec, &fold.x_train, &fold.y_train)?;
    let pred = model.predict(&fold.x_valid)?;
    metric.score(&fold.y_valid, &pred)
}

/// Validation score of `spec` on every fold, in fold order.
pub fn cross_validate(spec: &ModelSpec, folds: &Folds, metric: Metric) -> Result<Vec<f64>> {
    folds.folds.par_iter().map(|f| fold_score(spec, f, metric)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub spec: ModelSpec,
    /// Raw metric value per fold; empty when the spec failed.
    pub fold_scores: Vec<f64>,
    /// Mean of `fold_scores`; NaN when the spec failed.
    pub mean: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub metric: Metric,
    pub best_index: usize,
    pub rows: Vec<CvRow>,
    /// Best spec refit on all training rows.
    pub model: FittedModel,
}

impl GridSearch {
    pub fn best(&self) -> &CvRow {
        &self.rows[self.best_index]
    }
}

/// Scores every spec of `grid` on shared folds and refits the winner on all
/// rows. The winner has the lowest mean loss; ties go to the earlier spec.
/// Specs whose fits fail on any fold are kept in the table with their error.
pub fn grid_search_cv(grid: &[ModelSpec], x: &DMatrix<f64>, y: &[f64], opts: &CvOptions) -> Result<GridSearch> {
    let folds = Folds::new(x, y, opts.k, opts.seed)?;
    grid_search_on_folds(grid, &folds, x, y, opts.metric)
}

pub fn grid_search_on_folds(
    grid: &[ModelSpec],
    folds: &Folds,
    x: &DMatrix<f64>,
    y: &[f64],
    metric: Metric,
) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(Error::Empty("hyperparameter grid"));
    }
    // Specs differing only in tree count share one fit at the largest count;
    // smaller counts are scored on its prefix.
    let groups = prefix_groups(grid);
    let jobs: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..folds.len()).map(move |f| (g, f))).collect();
    let group_scores: Vec<Vec<Result<f64>>> = jobs
        .par_iter()
        .map(|&(g, f)| group_fold_scores(grid, &groups[g], &folds.folds[f], metric))
        .collect();
    let mut scores: Vec<Option<Result<f64>>> = (0..grid.len() * folds.len()).map(|_| None).collect();
    for (&(g, f), results) in jobs.iter().zip(group_scores) {
        for (&s, r) in groups[g].members.iter().zip(results) {
            scores[s * folds.len() + f] = Some(r);
        }
    }
    let scores: Vec<Result<f64>> = scores.into_iter().map(|r| r.expect("every job filled")).collect();
    let mut rows = Vec::with_capacity(grid.len());
    for (s, spec) in grid.iter().enumerate() {
        let chunk = &scores[s * folds.len()..(s + 1) * folds.len()];
        let row = match chunk.iter().find_map(|r| r.as_ref().err()) {
            Some(e) => CvRow {
                spec: spec.clone(),
                fold_scores: Vec::new(),
                mean: f64::NAN,
                error: Some(e.to_string()),
            },
            None => {
                let fold_scores: Vec<f64> = chunk.iter().map(|r| *r.as_ref().expect("checked above")).collect();
                CvRow {
                    spec: spec.clone(),
                    mean: fold_scores.iter().sum::<f64>() / fold_scores.len() as f64,
                    fold_scores,
                    error: None,
                }
            }
        };
        rows.push(row);
    }
    let best_index = best_row(&rows, metric).ok_or_else(|| {
        let first = rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        Error::Numerical {
            iteration: 0,
            message: format!("every grid point failed; first error: {first}"),
        }
    })?;
    let model = models::fit(&rows[best_index].spec, x, y)?;
    Ok(GridSearch {
        metric,
        best_index,
        rows,
        model,
    })
}

struct PrefixGroup {
    /// Grid indices in the group.
    members: Vec<usize>,
    /// Member fitted directly; the others are truncations of it.
    largest: usize,
}

fn estimator_count(spec: &ModelSpec) -> Option<usize> {
    let v = *spec.params.get("n_estimators")?;
    (spec.family.prefix_truncates() && v >= 0.0 && v.fract() == 0.0).then_some(v as usize)
}

fn prefix_groups(grid: &[ModelSpec]) -> Vec<PrefixGroup> {
    let mut groups: Vec<PrefixGroup> = Vec::new();
    let mut keys: Vec<Option<ModelSpec>> = Vec::new();
    for (i, spec) in grid.iter().enumerate() {
        let key = estimator_count(spec).map(|_| {
            let mut k = spec.clone();
            k.params.remove("n_estimators");
            k
        });
        let slot = key.as_ref().and_then(|k| keys.iter().position(|o| o.as_ref() == Some(k)));
        match slot {
            Some(g) => {
                let group = &mut groups[g];
                group.members.push(i);
                if estimator_count(spec) > estimator_count(&grid[group.largest]) {
                    group.largest = i;
                }
            }
            None => {
                groups.push(PrefixGroup { members: vec![i], largest: i });
                keys.push(key);
            }
        }
    }
    groups
}

fn group_fold_scores(grid: &[ModelSpec], group: &PrefixGroup, fold: &FoldData, metric: Metric) -> Vec<Result<f64>> {
    if group.members.len() == 1 {
        return vec![fold_score(&grid[group.members[0]], fold, metric)];
    }
    let full = match models::fit(&grid[group.largest], &fold.x_train, &fold.y_train) {
        Ok(m) => m,
        // Fall back to independent fits so each member reports its own error.
        Err(_) => {
            return group.members.iter().map(|&s| fold_score(&grid[s], fold, metric)).collect();
        }
    };
    group
        .members
        .iter()
        .map(|&s| {
            grid[s].validate()?;
            let n = estimator_count(&grid[s]).expect("grouped specs carry a tree count");
            let model = full.with_estimators(n).expect("grouped specs truncate");
            let pred = model.predict(&fold.x_valid)?;
            metric.score(&fold.y_valid, &pred)
        })
        .collect()
}

fn best_row(rows: &[CvRow], metric: Metric) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in rows.iter().enumerate() {
        if r.error.is_some() {
            continue;
        }
        let loss = metric.orient(r.mean);
        if best.is_none_or(|(_, b)| loss < b) {
            best = Some((i, loss));
        }
    }
    best.map(|(i, _)| i)
}
