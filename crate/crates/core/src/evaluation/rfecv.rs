//! Recursive feature elimination with cross-validated size selection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::search::{cross_validate, CvOptions, Folds};
use crate::error::{Error, Result};
use crate::models::{self, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfecvStep {
    pub features: Vec<String>,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    /// Feature dropped after this step; `None` at the last step.
    pub dropped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfecvResult {
    pub options: CvOptions,
    /// One entry per evaluated feature count, from all features down to one.
    pub steps: Vec<RfecvStep>,
    pub selected_index: usize,
}

impl RfecvResult {
    pub fn selected(&self) -> &[String] {
        &self.steps[self.selected_index].features
    }

    pub fn selected_fold_scores(&self) -> &[f64] {
        &self.steps[self.selected_index].fold_scores
    }

    /// `(feature count, mean CV score)` pairs, largest set first.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        self.steps.iter().map(|s| (s.features.len(), s.mean)).collect()
    }
}

/// Drops the least important feature one at a time, scoring every feature
/// count with k-fold CV on the same folds. The selected size has the best
/// mean score; ties go to the smaller set.
pub fn rfecv(spec: &ModelSpec, x: &DMatrix<f64>, y: &[f64], names: &[String], opts: &CvOptions) -> Result<RfecvResult> {
    if !spec.family.has_importance() {
        return Err(Error::Unsupported(format!(
            "{} has no feature importance for elimination",
            spec.family.display_name()
        )));
    }
    if names.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), actual: names.len() });
    }
    if x.ncols() == 0 {
        return Err(Error::Empty("feature set"));
    }
    spec.validate()?;
    let folds = Folds::new(x, y, opts.k, opts.seed)?;
    let mut active: Vec<usize> = (0..x.ncols()).collect();
    let mut steps = Vec::with_capacity(x.ncols());
    loop {
        let xa = x.select_columns(&active);
        let sub = Folds {
            folds: folds
                .folds
                .iter()
                .map(|f| super::search::FoldData {
                    x_train: f.x_train.select_columns(&active),
                    y_train: f.y_train.clone(),
                    x_valid: f.x_valid.select_columns(&active),
                    y_valid: f.y_valid.clone(),
                })
                .collect(),
        };
        let fold_scores = cross_validate(spec, &sub, opts.metric)?;
        let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        let features: Vec<String> = active.iter().map(|&j| names[j].clone()).collect();
        if active.len() == 1 {
            steps.push(RfecvStep {
                features,
                fold_scores,
                mean,
                dropped: None,
            });
            break;
        }
        let importance = models::fit(spec, &xa, y)?.feature_importance()?;
        // Least important; the later feature loses ties so earlier columns survive.
        let weakest = (0..active.len())
            .rev()
            .min_by(|&a, &b| importance[a].total_cmp(&importance[b]))
            .expect("at least two active features");
        steps.push(RfecvStep {
            features,
            fold_scores,
            mean,
            dropped: Some(names[active[weakest]].clone()),
        });
        active.remove(weakest);
    }
    let selected_index = (0..steps.len())
        .rev()
        .min_by(|&a, &b| opts.metric.orient(steps[a].mean).total_cmp(&opts.metric.orient(steps[b].mean)))
        .expect("at least one step");
    Ok(RfecvResult {
        options: *opts,
        steps,
        selected_index,
    })
}
