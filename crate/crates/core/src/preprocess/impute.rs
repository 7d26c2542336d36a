//! Chained-equation imputation with a gradient-boosting learner per feature.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, Family, ModelSpec};
use crate::stats;
use crate::synthdata::{Column, DataTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeConfig {
    pub max_rounds: usize,
    /// Stop once no imputed cell moves by this much in a round.
    pub tol: f64,
    /// Per-feature regressor; its seed is replaced by one derived from the call seed.
    pub learner: ModelSpec,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        Self {
            max_rounds: 10,
            tol: 1e-3,
            learner: ModelSpec::new(Family::GradientBoosting)
                .with("n_estimators", 50.0)
                .with("max_depth", 3.0)
                .with("learning_rate", 0.1),
        }
    }
}

impl ImputeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::validation("max_rounds", "must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::validation("tol", "must be > 0"));
        }
        self.learner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeReport {
    pub config: ImputeConfig,
    /// Rounds actually executed.
    pub rounds: usize,
    /// Largest absolute change of any imputed cell, per round.
    pub max_change: Vec<f64>,
    /// Columns imputed, in visiting order (most missing first).
    pub order: Vec<String>,
}

/// Fills every missing numerical cell. Observed cells are never modified.
///
/// Cells start at their column median; each round then refits the learner for
/// every incomplete column (most missing first) on that column's observed
/// rows, using the current values of all other columns, and overwrites the
/// missing cells with its predictions.
pub fn iterative_impute(table: &DataTable, config: &ImputeConfig, seed: u64) -> Result<(DataTable, ImputeReport)> {
    config.validate()?;
    let n = table.n_rows();
    let p = table.columns().len();
    let mut x = DMatrix::zeros(n, p);
    for (j, c) in table.columns().iter().enumerate() {
        let values = c
            .as_numerical()
            .ok_or_else(|| Error::validation(&c.name, "categorical columns must be encoded before imputation"))?;
        let observed: Vec<f64> = values.iter().zip(&c.missing).filter(|(_, &m)| !m).map(|(&v, _)| v).collect();
        if observed.is_empty() && n > 0 {
            return Err(Error::AllMissing(c.name.clone()));
        }
        let fill = if observed.is_empty() { 0.0 } else { stats::median(&observed) };
        for i in 0..n {
            x[(i, j)] = if c.missing[i] { fill } else { values[i] };
        }
    }

    let mut order: Vec<usize> = (0..p).filter(|&j| table.columns()[j].missing_count() > 0).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(table.columns()[j].missing_count()));

    let mut report = ImputeReport {
        config: config.clone(),
        rounds: 0,
        max_change: Vec::new(),
        order: order.iter().map(|&j| table.columns()[j].name.clone()).collect(),
    };
    if order.is_empty() {
        return Ok((table.clone(), report));
    }

    for round in 0..config.max_rounds {
        let mut max_change: f64 = 0.0;
        for (pos, &j) in order.iter().enumerate() {
            let missing = &table.columns()[j].missing;
            let obs: Vec<usize> = (0..n).filter(|&i| !missing[i]).collect();
            let miss: Vec<usize> = (0..n).filter(|&i| missing[i]).collect();
            let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let x_obs = x.select_rows(&obs).select_columns(&others);
            let y_obs: Vec<f64> = obs.iter().map(|&i| x[(i, j)]).collect();
            let spec = ModelSpec {
                seed: seed ^ ((round * p + pos) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                ..config.learner.clone()
            };
            let model = models::fit(&spec, &x_obs, &y_obs)?;
            let pred = model.predict(&x.select_rows(&miss).select_columns(&others))?;
            for (&i, v) in miss.iter().zip(pred) {
                max_change = max_change.max((v - x[(i, j)]).abs());
                x[(i, j)] = v;
            }
        }
        report.rounds = round + 1;
        report.max_change.push(max_change);
        if max_change < config.tol {
            break;
        }
    }

    let mut out = table.clone();
    for &j in &order {
        let name = table.columns()[j].name.clone();
        out.replace_column(Column::numerical(name, x.column(j).iter().copied().collect()))?;
    }
    Ok((out, report))
}
