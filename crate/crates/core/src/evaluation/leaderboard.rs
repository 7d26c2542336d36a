//! Multi-model tuning and test-set ranking.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::search::{grid_search_on_folds, CvOptions, Folds};
use super::{metrics, Metric, Metrics};
use crate::error::{Error, Result};
use crate::models::{Family, GridManifest, ModelSpec};

pub const COLUMNS: [&str; 7] = ["Model", "MAE", "MSE", "RMSE", "R-Squared", "RMSLE", "MAPE"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub family: Family,
    pub model: String,
    /// Tuned spec; `None` when tuning failed.
    pub spec: Option<ModelSpec>,
    pub cv_mean: Option<f64>,
    /// Validation score of the tuned spec on each fold.
    #[serde(default)]
    pub fold_scores: Vec<f64>,
    pub test: Option<Metrics>,
    pub beats_dummy: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sort_metric: Metric,
    pub k: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub rows: Vec<LeaderboardRow>,
}

/// Tunes each family on `grids` with shared k-fold CV, refits the winner on
/// the training rows and scores it on the test rows. The dummy baseline is
/// always included. A failing family yields an error row instead of aborting.
#[allow(clippy::too_many_arguments)]
pub fn leaderboard(
    families: &[Family],
    grids: &GridManifest,
    x_train: &DMatrix<f64>,
    y_train: &[f64],
    x_test: &DMatrix<f64>,
    y_test: &[f64],
    opts: &CvOptions,
) -> Result<EvalReport> {
    if x_test.nrows() != y_test.len() {
        return Err(Error::DimensionMismatch { expected: x_test.nrows(), actual: y_test.len() });
    }
    if y_test.is_empty() {
        return Err(Error::Empty("test rows"));
    }
    let mut roster: Vec<Family> = Vec::new();
    for &f in families.iter().chain([Family::Dummy].iter()) {
        if !roster.contains(&f) {
            roster.push(f);
        }
    }
    let folds = Folds::new(x_train, y_train, opts.k, opts.seed)?;
    let mut rows: Vec<LeaderboardRow> = roster
        .iter()
        .map(|&family| {
            let grid = grids.specs(family, opts.seed);
            let outcome = grid_search_on_folds(&grid, &folds, x_train, y_train, opts.metric).and_then(|g| {
                let pred = g.model.predict(x_test)?;
                Ok((g.best().clone(), metrics(y_test, &pred)?))
            });
            match outcome {
                Ok((best, test)) => LeaderboardRow {
                    family,
                    model: family.display_name().to_string(),
                    spec: Some(best.spec),
                    cv_mean: Some(best.mean),
                    fold_scores: best.fold_scores,
                    test: Some(test),
                    beats_dummy: false,
                    error: None,
                },
                Err(e) => LeaderboardRow {
                    family,
                    model: family.display_name().to_string(),
                    spec: None,
                    cv_mean: None,
                    fold_scores: Vec::new(),
                    test: None,
                    beats_dummy: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let loss = |r: &LeaderboardRow| r.test.as_ref().map_or(f64::INFINITY, |m| opts.metric.loss(m));
    let dummy_loss = rows.iter().find(|r| r.family == Family::Dummy).map_or(f64::INFINITY, loss);
    for r in &mut rows {
        r.beats_dummy = r.family != Family::Dummy && loss(r) < dummy_loss;
    }
    rows.sort_by(|a, b| loss(a).total_cmp(&loss(b)).then(a.family.key().cmp(b.family.key())));
    Ok(EvalReport {
        sort_metric: opts.metric,
        k: opts.k,
        seed: opts.seed,
        n_train: y_train.len(),
        n_test: y_test.len(),
        rows,
    })
}

fn cells(r: &LeaderboardRow) -> Vec<String> {
    let mut out = vec![r.model.clone()];
    match &r.test {
        Some(m) => out.extend([m.mae, m.mse, m.rmse, m.r2, m.rmsle, m.mape].iter().map(|v| format!("{v:.4}"))),
        None => out.extend(std::iter::repeat_n("failed".to_string(), 6)),
    }
    out
}

impl EvalReport {
    pub fn row(&self, family: Family) -> Option<&LeaderboardRow> {
        self.rows.iter().find(|r| r.family == family)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COLUMNS)?;
        for r in &self.rows {
            w.write_record(cells(r))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width table with the model name left-aligned and numbers right-aligned.
    pub fn to_text(&self) -> String {
        let body: Vec<Vec<String>> = self.rows.iter().map(cells).collect();
        let widths: Vec<usize> = (0..COLUMNS.len())
            .map(|c| body.iter().map(|r| r[c].len()).chain([COLUMNS[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  "));
        };
        line(&mut out, &COLUMNS.map(String::from));
        for r in &body {
            line(&mut out, r);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_fn(60, 2, |i, j| ((i * (j + 3)) % 11) as f64);
        let y = (0..60).map(|i| 1.0 + 0.5 * x[(i, 0)] + 0.2 * x[(i, 1)]).collect();
        (x, y)
    }

    #[test]
    fn dummy_always_present_and_beaten() {
        let (x, y) = data();
        let grids = GridManifest::default();
        let r = leaderboard(&[Family::LinearRegression], &grids, &x, &y, &x, &y, &CvOptions::new(0)).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].family, Family::LinearRegression);
        assert!(r.rows[0].beats_dummy);
        assert!(!r.row(Family::Dummy).unwrap().beats_dummy);
    }

    #[test]
    fn failures_become_rows() {
        let (x, y) = data();
        // Deserializing directly skips override validation, so the bad point reaches fitting.
        let grids: GridManifest = serde_json::from_str(r#"{"ridge": [{"alpha": -1}], "dummy": [{}]}"#).unwrap();
        let r = leaderboard(&[Family::Ridge], &grids, &x, &y, &x, &y, &CvOptions::new(0)).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].family, Family::Dummy);
        let ridge = r.row(Family::Ridge).unwrap();
        assert!(ridge.error.is_some() && ridge.test.is_none() && !ridge.beats_dummy);
    }

    #[test]
    fn formats() {
        let (x, y) = data();
        let r = leaderboard(&[Family::Ridge], &GridManifest::default(), &x, &y, &x, &y, &CvOptions::new(0)).unwrap();
        let csv = r.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("Model,MAE,MSE,RMSE,R-Squared,RMSLE,MAPE"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "Ridge Regression");
        assert!(first[1..].iter().all(|c| c.split('.').nth(1).is_some_and(|d| d.len() == 4)));
        let text = r.to_text();
        let widths: Vec<usize> = text.lines().map(str::len).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]));
        let failed = LeaderboardRow {
            family: Family::Knn,
            model: "KNN Regressor".into(),
            spec: None,
            cv_mean: None,
            test: None,
            beats_dummy: false,
            fold_scores: Vec::new(),
            error: Some("boom".into()),
        };
        assert_eq!(cells(&failed)[1], "failed");
    }
}
