//! End-to-end preparation: split, encode, impute, standardize.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{iterative_impute, stratified_split_indices, ImputeConfig, ImputeReport, MEstimateEncoder, SplitIndices, SplitPlan, Standardizer};
use crate::error::{Error, Result};
use crate::synthdata::{Column, ColumnValues, DataTable, TargetKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub target: TargetKind,
    pub split: SplitPlan,
    /// M of the target encoder.
    pub smoothing: f64,
    pub impute: ImputeConfig,
    pub impute_seed: u64,
    pub standardize: bool,
}

impl PipelineConfig {
    /// Defaults with every random stream derived from `seed`.
    pub fn new(target: TargetKind, seed: u64) -> Self {
        Self {
            target,
            split: SplitPlan::new(seed),
            smoothing: 1.0,
            impute: ImputeConfig::default(),
            impute_seed: seed.wrapping_add(1),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub feature_names: Vec<String>,
    pub x_train: DMatrix<f64>,
    pub y_train: Vec<f64>,
    pub x_test: DMatrix<f64>,
    pub y_test: Vec<f64>,
    pub split: SplitIndices,
    pub encoder: MEstimateEncoder,
    pub impute: ImputeReport,
    pub standardizer: Option<Standardizer>,
}

/// Runs the full preparation on a raw table.
///
/// The encoder and standardizer see training rows only. Imputation runs over
/// the predictors of train and test together, with targets never involved.
pub fn prepare(table: &DataTable, config: &PipelineConfig) -> Result<PreparedData> {
    let split = stratified_split_indices(table.require_target(config.target)?, &config.split)?;
    prepare_with_split(table, split, config)
}

/// [`prepare`] with a precomputed train/test partition.
pub fn prepare_with_split(table: &DataTable, split: SplitIndices, config: &PipelineConfig) -> Result<PreparedData> {
    let (train, test) = (table.select_rows(&split.train), table.select_rows(&split.test));
    if train.n_rows() == 0 || test.n_rows() == 0 {
        return Err(Error::Empty("train or test partition"));
    }
    let encoder = MEstimateEncoder::fit(&train, config.target, config.smoothing)?;
    let train = encoder.transform(&train)?;
    let test = encoder.transform(&test)?;

    let combined = stack_rows(&train, &test)?;
    let (filled, impute) = iterative_impute(&combined, &config.impute, config.impute_seed)?;
    let n_train = train.n_rows();
    let train_rows: Vec<usize> = (0..n_train).collect();
    let test_rows: Vec<usize> = (n_train..filled.n_rows()).collect();
    let mut x_train = filled.select_rows(&train_rows).to_matrix()?;
    let mut x_test = filled.select_rows(&test_rows).to_matrix()?;

    let feature_names = table.feature_names();
    let standardizer = if config.standardize {
        let s = Standardizer::fit_matrix(&x_train, &feature_names)?;
        x_train = s.apply_matrix(&x_train)?;
        x_test = s.apply_matrix(&x_test)?;
        Some(s)
    } else {
        None
    };
    Ok(PreparedData {
        feature_names,
        x_train,
        y_train: train.require_target(config.target)?.to_vec(),
        x_test,
        y_test: test.require_target(config.target)?.to_vec(),
        split,
        encoder,
        impute,
        standardizer,
    })
}

/// Concatenates the rows of two tables with identical column layouts. Targets
/// and ids are kept only when both tables carry them.
pub fn stack_rows(a: &DataTable, b: &DataTable) -> Result<DataTable> {
    if a.feature_names() != b.feature_names() {
        return Err(Error::validation("columns", "tables must share the same columns in the same order"));
    }
    let columns = a
        .columns()
        .iter()
        .zip(b.columns())
        .map(|(ca, cb)| match (&ca.values, &cb.values) {
            (ColumnValues::Numerical(x), ColumnValues::Numerical(y)) => {
                Ok(Column::numerical(ca.name.clone(), x.iter().chain(y).copied().collect()))
            }
            (ColumnValues::Categorical(x), ColumnValues::Categorical(y)) => {
                Ok(Column::categorical(ca.name.clone(), x.iter().chain(y).cloned().collect()))
            }
            _ => Err(Error::validation(&ca.name, "column kinds differ between tables")),
        })
        .collect::<Result<Vec<_>>>()?;
    let join = |kind: TargetKind| match (a.target(kind), b.target(kind)) {
        (Some(x), Some(y)) => Some(x.iter().chain(y).copied().collect()),
        _ => None,
    };
    let out = DataTable::new(
        a.n_rows() + b.n_rows(),
        columns,
        join(TargetKind::MplAvgSafe),
        join(TargetKind::RiskGrq),
    )?;
    match (a.ids(), b.ids()) {
        (Some(x), Some(y)) => out.with_ids(x.iter().chain(y).cloned().collect()),
        _ => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::{apply_missingness, generate, register_schema, to_csv_string, GenConfig};

    fn small_config(seed: u64) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(TargetKind::MplAvgSafe, seed);
        cfg.impute.max_rounds = 2;
        cfg.impute.learner = cfg.impute.learner.with("n_estimators", 10.0);
        cfg
    }

    fn raw(seed: u64) -> DataTable {
        let schema = register_schema();
        let mut gen = GenConfig::default_with_seed(seed);
        gen.n_rows = 120;
        let (table, _) = generate(&schema, &gen).unwrap();
        table
    }

    #[test]
    fn shapes_and_moments() {
        let table = raw(5);
        let p = prepare(&table, &small_config(5)).unwrap();
        assert_eq!(p.x_train.nrows(), 96);
        assert_eq!(p.x_test.nrows(), 24);
        assert_eq!(p.x_train.ncols(), table.columns().len());
        assert!(p.x_train.iter().chain(p.x_test.iter()).all(|v| v.is_finite()));
        let s = p.standardizer.as_ref().unwrap();
        for (j, c) in s.columns.iter().enumerate() {
            if !c.constant {
                let col: Vec<f64> = p.x_train.column(j).iter().copied().collect();
                assert!(crate::stats::mean(&col).abs() < 1e-10);
            }
        }
        assert_eq!(prepare(&table, &small_config(5)).unwrap(), p);
    }

    #[test]
    fn test_targets_do_not_leak_into_features() {
        // Rotating the test-set targets must leave every prepared feature unchanged.
        let table = raw(9);
        let cfg = small_config(9);
        let base = prepare(&table, &cfg).unwrap();
        let mut y = table.target(TargetKind::MplAvgSafe).unwrap().to_vec();
        let test = &base.split.test;
        let rotated: Vec<f64> = test.iter().cycle().skip(1).take(test.len()).map(|&i| y[i]).collect();
        for (&i, v) in test.iter().zip(rotated) {
            y[i] = v;
        }
        let permuted = DataTable::new(
            table.n_rows(),
            table.columns().to_vec(),
            Some(y),
            table.target(TargetKind::RiskGrq).map(<[f64]>::to_vec),
        )
        .unwrap();
        let again = prepare_with_split(&permuted, base.split.clone(), &cfg).unwrap();
        assert_eq!(again.x_test, base.x_test);
        assert_eq!(again.x_train, base.x_train);
        assert_ne!(again.y_test, base.y_test);
    }

    #[test]
    fn stack_round_trip() {
        let table = apply_missingness(&raw(2), &register_schema(), 3).unwrap();
        let top: Vec<usize> = (0..50).collect();
        let bottom: Vec<usize> = (50..120).collect();
        let stacked = stack_rows(&table.select_rows(&top), &table.select_rows(&bottom)).unwrap();
        assert_eq!(to_csv_string(&stacked).unwrap(), to_csv_string(&table).unwrap());
    }
}
