//! Column standardization with training-set moments.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::synthdata::{Column, DataTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
    /// Zero-variance column; passed through untouched.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<ColumnScale>,
}

impl Standardizer {
    /// Moments of every column of `train`, which must be numerical and complete.
    pub fn fit(train: &DataTable) -> Result<Self> {
        let columns = train
            .columns()
            .iter()
            .map(|c| {
                let v = complete_values(c)?;
                Ok(scale_of(&c.name, v))
            })
            .collect::<Result<_>>()?;
        Ok(Self { columns })
    }

    /// Same as [`fit`](Self::fit) for a matrix whose columns carry `names`.
    pub fn fit_matrix(x: &DMatrix<f64>, names: &[String]) -> Result<Self> {
        if names.len() != x.ncols() {
            return Err(Error::DimensionMismatch { expected: x.ncols(), actual: names.len() });
        }
        let columns = names
            .iter()
            .enumerate()
            .map(|(j, name)| scale_of(name, &x.column(j).iter().copied().collect::<Vec<_>>()))
            .collect();
        Ok(Self { columns })
    }

    pub fn constant_columns(&self) -> Vec<&str> {
        self.columns.iter().filter(|c| c.constant).map(|c| c.name.as_str()).collect()
    }

    /// Rescales the columns of `table` by name; columns the standardizer has
    /// not seen are an error.
    pub fn apply(&self, table: &DataTable) -> Result<DataTable> {
        let mut out = table.clone();
        for c in table.columns() {
            let s = self
                .columns
                .iter()
                .find(|s| s.name == c.name)
                .ok_or_else(|| Error::UnknownFeature(c.name.clone()))?;
            let v = complete_values(c)?;
            out.replace_column(Column::numerical(c.name.clone(), v.iter().map(|&x| s.apply(x)).collect()))?;
        }
        Ok(out)
    }

    /// Rescales matrix columns positionally.
    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.columns.len() {
            return Err(Error::DimensionMismatch { expected: self.columns.len(), actual: x.ncols() });
        }
        let mut out = x.clone();
        for (j, s) in self.columns.iter().enumerate() {
            out.column_mut(j).apply(|v| *v = s.apply(*v));
        }
        Ok(out)
    }
}

impl ColumnScale {
    fn apply(&self, x: f64) -> f64 {
        if self.constant {
            x
        } else {
            (x - self.mean) / self.sd
        }
    }
}

fn scale_of(name: &str, v: &[f64]) -> ColumnScale {
    let mean = if v.is_empty() { 0.0 } else { stats::mean(v) };
    let sd = if v.len() < 2 { 0.0 } else { stats::sample_sd(v) };
    // Treat numerically flat columns (rounding noise only) as constant too.
    let constant = sd.is_nan() || sd <= 1e-12 * mean.abs().max(1.0);
    ColumnScale {
        name: name.to_string(),
        mean,
        sd,
        constant,
    }
}

fn complete_values(c: &Column) -> Result<&[f64]> {
    let v = c
        .as_numerical()
        .ok_or_else(|| Error::validation(&c.name, "categorical column must be encoded first"))?;
    if c.missing_count() > 0 {
        return Err(Error::validation(&c.name, "column still has missing cells"));
    }
    Ok(v)
}
