use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::schema::FeatureKind;
use crate::error::{Error, Result};

/// The two risk measures a table can carry as targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    MplAvgSafe,
    RiskGrq,
}

impl TargetKind {
    pub const ALL: [TargetKind; 2] = [TargetKind::MplAvgSafe, TargetKind::RiskGrq];

    pub fn column_name(self) -> &'static str {
        match self {
            TargetKind::MplAvgSafe => "mpl_avg_safe",
            TargetKind::RiskGrq => "risk_grq",
        }
    }

    pub fn from_column_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.column_name() == name)
    }
}

impl std::str::FromStr for TargetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_column_name(s)
            .ok_or_else(|| Error::validation("target", format!("`{s}` is not mpl_avg_safe or risk_grq")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnValues {
    /// Masked cells hold NaN.
    Numerical(Vec<f64>),
    /// Masked cells hold the empty string.
    Categorical(Vec<String>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Numerical(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
    pub missing: Vec<bool>,
}

impl Column {
    pub fn numerical(name: impl Into<String>, values: Vec<f64>) -> Self {
        let missing = values.iter().map(|v| v.is_nan()).collect();
        Self {
            name: name.into(),
            values: ColumnValues::Numerical(values),
            missing,
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<String>) -> Self {
        let missing = values.iter().map(String::is_empty).collect();
        Self {
            name: name.into(),
            values: ColumnValues::Categorical(values),
            missing,
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self.values {
            ColumnValues::Numerical(_) => FeatureKind::Numerical,
            ColumnValues::Categorical(_) => FeatureKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn as_numerical(&self) -> Option<&[f64]> {
        match &self.values {
            ColumnValues::Numerical(v) => Some(v),
            ColumnValues::Categorical(_) => None,
        }
    }

    /// Masks one cell.
    pub fn mask(&mut self, row: usize) {
        self.missing[row] = true;
        match &mut self.values {
            ColumnValues::Numerical(v) => v[row] = f64::NAN,
            ColumnValues::Categorical(v) => v[row].clear(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        let values = match &self.values {
            ColumnValues::Numerical(v) => ColumnValues::Numerical(rows.iter().map(|&r| v[r]).collect()),
            ColumnValues::Categorical(v) => {
                ColumnValues::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        };
        Column {
            name: self.name.clone(),
            values,
            missing: rows.iter().map(|&r| self.missing[r]).collect(),
        }
    }
}

/// Columnar dataset: predictor columns with a parallel missing mask, plus
/// fully observed targets and optional row ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    n_rows: usize,
    ids: Option<Vec<String>>,
    columns: Vec<Column>,
    mpl_avg_safe: Option<Vec<f64>>,
    risk_grq: Option<Vec<f64>>,
}

impl DataTable {
    pub fn new(
        n_rows: usize,
        columns: Vec<Column>,
        mpl_avg_safe: Option<Vec<f64>>,
        risk_grq: Option<Vec<f64>>,
    ) -> Result<Self> {
        let table = Self {
            n_rows,
            ids: None,
            columns,
            mpl_avg_safe,
            risk_grq,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        self.ids = Some(ids);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_rows;
        if let Some(ids) = &self.ids {
            if ids.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: ids.len() });
            }
        }
        for c in &self.columns {
            if c.values.len() != n || c.missing.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: c.values.len() });
            }
            let consistent = match &c.values {
                ColumnValues::Numerical(v) => v
                    .iter()
                    .zip(&c.missing)
                    .all(|(x, &m)| if m { x.is_nan() } else { x.is_finite() }),
                ColumnValues::Categorical(v) => {
                    v.iter().zip(&c.missing).all(|(x, &m)| m == x.is_empty())
                }
            };
            if !consistent {
                return Err(Error::validation(
                    &c.name,
                    "missing mask disagrees with cell values",
                ));
            }
        }
        for kind in TargetKind::ALL {
            if let Some(t) = self.target(kind) {
                if t.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: t.len() });
                }
                if t.iter().any(|v| !v.is_finite() || !(0.0..=10.0).contains(v)) {
                    return Err(Error::validation(kind.column_name(), "target outside [0, 10]"));
                }
                if kind == TargetKind::RiskGrq && t.iter().any(|v| v.fract() != 0.0) {
                    return Err(Error::validation(kind.column_name(), "risk_grq must be integral"));
                }
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn columns_mut(&mut self) -> &mut [Column] {
        &mut self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn target(&self, kind: TargetKind) -> Option<&[f64]> {
        match kind {
            TargetKind::MplAvgSafe => self.mpl_avg_safe.as_deref(),
            TargetKind::RiskGrq => self.risk_grq.as_deref(),
        }
    }

    pub fn require_target(&self, kind: TargetKind) -> Result<&[f64]> {
        self.target(kind).ok_or_else(|| {
            Error::validation(kind.column_name(), "target column not present in table")
        })
    }

    pub fn missing_cells(&self) -> usize {
        self.columns.iter().map(Column::missing_count).sum()
    }

    /// Fraction of masked predictor cells.
    pub fn missing_fraction(&self) -> f64 {
        let cells = self.n_rows * self.columns.len();
        if cells == 0 {
            0.0
        } else {
            self.missing_cells() as f64 / cells as f64
        }
    }

    /// Rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        let pick = |v: &Vec<f64>| rows.iter().map(|&r| v[r]).collect();
        DataTable {
            n_rows: rows.len(),
            ids: self.ids.as_ref().map(|ids| rows.iter().map(|&r| ids[r].clone()).collect()),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            mpl_avg_safe: self.mpl_avg_safe.as_ref().map(pick),
            risk_grq: self.risk_grq.as_ref().map(pick),
        }
    }

    /// Keeps only the named predictor columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<DataTable> {
        let columns = names
            .iter()
            .map(|n| self.column_index(n).map(|i| self.columns[i].clone()))
            .collect::<Result<_>>()?;
        Ok(DataTable {
            columns,
            ..self.clone()
        })
    }

    pub fn replace_column(&mut self, column: Column) -> Result<()> {
        let i = self.column_index(&column.name)?;
        if column.len() != self.n_rows {
            return Err(Error::DimensionMismatch { expected: self.n_rows, actual: column.len() });
        }
        self.columns[i] = column;
        Ok(())
    }

    /// Row-major numeric design matrix. Every column must be numerical and
    /// fully observed.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.n_rows, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            let v = c.as_numerical().ok_or_else(|| {
                Error::validation(&c.name, "categorical column must be encoded first")
            })?;
            if c.missing_count() > 0 {
                return Err(Error::validation(&c.name, "column still has missing cells"));
            }
            m.column_mut(j).copy_from_slice(v);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DataTable {
        DataTable::new(
            3,
            vec![
                Column::numerical("x", vec![1.0, f64::NAN, 3.0]),
                Column::categorical("c", vec!["a".into(), "b".into(), "".into()]),
            ],
            Some(vec![1.0, 2.0, 3.0]),
            None,
        )
        .unwrap()
    }

    #[test]
    fn masks_follow_values() {
        let t = small();
        assert_eq!(t.missing_cells(), 2);
        assert_eq!(t.column("x").unwrap().missing, vec![false, true, false]);
    }

    #[test]
    fn select_rows_keeps_alignment() {
        let t = small().select_rows(&[2, 0]);
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.target(TargetKind::MplAvgSafe).unwrap(), &[3.0, 1.0]);
        assert_eq!(t.column("c").unwrap().missing, vec![true, false]);
    }

    #[test]
    fn rejects_bad_targets() {
        let cols = vec![Column::numerical("x", vec![1.0])];
        assert!(DataTable::new(1, cols.clone(), Some(vec![11.0]), None).is_err());
        assert!(DataTable::new(1, cols.clone(), None, Some(vec![2.5])).is_err());
        assert!(DataTable::new(2, cols, None, None).is_err());
    }

    #[test]
    fn matrix_requires_complete_numeric() {
        assert!(small().to_matrix().is_err());
        let t = DataTable::new(2, vec![Column::numerical("x", vec![1.0, 2.0])], None, None).unwrap();
        assert_eq!(t.to_matrix().unwrap()[(1, 0)], 2.0);
    }
}
