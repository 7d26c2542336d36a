//! M-estimate (additively smoothed) target encoding of categorical columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthdata::{Column, ColumnValues, DataTable, TargetKind};

/// `(count·category_mean + m·global_mean) / (count + m)`.
pub fn m_estimate(count: usize, category_mean: f64, global_mean: f64, m: f64) -> f64 {
    let n = count as f64;
    (n * category_mean + m * global_mean) / (n + m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub count: usize,
    pub mean: f64,
    pub encoded: f64,
}

/// Per-column level maps fitted on training rows. A missing cell is its own
/// level, stored under the empty string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MEstimateEncoder {
    pub smoothing: f64,
    pub global_mean: f64,
    pub target: TargetKind,
    pub levels: BTreeMap<String, BTreeMap<String, LevelStats>>,
}

impl MEstimateEncoder {
    /// Fits every categorical column of `train` against `target`.
    pub fn fit(train: &DataTable, target: TargetKind, smoothing: f64) -> Result<Self> {
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(Error::validation("smoothing", format!("{smoothing} must be a finite value >= 0")));
        }
        let y = train.require_target(target)?;
        if y.is_empty() {
            return Err(Error::Empty("training rows for the encoder"));
        }
        let global_mean = y.iter().sum::<f64>() / y.len() as f64;
        let mut levels = BTreeMap::new();
        for c in train.columns() {
            let ColumnValues::Categorical(values) = &c.values else {
                continue;
            };
            let mut acc: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
            for (v, &t) in values.iter().zip(y) {
                let e = acc.entry(v.as_str()).or_insert((0, 0.0));
                e.0 += 1;
                e.1 += t;
            }
            let map = acc
                .into_iter()
                .map(|(level, (count, sum))| {
                    let mean = sum / count as f64;
                    let stats = LevelStats {
                        count,
                        mean,
                        encoded: m_estimate(count, mean, global_mean, smoothing),
                    };
                    (level.to_string(), stats)
                })
                .collect();
            levels.insert(c.name.clone(), map);
        }
        Ok(Self {
            smoothing,
            global_mean,
            target,
            levels,
        })
    }

    /// Encoded value of `level` in `column`; unseen levels get the global mean.
    pub fn encode_level(&self, column: &str, level: &str) -> Result<f64> {
        let map = self
            .levels
            .get(column)
            .ok_or_else(|| Error::UnknownFeature(column.to_string()))?;
        Ok(map.get(level).map_or(self.global_mean, |s| s.encoded))
    }

    /// Replaces every categorical column by its fully observed numeric encoding.
    pub fn transform(&self, table: &DataTable) -> Result<DataTable> {
        let mut out = table.clone();
        for c in table.columns() {
            if let ColumnValues::Categorical(values) = &c.values {
                let encoded = values
                    .iter()
                    .map(|v| self.encode_level(&c.name, v))
                    .collect::<Result<Vec<_>>>()?;
                out.replace_column(Column::numerical(c.name.clone(), encoded))?;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(levels: &[&str], y: &[f64]) -> DataTable {
        DataTable::new(
            y.len(),
            vec![Column::categorical("c", levels.iter().map(|s| s.to_string()).collect())],
            Some(y.to_vec()),
            None,
        )
        .unwrap()
    }

    #[test]
    fn formula_examples() {
        assert_eq!(m_estimate(4, 2.0, 3.0, 0.0), 2.0);
        assert!((m_estimate(4, 2.0, 3.0, 1.0) - 2.2).abs() < 1e-15);
    }

    #[test]
    fn fitted_levels_and_fallbacks() {
        // Level "a": four rows with mean 2; level "b": one row of 7. Global mean 3.
        let t = table(&["a", "a", "a", "a", "b"], &[1.0, 3.0, 2.0, 2.0, 7.0]);
        let enc = MEstimateEncoder::fit(&t, TargetKind::MplAvgSafe, 1.0).unwrap();
        assert_eq!(enc.global_mean, 3.0);
        assert!((enc.encode_level("c", "a").unwrap() - 2.2).abs() < 1e-15);
        assert_eq!(enc.encode_level("c", "b").unwrap(), 5.0);
        assert_eq!(enc.encode_level("c", "zzz").unwrap(), 3.0);
        assert!(enc.encode_level("other", "a").is_err());
    }

    #[test]
    fn missing_is_its_own_level() {
        let t = table(&["", "", "x", "x"], &[8.0, 8.0, 0.0, 0.0]);
        let enc = MEstimateEncoder::fit(&t, TargetKind::MplAvgSafe, 0.0).unwrap();
        let out = enc.transform(&t).unwrap();
        let c = out.column("c").unwrap();
        assert_eq!(c.as_numerical().unwrap(), &[8.0, 8.0, 0.0, 0.0]);
        assert_eq!(c.missing_count(), 0);
    }

    #[test]
    fn negative_smoothing_rejected() {
        let t = table(&["a"], &[1.0]);
        assert!(MEstimateEncoder::fit(&t, TargetKind::MplAvgSafe, -0.5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = table(&["a", "b", ""], &[1.0, 2.0, 3.0]);
        let enc = MEstimateEncoder::fit(&t, TargetKind::MplAvgSafe, 1.0).unwrap();
        assert_eq!(MEstimateEncoder::from_json(&enc.to_json().unwrap()).unwrap(), enc);
    }

    proptest! {
        #[test]
        fn encoding_is_a_convex_combination(count in 1usize..500, cm in 0.0..10.0f64, gm in 0.0..10.0f64, m in 0.0..100.0f64) {
            let e = m_estimate(count, cm, gm, m);
            let (lo, hi) = (cm.min(gm), cm.max(gm));
            prop_assert!(e >= lo - 1e-12 && e <= hi + 1e-12);
        }

        #[test]
        fn limits(cm in 0.0..10.0f64, gm in 0.0..10.0f64) {
            prop_assert!((m_estimate(10_000_000, cm, gm, 1.0) - cm).abs() < 1e-5);
            prop_assert!((m_estimate(1, cm, gm, 1e9) - gm).abs() < 1e-7);
        }
    }
}
