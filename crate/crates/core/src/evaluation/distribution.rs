//! Box-plot summaries of per-fold scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

pub const MIN_SCORES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub label: String,
    pub n: usize,
    /// Smallest and largest score inside the 1.5·IQR fences (the whisker ends).
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

/// Tukey box summary with linearly interpolated quartiles.
pub fn box_summary(label: &str, scores: &[f64]) -> Result<BoxSummary> {
    if scores.len() < MIN_SCORES {
        return Err(Error::validation(
            label,
            format!("{} scores given, at least {MIN_SCORES} needed", scores.len()),
        ));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fold scores"));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile_sorted(&s, 0.25), quantile_sorted(&s, 0.5), quantile_sorted(&s, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|v| (lo..=hi).contains(v)).collect();
    Ok(BoxSummary {
        label: label.to_string(),
        n: s.len(),
        min: inside[0],
        q1,
        median,
        q3,
        max: inside[inside.len() - 1],
        outliers: s.into_iter().filter(|v| !(lo..=hi).contains(v)).collect(),
    })
}

/// Summaries for several labelled score sets, in input order.
pub fn fold_distribution(groups: &[(String, Vec<f64>)]) -> Result<Vec<BoxSummary>> {
    groups.iter().map(|(label, scores)| box_summary(label, scores)).collect()
}

pub fn distribution_csv(summaries: &[BoxSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "n", "min", "q1", "median", "q3", "max", "outliers"])?;
    for b in summaries {
        let outliers: Vec<String> = b.outliers.iter().map(f64::to_string).collect();
        w.write_record([
            b.label.clone(),
            b.n.to_string(),
            b.min.to_string(),
            b.q1.to_string(),
            b.median.to_string(),
            b.q3.to_string(),
            b.max.to_string(),
            outliers.join(";"),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn distribution_json(summaries: &[BoxSummary]) -> Result<String> {
    Ok(serde_json::to_string_pretty(summaries)?)
}
