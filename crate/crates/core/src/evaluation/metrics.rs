//! Regression error metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Targets closer to zero than this are left out of MAPE.
pub const MAPE_ZERO_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    pub rmsle: f64,
    /// Fraction, not percent. NaN when no row qualifies.
    pub mape: f64,
    pub mape_effective_n: usize,
}

/// Metric used to rank specs and models. Lower loss is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mae,
    Mse,
    Rmse,
    R2,
    Rmsle,
    Mape,
}

impl Metric {
    pub const ALL: [Metric; 6] = [Metric::Mae, Metric::Mse, Metric::Rmse, Metric::R2, Metric::Rmsle, Metric::Mape];

    pub fn key(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Mse => "mse",
            Metric::Rmse => "rmse",
            Metric::R2 => "r2",
            Metric::Rmsle => "rmsle",
            Metric::Mape => "mape",
        }
    }

    pub fn value(self, m: &Metrics) -> f64 {
        match self {
            Metric::Mae => m.mae,
            Metric::Mse => m.mse,
            Metric::Rmse => m.rmse,
            Metric::R2 => m.r2,
            Metric::Rmsle => m.rmsle,
            Metric::Mape => m.mape,
        }
    }

    /// Value oriented so that smaller is better (R² is negated). NaN maps to +∞.
    pub fn loss(self, m: &Metrics) -> f64 {
        self.orient(self.value(m))
    }

    /// This metric alone; only RMSLE rejects negative targets.
    pub fn score(self, y: &[f64], pred: &[f64]) -> Result<f64> {
        if self == Metric::Rmsle {
            return metrics(y, pred).map(|m| m.rmsle);
        }
        compute(y, pred).map(|m| self.value(&m))
    }

    /// Orients a raw value of this metric as a loss.
    pub fn orient(self, value: f64) -> f64 {
        let v = if self == Metric::R2 { -value } else { value };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.key().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation("metric", format!("unknown metric `{s}`")))
    }
}

/// All six metrics of predictions `pred` against targets `y`.
///
/// RMSLE clips negative predictions at zero and requires `y ≥ 0`. R² of a
/// constant target is 1 for a perfect fit and 0 otherwise.
pub fn metrics(y: &[f64], pred: &[f64]) -> Result<Metrics> {
    let m = compute(y, pred)?;
    if m.rmsle.is_nan() {
        return Err(Error::validation("y", "RMSLE needs non-negative targets"));
    }
    Ok(m)
}

/// Like [`metrics`], but a negative target leaves RMSLE as NaN.
fn compute(y: &[f64], pred: &[f64]) -> Result<Metrics> {
    if y.len() != pred.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), actual: pred.len() });
    }
    if y.is_empty() {
        return Err(Error::Empty("metric inputs"));
    }
    if y.iter().chain(pred).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric inputs"));
    }
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut abs, mut sq, mut tot, mut log_sq) = (0.0, 0.0, 0.0, 0.0);
    let (mut ape, mut ape_n) = (0.0, 0usize);
    for (&t, &p) in y.iter().zip(pred) {
        let e = t - p;
        abs += e.abs();
        sq += e * e;
        tot += (t - y_mean).powi(2);
        log_sq += (p.max(0.0).ln_1p() - t.ln_1p()).powi(2);
        if t.abs() >= MAPE_ZERO_CUTOFF {
            ape += (e / t).abs();
            ape_n += 1;
        }
    }
    let mse = sq / n;
    let r2 = if tot > 0.0 {
        1.0 - sq / tot
    } else if sq == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Metrics {
        mae: abs / n,
        mse,
        rmse: mse.sqrt(),
        r2,
        rmsle: if y.iter().any(|&v| v < 0.0) { f64::NAN } else { (log_sq / n).sqrt() },
        mape: if ape_n == 0 { f64::NAN } else { ape / ape_n as f64 },
        mape_effective_n: ape_n,
    })
}
