use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Typed, validated view over a `name → value` hyperparameter map. Every key
/// must be consumed; leftovers are reported as unknown.
pub(crate) struct Params<'a> {
    map: &'a BTreeMap<String, f64>,
    used: RefCell<BTreeSet<&'a str>>,
}

impl<'a> Params<'a> {
    pub fn new(map: &'a BTreeMap<String, f64>) -> Self {
        Self {
            map,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn raw(&self, name: &str) -> Option<f64> {
        let (k, v) = self.map.get_key_value(name)?;
        self.used.borrow_mut().insert(k.as_str());
        Some(*v)
    }

    /// Real parameter that must satisfy `ok`.
    pub fn real(&self, name: &str, default: f64, ok: impl Fn(f64) -> bool, rule: &str) -> Result<f64> {
        let v = self.raw(name).unwrap_or(default);
        if !v.is_finite() || !ok(v) {
            return Err(Error::param(name, format!("{v} violates {rule}")));
        }
        Ok(v)
    }

    pub fn non_negative(&self, name: &str, default: f64) -> Result<f64> {
        self.real(name, default, |v| v >= 0.0, ">= 0")
    }

    pub fn positive(&self, name: &str, default: f64) -> Result<f64> {
        self.real(name, default, |v| v > 0.0, "> 0")
    }

    pub fn unit_interval(&self, name: &str, default: f64) -> Result<f64> {
        self.real(name, default, |v| (0.0..=1.0).contains(&v), "[0, 1]")
    }

    /// Fraction in `(0, 1]`.
    pub fn fraction(&self, name: &str, default: f64) -> Result<f64> {
        self.real(name, default, |v| v > 0.0 && v <= 1.0, "(0, 1]")
    }

    /// Integer parameter `>= min`.
    pub fn count(&self, name: &str, default: usize, min: usize) -> Result<usize> {
        let Some(v) = self.raw(name) else {
            return Ok(default);
        };
        if !v.is_finite() || v.fract() != 0.0 || v < min as f64 {
            return Err(Error::param(name, format!("{v} is not an integer >= {min}")));
        }
        Ok(v as usize)
    }

    pub fn flag(&self, name: &str, default: bool) -> Result<bool> {
        match self.raw(name) {
            None => Ok(default),
            Some(0.0) => Ok(false),
            Some(1.0) => Ok(true),
            Some(v) => Err(Error::param(name, format!("{v} is not 0 or 1"))),
        }
    }

    pub fn finish(self) -> Result<()> {
        let used = self.used.borrow();
        match self.map.keys().find(|k| !used.contains(k.as_str())) {
            Some(k) => Err(Error::param(k, "unknown hyperparameter for this family")),
            None => Ok(()),
        }
    }
}
