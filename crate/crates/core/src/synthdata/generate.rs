//! Deterministic synthetic register data with planted ground truth.
//!
//! Every row draws from its own ChaCha stream keyed by `(seed, row)`, so the
//! output never depends on generation order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use super::schema::{Distribution, Factor, FeatureDef, FeatureKind, FeatureSchema};
use super::table::{Column, DataTable, TargetKind};
use crate::error::{Error, Result};
use crate::stats::{mean, normal_cdf, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSelection {
    MplAvgSafe,
    RiskGrq,
    Both,
}

impl TargetSelection {
    fn includes(self, kind: TargetKind) -> bool {
        matches!(
            (self, kind),
            (TargetSelection::Both, _)
                | (TargetSelection::MplAvgSafe, TargetKind::MplAvgSafe)
                | (TargetSelection::RiskGrq, TargetKind::RiskGrq)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_rows: usize,
    pub seed: u64,
    /// `(feature, coefficient)` pairs acting on the standardized feature.
    pub signal: Vec<(String, f64)>,
    pub noise_sd: f64,
    pub target: TargetSelection,
    /// Latent score before noise and clamping when all features sit at their mean.
    #[serde(default = "default_intercept")]
    pub intercept: f64,
}

fn default_intercept() -> f64 {
    5.0
}

impl GenConfig {
    /// The default demo dataset: ten informative features echoing the
    /// predictors reported as most consistent for risk preference.
    pub fn default_with_seed(seed: u64) -> Self {
        let signal = [
            ("Age_squared", -0.55),
            ("GBAGESLACHT", -0.45),
            ("VEHW1000VERH2019", 0.35),
            ("VEHW1200STOH2019", -0.3),
            ("INPPERSINK2019", 0.3),
            ("SMODELRAMINGPENSIOENPREMIEWG2", -0.3),
            ("VEHW1112EFFH2019", 0.4),
            ("OPLNIVSOI2016AGG1HBMETNIRWO2019", 0.3),
            ("MIGRATIEACHTERGROND", -0.25),
            ("INHP100HGEST2019", 0.25),
        ]
        .into_iter()
        .map(|(n, c)| (n.to_string(), c))
        .collect();
        Self {
            n_rows: 1000,
            seed,
            signal,
            noise_sd: 1.0,
            target: TargetSelection::Both,
            intercept: default_intercept(),
        }
    }

    fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::validation("noise_sd", "must be a finite value >= 0"));
        }
        for (name, coef) in &self.signal {
            schema.index_of(name)?;
            if !coef.is_finite() {
                return Err(Error::validation(format!("signal.{name}"), "coefficient must be finite"));
            }
        }
        Ok(())
    }
}

/// What the generator planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub intercept: f64,
    /// Coefficients on standardized features, keyed by feature name.
    pub coefficients: BTreeMap<String, f64>,
    /// Sample mean and sd used to standardize each informative feature.
    pub standardization: BTreeMap<String, (f64, f64)>,
}

impl GroundTruth {
    pub fn informative(&self) -> Vec<&str> {
        self.coefficients
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

const FEATURE_STREAM: u64 = 0;
const TARGET_STREAM: u64 = 1;
const MISSING_STREAM: u64 = 2;

fn row_rng(seed: u64, purpose: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(row as u64);
    rng
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Per-row latent drivers.
struct Latents {
    age: f64,
    income: f64,
    wealth: f64,
    household: f64,
    /// One shared uniform per factor so percentile and decile agree.
    rank_income: f64,
    rank_wealth: f64,
}

impl Latents {
    fn draw(rng: &mut impl Rng) -> Self {
        let age = normal(rng);
        let income = 0.4 * age + 0.916_515 * normal(rng);
        let wealth = 0.45 * age + 0.45 * income + 0.770_714 * normal(rng);
        let household = 0.35 * age + 0.936_750 * normal(rng);
        let rank_income = normal_cdf(0.9 * income + 0.435_890 * normal(rng));
        let rank_wealth = normal_cdf(0.9 * wealth + 0.435_890 * normal(rng));
        Self {
            age,
            income,
            wealth,
            household,
            rank_income,
            rank_wealth,
        }
    }

    fn factor(&self, f: Factor, rng: &mut impl Rng) -> f64 {
        match f {
            Factor::Age => self.age,
            Factor::Income => self.income,
            Factor::Wealth => self.wealth,
            Factor::Household => self.household,
            Factor::Independent => normal(rng),
        }
    }

    fn rank(&self, f: Factor, rng: &mut impl Rng) -> f64 {
        match f {
            Factor::Income => self.rank_income,
            Factor::Wealth => self.rank_wealth,
            other => normal_cdf(self.factor(other, rng)),
        }
    }
}

enum Cell {
    Num(f64),
    Cat(u32),
}

fn percentile(u: f64) -> f64 {
    (100.0 * u).ceil().clamp(1.0, 100.0)
}

fn categorical_level(cardinality: u32, ratio: f64, u: f64) -> u32 {
    let weights: Vec<f64> = (0..cardinality).map(|k| ratio.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return k as u32;
        }
    }
    cardinality - 1
}

fn draw_cell(def: &FeatureDef, lat: &Latents, age_years: f64, rng: &mut impl Rng) -> Cell {
    match def.distribution {
        Distribution::TruncatedNormal { mean, sd, low, high } => {
            let mut z = lat.age;
            let mut x = mean + sd * z;
            // Re-draw until inside the bounds; the first draw is the shared latent.
            while !(low..=high).contains(&x) {
                z = normal(rng);
                x = mean + sd * z;
            }
            Cell::Num(x.round())
        }
        Distribution::AgeSquared => Cell::Num(age_years * age_years),
        Distribution::LogNormal {
            factor,
            mu,
            sigma,
            loading,
            zero_prob,
        } => {
            let f = lat.factor(factor, rng);
            let rho = loading.clamp(-1.0, 1.0);
            let e = normal(rng);
            let zero = rng.random::<f64>() < zero_prob;
            if zero {
                Cell::Num(0.0)
            } else {
                let log_x = mu + sigma * (rho * f + (1.0 - rho * rho).sqrt() * e);
                Cell::Num(log_x.exp().round())
            }
        }
        Distribution::Percentile { factor } => Cell::Num(percentile(lat.rank(factor, rng))),
        Distribution::Decile { factor } => {
            let p = percentile(lat.rank(factor, rng));
            Cell::Cat(((p - 1.0) / 10.0).floor() as u32)
        }
        Distribution::Share { factor } => {
            let f = lat.factor(factor, rng);
            let u = normal_cdf(0.8 * f + 0.6 * normal(rng) - 0.8);
            Cell::Num((1000.0 * u).round() / 10.0)
        }
        Distribution::Multinomial { factor, skew, loading } => {
            let f = lat.factor(factor, rng);
            let t = (loading * f + normal(rng)) / (1.0 + loading * loading).sqrt();
            let card = def.cardinality.expect("categorical has cardinality");
            Cell::Cat(categorical_level(card, skew, normal_cdf(t)))
        }
    }
}

/// Category labels are 1-based level codes.
fn level_label(level: u32) -> String {
    (level + 1).to_string()
}

/// Generates a complete (unmasked) table and the ground truth used for its targets.
pub fn generate(schema: &FeatureSchema, config: &GenConfig) -> Result<(DataTable, GroundTruth)> {
    config.validate(schema)?;
    let n = config.n_rows;
    let p = schema.len();
    let age_idx = schema.entries.iter().position(|e| {
        matches!(e.distribution, Distribution::TruncatedNormal { .. })
    });

    let mut num: Vec<Vec<f64>> = vec![Vec::with_capacity(n); p];
    let mut cat: Vec<Vec<u32>> = vec![Vec::with_capacity(n); p];
    for row in 0..n {
        let mut rng = row_rng(config.seed, FEATURE_STREAM, row);
        let lat = Latents::draw(&mut rng);
        let mut age_years = f64::NAN;
        // Age first: Age_squared depends on it.
        let order = age_idx.into_iter().chain((0..p).filter(|&j| Some(j) != age_idx));
        for j in order {
            match draw_cell(&schema.entries[j], &lat, age_years, &mut rng) {
                Cell::Num(x) => {
                    if Some(j) == age_idx {
                        age_years = x;
                    }
                    num[j].push(x);
                }
                Cell::Cat(level) => cat[j].push(level),
            }
        }
    }

    // Standardized basis of every feature, for the linear signal.
    let basis = |j: usize| -> Vec<f64> {
        match schema.entries[j].kind {
            FeatureKind::Numerical => num[j].clone(),
            FeatureKind::Categorical => cat[j].iter().map(|&l| f64::from(l)).collect(),
        }
    };
    let mut coefficients = BTreeMap::new();
    let mut standardization = BTreeMap::new();
    let mut score = vec![config.intercept; n];
    for (name, coef) in &config.signal {
        let j = schema.index_of(name)?;
        let x = basis(j);
        let (m, sd) = (mean(&x), sample_sd(&x));
        *coefficients.entry(name.clone()).or_insert(0.0) += coef;
        standardization.insert(name.clone(), (m, sd));
        if sd > 0.0 {
            for (s, v) in score.iter_mut().zip(&x) {
                *s += coef * (v - m) / sd;
            }
        }
    }

    let mut mpl = Vec::with_capacity(n);
    let mut grq = Vec::with_capacity(n);
    for (row, s) in score.iter().enumerate() {
        let mut rng = row_rng(config.seed, TARGET_STREAM, row);
        let (e1, e2) = (normal(&mut rng), normal(&mut rng));
        mpl.push((s + config.noise_sd * e1).clamp(0.0, 10.0));
        grq.push((s + config.noise_sd * e2).clamp(0.0, 10.0).round());
    }

    let columns = schema
        .entries
        .iter()
        .enumerate()
        .map(|(j, def)| match def.kind {
            FeatureKind::Numerical => Column::numerical(&def.name, std::mem::take(&mut num[j])),
            FeatureKind::Categorical => Column::categorical(
                &def.name,
                cat[j].iter().map(|&l| level_label(l)).collect(),
            ),
        })
        .collect();
    let table = DataTable::new(
        n,
        columns,
        config.target.includes(TargetKind::MplAvgSafe).then_some(mpl),
        config.target.includes(TargetKind::RiskGrq).then_some(grq),
    )?;
    Ok((
        table,
        GroundTruth {
            intercept: config.intercept,
            coefficients,
            standardization,
        },
    ))
}

/// Masks cells completely at random with each feature's declared rate.
/// Features sharing a missing block are masked together within a row.
pub fn apply_missingness(table: &DataTable, schema: &FeatureSchema, seed: u64) -> Result<DataTable> {
    let mut out = table.clone();
    let plan: Vec<(usize, f64, Option<&str>)> = table
        .columns()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let def = schema
                .get(&c.name)
                .ok_or_else(|| Error::UnknownFeature(c.name.clone()))?;
            Ok((j, def.missing_rate, def.missing_block.as_deref()))
        })
        .collect::<Result<_>>()?;
    for row in 0..table.n_rows() {
        let mut rng = row_rng(seed, MISSING_STREAM, row);
        let mut blocks: BTreeMap<&str, bool> = BTreeMap::new();
        for &(j, rate, block) in &plan {
            let u: f64 = rng.random();
            let masked = match block {
                Some(b) => *blocks.entry(b).or_insert(u < rate),
                None => u < rate,
            };
            if masked {
                out.columns_mut()[j].mask(row);
            }
        }
    }
    Ok(out)
}
