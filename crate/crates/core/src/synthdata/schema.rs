//! The 66-predictor register feature dictionary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical,
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Personal,
    Household,
}

/// How the generator draws a feature's values. Parameters are configuration,
/// not contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Distribution {
    /// Age in years, normal truncated to `[low, high]`.
    TruncatedNormal { mean: f64, sd: f64, low: f64, high: f64 },
    /// `exp(mu + sigma * (loading * factor + sqrt(1 - loading²) * noise))`, rounded to
    /// whole euros; zero with probability `zero_prob`.
    LogNormal {
        factor: Factor,
        mu: f64,
        sigma: f64,
        loading: f64,
        zero_prob: f64,
    },
    /// Rank of the latent factor, 1..=100.
    Percentile { factor: Factor },
    /// Percentile rank bucketed into 10 levels.
    Decile { factor: Factor },
    /// Bounded share in `[0, 100]` driven by a latent factor.
    Share { factor: Factor },
    /// The square of the age column.
    AgeSquared,
    /// Skewed multinomial: level `k` has marginal weight `skew^k`, and `loading`
    /// shifts draws towards higher levels as the factor grows.
    Multinomial { factor: Factor, skew: f64, loading: f64 },
}

/// Latent per-row drivers shared by related features, giving the feature
/// matrix realistic correlation structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Age,
    Income,
    Wealth,
    Household,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub description: String,
    pub kind: FeatureKind,
    pub missing_rate: f64,
    /// Number of levels; categorical only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<u32>,
    pub group: FeatureGroup,
    pub distribution: Distribution,
    /// Features sharing a block id are masked together within a row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_block: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<FeatureDef>,
}

impl FeatureSchema {
    pub fn new(entries: Vec<FeatureDef>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if seen.insert(e.name.as_str(), i).is_some() {
                return Err(Error::validation("entries", format!("duplicate feature `{}`", e.name)));
            }
            if !(0.0..=1.0).contains(&e.missing_rate) {
                return Err(Error::validation(
                    format!("{}.missing_rate", e.name),
                    format!("{} outside [0, 1]", e.missing_rate),
                ));
            }
            match (e.kind, e.cardinality) {
                (FeatureKind::Categorical, Some(c)) if c >= 2 => {}
                (FeatureKind::Categorical, _) => {
                    return Err(Error::validation(
                        format!("{}.cardinality", e.name),
                        "categorical features need at least 2 levels",
                    ))
                }
                (FeatureKind::Numerical, None) => {}
                (FeatureKind::Numerical, Some(_)) => {
                    return Err(Error::validation(
                        format!("{}.cardinality", e.name),
                        "numerical features have no cardinality",
                    ))
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureDef> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn count(&self, kind: FeatureKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Mean of the declared per-feature missing rates.
    pub fn mean_missing_rate(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|e| e.missing_rate).sum::<f64>() / self.entries.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: FeatureSchema = serde_json::from_str(s)?;
        FeatureSchema::new(raw.entries)
    }
}

pub const AGE: &str = "LFTENQ2";
pub const AGE_SQUARED: &str = "Age_squared";
pub const PENSION_BLOCK: &str = "pension_contribution";
pub const CHILDREN_BLOCK: &str = "children";

use Distribution as D;
use FeatureGroup::{Household as H, Personal as P};

const LOW: f64 = 0.0014;
const NONE: f64 = 0.0;
const PENSION: f64 = 0.3627;
const CHILDREN: f64 = 0.3190;

fn cat(factor: Factor, skew: f64, loading: f64) -> D {
    D::Multinomial {
        factor,
        skew,
        loading,
    }
}

fn money(factor: Factor, mu: f64, sigma: f64, loading: f64, zero_prob: f64) -> D {
    D::LogNormal {
        factor,
        mu,
        sigma,
        loading,
        zero_prob,
    }
}

/// `(name, description, missing rate, group, cardinality or None, distribution, block)`
type Row = (
    &'static str,
    &'static str,
    f64,
    FeatureGroup,
    Option<u32>,
    D,
    Option<&'static str>,
);

fn rows() -> Vec<Row> {
    use Factor::*;
    let age = D::TruncatedNormal {
        mean: 44.0,
        sd: 11.0,
        low: 18.0,
        high: 67.0,
    };
    vec![
        ("LFTENQ2", "Age", LOW, P, None, age, None),
        ("MIGRATIEACHTERGROND", "Migration Background", LOW, P, Some(3), cat(Independent, 0.35, 0.0), None),
        ("TYPHH2", "House Hold Type", LOW, H, Some(6), cat(Household, 0.6, 0.6), None),
        ("PLHH2", "House Hold Position of Individual", LOW, H, Some(6), cat(Household, 0.6, 0.5), None),
        ("AANTALPERSHH2", "House Hold Size", LOW, H, Some(6), cat(Household, 0.7, 1.0), None),
        ("AANTALKINDHH2", "House Hold Amount of Children", LOW, H, Some(5), cat(Household, 0.6, 1.0), None),
        ("SBI2", "Sector (SBI) Employee", LOW, P, Some(9), cat(Independent, 0.8, 0.0), None),
        ("SMODELRAMINGPF2", "Pension Fund", LOW, P, Some(5), cat(Income, 0.5, 0.3), None),
        ("SMODELRAMINGPENSIOENPREMIEWG2", "Pension Contribution Employer", PENSION, P, None, money(Income, 8.0, 0.6, 0.5, 0.0), Some(PENSION_BLOCK)),
        ("SMODELRAMINGPENSIOENPREMIEWN2", "Pension Contribution Employee", PENSION, P, None, money(Income, 7.3, 0.6, 0.5, 0.0), Some(PENSION_BLOCK)),
        ("INPSECJ2019", "Occupation (Social-Economic Category)", NONE, P, Some(8), cat(Income, 0.7, 0.4), None),
        ("OCCUPATION2019", "Occupation 4 Categories", NONE, P, Some(4), cat(Independent, 0.6, 0.0), None),
        ("INPZELFSTANDIGEPL12019", "Occupation Publication Classification Self-Employed", NONE, P, Some(5), cat(Independent, 0.5, 0.0), None),
        ("INPTYPZLF2019", "Occupation Type of Self-Employed", NONE, P, Some(4), cat(Independent, 0.5, 0.0), None),
        ("SBISELFEMPLOYED2019", "Sector (SBI) All Types Self-Employed", NONE, P, Some(9), cat(Independent, 0.8, 0.0), None),
        ("INPPN700PEN2019", "Contribution Pension Employee (2nd pillar)", NONE, P, None, money(Income, 7.2, 0.5, 0.6, 0.25), None),
        ("INPPG710PEN2019", "Contribution Pension Employer (2nd pillar)", NONE, P, None, money(Income, 7.9, 0.5, 0.6, 0.25), None),
        ("INPPH770OUP2019", "Contribution Private Insurance Old Age (3rd pillar)", NONE, P, Some(4), cat(Income, 0.3, 0.5), None),
        ("INPPH570ZWP2019", "Contribution Private Insurance Incapacitation", NONE, P, Some(4), cat(Income, 0.3, 0.5), None),
        ("INPPINK2019", "Income Individual Personal Y/N", NONE, P, Some(2), cat(Income, 0.1, 0.3), None),
        ("INPPERSPRIM2019", "Income Individual Personal Primary", NONE, P, None, money(Income, 10.5, 0.35, 0.5, 0.0), None),
        ("INPPERSINK2019", "Income Individual Personal", LOW, P, None, money(Income, 10.3, 0.3, 0.5, 0.0), None),
        ("INPPERSBRUT2019", "Income Individual Personal Before-Tax", LOW, P, None, money(Income, 10.7, 0.3, 0.5, 0.0), None),
        ("TYPHH2019", "House Hold Type", LOW, H, Some(6), cat(Household, 0.6, 0.6), None),
        ("PLHH2019", "House Hold Position of Individual", LOW, H, Some(6), cat(Household, 0.6, 0.5), None),
        ("AANTALPERSHH2019", "House Hold Size", LOW, H, Some(6), cat(Household, 0.7, 1.0), None),
        ("AANTALKINDHH2019", "House Hold Amount of Children", LOW, H, Some(5), cat(Household, 0.6, 1.0), None),
        ("GBABURGSTNWKLASSE42019", "Marital Status 4 Categories", LOW, P, Some(4), cat(Household, 0.5, 0.7), None),
        ("VEHP100HVERM2019", "Wealth House Hold Percentiles", LOW, H, None, D::Percentile { factor: Wealth }, None),
        ("VEHP100HVERMKL12019", "Wealth House Hold Deciles", LOW, H, Some(10), D::Decile { factor: Wealth }, None),
        ("VEHWVEREXEWH2019", "Wealth House Hold Total Excluding House", LOW, H, None, money(Wealth, 10.0, 0.8, 0.9, 0.0), None),
        ("VEHW1000VERH2019", "Wealth House Hold Total (1)", LOW, H, None, money(Wealth, 11.5, 0.7, 1.0, 0.0), None),
        ("VEHW1100BEZH2019", "Wealth House Hold Posessions (1.1)", LOW, H, None, money(Wealth, 12.2, 0.6, 0.9, 0.0), None),
        ("VEHW1110FINH2019", "Wealth House Hold Financial Possessions (1.1.1)", LOW, H, None, money(Wealth, 10.2, 0.8, 0.9, 0.0), None),
        ("VEHW1111BANH2019", "Wealth House Hold Bank and Saving Balance (1.1.1.1)", LOW, H, None, money(Wealth, 9.8, 0.55, 0.5, 0.0), None),
        ("VEHW1112EFFH2019", "Wealth House Hold Securities (1.1.1.2)", LOW, H, None, money(Wealth, 9.0, 1.0, 0.8, 0.55), None),
        ("SECURITIESPERC2019", "Securities % of liquid wealth", LOW, H, None, D::Share { factor: Wealth }, None),
        ("VEHW1120ONRH2019", "Wealth House Hold Real Estate (1.1.2)", LOW, H, None, money(Wealth, 12.3, 0.5, 0.7, 0.35), None),
        ("VEHW1121WONH2019", "Wealth House Hold House (1.1.2.1)", LOW, H, None, money(Wealth, 12.2, 0.5, 0.7, 0.35), None),
        ("VEHW1122OGOH2019", "Wealth House Hold Other Real Estate (1.1.2.2)", LOW, H, None, money(Wealth, 11.0, 0.8, 0.6, 0.9), None),
        ("VEHW1130ONDH2019", "Wealth House Hold Entrepreneurial Capacity (1.1.3)", LOW, H, None, money(Wealth, 10.0, 1.0, 0.6, 0.8), None),
        ("VEHW1140ABEH2019", "Wealth House Hold Aanmerkelijk Belang (1.1.4)", LOW, H, Some(3), cat(Wealth, 0.1, 0.8), None),
        ("VEHW1150OVEH2019", "Wealth House Hold Other Possessions (1.1.5)", LOW, H, None, money(Wealth, 8.5, 0.8, 0.4, 0.3), None),
        ("VEHW1200STOH2019", "Debt House Hold total (1.2)", LOW, H, None, money(Wealth, 11.8, 0.6, 0.5, 0.2), None),
        ("VEHW1210SHYH2019", "Debt House Hold Mortgage (1.2.1)", LOW, H, None, money(Wealth, 11.9, 0.5, 0.5, 0.35), None),
        ("VEHW1220SSTH2019", "Debt House Hold Study (1.2.2)", LOW, H, None, money(Age, 9.5, 0.6, -0.6, 0.8), None),
        ("VEHW1230SOVH2019", "Debt House Hold Other (1.2.3)", LOW, H, None, money(Independent, 8.5, 1.0, 0.0, 0.6), None),
        ("INHEHALGR2019", "House Hold Homeowner", LOW, H, Some(3), cat(Wealth, 0.5, 1.0), None),
        ("INHP100HGEST2019", "Income House Hold Standardized Spendable Percentiles", LOW, H, None, D::Percentile { factor: Income }, None),
        ("INHP100HGESTKL12019", "Income House Hold Standardized Spendable Deciles", LOW, H, Some(10), D::Decile { factor: Income }, None),
        ("INHGESTINKH2019", "Income House Hold Standardized Spendable", LOW, H, None, money(Income, 10.4, 0.3, 0.6, 0.0), None),
        ("OPLNIVSOI2016AGG1HBMETNIRWO2019", "Education Level 3 Categories", LOW, P, Some(3), cat(Income, 0.3, 0.8), None),
        ("INPPOSHHK2019", "Position in household towards main breadwinner", LOW, H, Some(4), cat(Household, 0.5, 0.4), None),
        ("INHBBIHJ2019", "Main source of household income", LOW, H, Some(5), cat(Income, 0.4, -0.4), None),
        ("NRCHILDREN2019", "Number of Children", LOW, P, Some(6), cat(Household, 0.6, 1.0), None),
        ("NRCHILDRENSAMEADRS2019", "Number of Children at Same Address as Individual", CHILDREN, P, Some(5), cat(Household, 0.6, 1.0), Some(CHILDREN_BLOCK)),
        ("NRCHILDRENCOPARENTADRS2019", "Number of Children at Same Address as Co-Parent", CHILDREN, P, Some(5), cat(Household, 0.6, 0.8), Some(CHILDREN_BLOCK)),
        ("DEADBORN2019", "Indicates Whether Child(ren) Was(Were) Deadborn", CHILDREN, P, Some(2), cat(Independent, 0.05, 0.0), Some(CHILDREN_BLOCK)),
        ("NRCOPARENTS2019", "Amount of People the Individual had Children With", CHILDREN, P, Some(4), cat(Household, 0.2, 0.4), Some(CHILDREN_BLOCK)),
        ("LASTCOPARENTSAMEADRS2019", "Indicates Whether Last Co-Parent at Same Address as Individual", CHILDREN, P, Some(2), cat(Household, 0.7, 0.6), Some(CHILDREN_BLOCK)),
        ("Age_squared", "Squared value of the age", LOW, P, None, D::AgeSquared, None),
        ("GBAGESLACHT", "Sex", NONE, P, Some(2), cat(Independent, 0.95, 0.0), None),
        ("MAINBREADWINNER2019", "Main Breadwinner", NONE, H, Some(2), cat(Income, 0.8, 0.8), None),
        ("SECURITIESBIN2019", "Indicates whether household has securities", NONE, H, Some(2), cat(Wealth, 0.5, 1.2), None),
        ("HOMEOWNER2019_", "Home owner", NONE, H, Some(2), cat(Wealth, 0.7, 1.0), None),
        ("CHILDBIN2019", "Number of children born", NONE, P, Some(2), cat(Household, 0.6, 1.0), None),
    ]
}

/// The register dictionary: 65 register features plus the derived
/// `Age_squared`, with per-feature missing rates.
pub fn register_schema() -> FeatureSchema {
    let entries = rows()
        .into_iter()
        .map(|(name, description, missing_rate, group, cardinality, distribution, block)| {
            FeatureDef {
                name: name.to_string(),
                description: description.to_string(),
                kind: if cardinality.is_some() {
                    FeatureKind::Categorical
                } else {
                    FeatureKind::Numerical
                },
                missing_rate,
                cardinality,
                group,
                distribution,
                missing_block: block.map(str::to_string),
            }
        })
        .collect();
    FeatureSchema::new(entries).expect("register dictionary is valid")
}
