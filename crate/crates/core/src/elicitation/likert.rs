//! The 11-point self-reported risk battery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCALE_MIN: u8 = 0;
pub const SCALE_MAX: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikertQuestion {
    General,
    Occupation,
    Health,
    PersonalFinances,
    JobFinances,
}

impl LikertQuestion {
    pub const ALL: [LikertQuestion; 5] = [
        LikertQuestion::General,
        LikertQuestion::Occupation,
        LikertQuestion::Health,
        LikertQuestion::PersonalFinances,
        LikertQuestion::JobFinances,
    ];

    pub fn key(self) -> &'static str {
        match self {
            LikertQuestion::General => "general",
            LikertQuestion::Occupation => "occupation",
            LikertQuestion::Health => "health",
            LikertQuestion::PersonalFinances => "personal_finances",
            LikertQuestion::JobFinances => "job_finances",
        }
    }

    pub fn allows_not_applicable(self) -> bool {
        self == LikertQuestion::Health
    }
}

/// One entry of the battery as shown to a participant. The domain preamble
/// is an entry without a question id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LikertItem {
    pub question: Option<LikertQuestion>,
    pub label: &'static str,
    pub text: &'static str,
    pub allows_not_applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LikertBattery {
    pub scale_min_label: &'static str,
    pub scale_max_label: &'static str,
    pub items: Vec<LikertItem>,
}

pub fn likert_battery() -> LikertBattery {
    let item = |question, label, text| LikertItem {
        question,
        label,
        text,
        allows_not_applicable: question.is_some_and(LikertQuestion::allows_not_applicable),
    };
    LikertBattery {
        scale_min_label: "not at all willing to take risks",
        scale_max_label: "very willing to take risks",
        items: vec![
            item(
                Some(LikertQuestion::General),
                "General",
                "Can you tell me to what extent you are, in general, willing or unwilling are to take risks?",
            ),
            item(
                None,
                "Domain-Specific",
                "People can behave differently in different situations. How do you assess your willingness to take risks in the following matters:",
            ),
            item(Some(LikertQuestion::Occupation), "Occupation", "… in your career choice?"),
            item(Some(LikertQuestion::Health), "Health", "… in your health?"),
            item(
                Some(LikertQuestion::PersonalFinances),
                "Personal Finances",
                "… in your personal financial affairs?",
            ),
            item(
                Some(LikertQuestion::JobFinances),
                "Job finances",
                "… in your work-related financial matters?",
            ),
        ],
    }
}

/// A raw answer before validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LikertResponse {
    Value(i64),
    NotApplicable(NotApplicable),
}

/// Serialized as the string `"NA"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NotApplicable {
    #[serde(rename = "NA")]
    Na,
}

impl LikertResponse {
    pub const NA: LikertResponse = LikertResponse::NotApplicable(NotApplicable::Na);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertAnswers {
    pub general: LikertResponse,
    pub occupation: LikertResponse,
    pub health: LikertResponse,
    pub personal_finances: LikertResponse,
    pub job_finances: LikertResponse,
}

impl LikertAnswers {
    /// Same numeric answer to every question.
    pub fn uniform(value: i64) -> Self {
        let v = LikertResponse::Value(value);
        Self {
            general: v,
            occupation: v,
            health: v,
            personal_finances: v,
            job_finances: v,
        }
    }

    fn get(&self, q: LikertQuestion) -> LikertResponse {
        match q {
            LikertQuestion::General => self.general,
            LikertQuestion::Occupation => self.occupation,
            LikertQuestion::Health => self.health,
            LikertQuestion::PersonalFinances => self.personal_finances,
            LikertQuestion::JobFinances => self.job_finances,
        }
    }
}

/// Validated battery answers. `risk_grq` is the general-domain answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertRecord {
    pub risk_grq: u8,
    pub occupation: u8,
    pub health: Option<u8>,
    pub personal_finances: u8,
    pub job_finances: u8,
}

fn validate(q: LikertQuestion, r: LikertResponse) -> Result<Option<u8>> {
    match r {
        LikertResponse::Value(v) if (i64::from(SCALE_MIN)..=i64::from(SCALE_MAX)).contains(&v) => {
            Ok(Some(v as u8))
        }
        LikertResponse::Value(v) => Err(Error::validation(
            q.key(),
            format!("{v} outside the {SCALE_MIN}..={SCALE_MAX} scale"),
        )),
        LikertResponse::NotApplicable(_) if q.allows_not_applicable() => Ok(None),
        LikertResponse::NotApplicable(_) => {
            Err(Error::validation(q.key(), "\"not applicable\" is not allowed"))
        }
    }
}

pub fn record_likert(answers: &LikertAnswers) -> Result<LikertRecord> {
    let required = |q| {
        validate(q, answers.get(q)).map(|v| v.expect("only health may be not applicable"))
    };
    Ok(LikertRecord {
        risk_grq: required(LikertQuestion::General)?,
        occupation: required(LikertQuestion::Occupation)?,
        health: validate(LikertQuestion::Health, answers.health)?,
        personal_finances: required(LikertQuestion::PersonalFinances)?,
        job_finances: required(LikertQuestion::JobFinances)?,
    })
}
