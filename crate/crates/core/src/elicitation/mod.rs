//! Multiple-price-list (MPL) tasks and the Likert risk battery.
//!
//! Money is held in integer euro-cents and probabilities as exact rationals,
//! so every expected value is computed without rounding. A participant's
//! risk measure is the mean number of safe (option A) choices across the
//! five built-in lists.

mod likert;
mod tasks;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use likert::{
    likert_battery, record_likert, LikertAnswers, LikertBattery, LikertItem, LikertQuestion,
    LikertRecord, LikertResponse, SCALE_MAX, SCALE_MIN,
};

/// Exact probability.
pub type Probability = Ratio<i64>;

/// Number of rows in every MPL.
pub const ROWS_PER_TASK: usize = 10;
/// Number of built-in MPLs.
pub const TASK_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MoneyAmount {
    cents: u64,
}

impl MoneyAmount {
    pub const fn from_cents(cents: u64) -> Self {
        Self { cents }
    }

    pub const fn from_euros(euros: u64) -> Self {
        Self { cents: euros * 100 }
    }

    pub fn cents(self) -> u64 {
        self.cents
    }

    /// Exact value in euros.
    pub fn euros(self) -> Ratio<i64> {
        Ratio::new(self.cents as i64, 100)
    }
}

impl fmt::Display for MoneyAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (eur, ct) = (self.cents / 100, self.cents % 100);
        if ct == 0 {
            write!(f, "€{eur}")
        } else {
            write!(f, "€{eur}.{ct:02}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub probability: Probability,
    pub payoff: MoneyAmount,
}

/// A lottery with one or two outcomes whose probabilities sum to exactly one.
///
/// Zero-probability outcomes are dropped on construction, so the certain
/// final row of a list (`1 → €80, 0 → €64`) is stored as `{1 → €80}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lottery {
    outcomes: Vec<Outcome>,
}

impl Lottery {
    pub fn new(outcomes: Vec<(Probability, MoneyAmount)>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() > 2 {
            return Err(Error::validation(
                "outcomes",
                format!("expected 1 or 2 outcomes, got {}", outcomes.len()),
            ));
        }
        let zero = Probability::from_integer(0);
        let one = Probability::from_integer(1);
        let mut total = zero;
        for (p, _) in &outcomes {
            if *p < zero || *p > one {
                return Err(Error::validation("probability", format!("{p} outside [0, 1]")));
            }
            total += *p;
        }
        if total != one {
            return Err(Error::validation(
                "probability",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        let outcomes = outcomes
            .into_iter()
            .filter(|(p, _)| *p != zero)
            .map(|(probability, payoff)| Outcome {
                probability,
                payoff,
            })
            .collect();
        Ok(Self { outcomes })
    }

    pub fn certain(payoff: MoneyAmount) -> Self {
        Self {
            outcomes: vec![Outcome {
                probability: Probability::from_integer(1),
                payoff,
            }],
        }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn worst(&self) -> MoneyAmount {
        self.outcomes.iter().map(|o| o.payoff).min().expect("non-empty")
    }

    pub fn best(&self) -> MoneyAmount {
        self.outcomes.iter().map(|o| o.payoff).max().expect("non-empty")
    }

    /// P(payoff <= x).
    fn cdf(&self, x: MoneyAmount) -> Probability {
        self.outcomes
            .iter()
            .filter(|o| o.payoff <= x)
            .map(|o| o.probability)
            .sum()
    }
}

/// Σ probability · payoff, exactly, in euros.
pub fn expected_value(lottery: &Lottery) -> Ratio<i64> {
    lottery
        .outcomes
        .iter()
        .map(|o| o.probability * o.payoff.euros())
        .sum()
}

/// Whether `a` strictly first-order stochastically dominates `b`.
pub fn stochastically_dominates(a: &Lottery, b: &Lottery) -> bool {
    let support: BTreeSet<MoneyAmount> = a
        .outcomes
        .iter()
        .chain(&b.outcomes)
        .map(|o| o.payoff)
        .collect();
    let mut strict = false;
    for x in support {
        let (fa, fb) = (a.cdf(x), b.cdf(x));
        if fa > fb {
            return false;
        }
        strict |= fa < fb;
    }
    strict
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MplRow {
    /// The safe option.
    pub option_a: Lottery,
    pub option_b: Lottery,
}

impl MplRow {
    pub fn option(&self, choice: Choice) -> &Lottery {
        match choice {
            Choice::A => &self.option_a,
            Choice::B => &self.option_b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MplTask {
    id: u32,
    rows: Vec<MplRow>,
}

impl MplTask {
    pub fn new(id: u32, rows: Vec<MplRow>) -> Result<Self> {
        if rows.len() != ROWS_PER_TASK {
            return Err(Error::validation(
                "rows",
                format!("expected {ROWS_PER_TASK} rows, got {}", rows.len()),
            ));
        }
        Ok(Self { id, rows })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn rows(&self) -> &[MplRow] {
        &self.rows
    }
}

/// The five built-in lists, ids 1 through 5.
pub fn builtin_tasks() -> &'static [MplTask] {
    static TASKS: OnceLock<Vec<MplTask>> = OnceLock::new();
    TASKS.get_or_init(tasks::all)
}

pub fn task(id: u32) -> Result<&'static MplTask> {
    builtin_tasks()
        .iter()
        .find(|t| t.id == id)
        .ok_or(Error::UnknownTask(id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn is_safe(self) -> bool {
        self == Choice::A
    }
}

/// One participant's ten choices on one list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSheet", into = "RawSheet")]
pub struct ChoiceSheet {
    task_id: u32,
    choices: [Choice; ROWS_PER_TASK],
}

#[derive(Serialize, Deserialize)]
struct RawSheet {
    task_id: u32,
    choices: Vec<Choice>,
}

impl TryFrom<RawSheet> for ChoiceSheet {
    type Error = Error;
    fn try_from(raw: RawSheet) -> Result<Self> {
        ChoiceSheet::new(raw.task_id, raw.choices)
    }
}

impl From<ChoiceSheet> for RawSheet {
    fn from(sheet: ChoiceSheet) -> Self {
        RawSheet {
            task_id: sheet.task_id,
            choices: sheet.choices.to_vec(),
        }
    }
}

impl ChoiceSheet {
    pub fn new(task_id: u32, choices: Vec<Choice>) -> Result<Self> {
        let len = choices.len();
        let choices: [Choice; ROWS_PER_TASK] = choices.try_into().map_err(|_| {
            Error::validation("choices", format!("expected {ROWS_PER_TASK} choices, got {len}"))
        })?;
        Ok(Self { task_id, choices })
    }

    pub fn uniform(task_id: u32, choice: Choice) -> Self {
        Self {
            task_id,
            choices: [choice; ROWS_PER_TASK],
        }
    }

    pub fn task_id(&self) -> u32 {
        self.task_id
    }

    pub fn choices(&self) -> &[Choice; ROWS_PER_TASK] {
        &self.choices
    }
}

/// Parses compact sheets such as `"1:AAAABBBBBB"`.
impl FromStr for ChoiceSheet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (id, letters) = s
            .split_once(':')
            .ok_or_else(|| Error::validation("sheet", "expected `<task id>:<ten letters>`"))?;
        let task_id = id
            .trim()
            .parse()
            .map_err(|_| Error::validation("task_id", format!("`{id}` is not a task id")))?;
        let choices = letters
            .trim()
            .chars()
            .enumerate()
            .map(|(i, c)| match c.to_ascii_uppercase() {
                'A' => Ok(Choice::A),
                'B' => Ok(Choice::B),
                other => Err(Error::validation(
                    format!("choices[{i}]"),
                    format!("`{other}` is not A or B"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        ChoiceSheet::new(task_id, choices)
    }
}

/// Number of safe choices on a sheet.
pub fn count_safe(sheet: &ChoiceSheet) -> Result<u8> {
    task(sheet.task_id)?;
    Ok(sheet.choices.iter().filter(|c| c.is_safe()).count() as u8)
}

/// Mean safe count over exactly one sheet per built-in task.
pub fn avg_safe(sheets: &[ChoiceSheet]) -> Result<f64> {
    let mut seen = BTreeSet::new();
    for sheet in sheets {
        task(sheet.task_id)?;
        if !seen.insert(sheet.task_id) {
            return Err(Error::validation(
                "sheets",
                format!("duplicate sheet for task {}", sheet.task_id),
            ));
        }
    }
    if seen.len() != TASK_COUNT {
        let missing: Vec<_> = builtin_tasks()
            .iter()
            .map(MplTask::id)
            .filter(|id| !seen.contains(id))
            .collect();
        return Err(Error::validation(
            "sheets",
            format!("missing sheets for tasks {missing:?}"),
        ));
    }
    let total: u32 = sheets
        .iter()
        .map(|s| count_safe(s).map(u32::from))
        .sum::<Result<u32>>()?;
    Ok(f64::from(total) / TASK_COUNT as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub switch_count: u32,
    pub multiple_switch: bool,
    /// Zero-based indices of rows where the chosen option is dominated.
    pub dominated_choices: Vec<usize>,
}

/// Switching and dominance diagnostics. Advisory only: scoring ignores them.
pub fn consistency(sheet: &ChoiceSheet) -> Result<ConsistencyReport> {
    let task = task(sheet.task_id)?;
    let switch_count = sheet
        .choices
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count() as u32;
    let dominated_choices = task
        .rows
        .iter()
        .zip(&sheet.choices)
        .enumerate()
        .filter(|(_, (row, &choice))| {
            let chosen = row.option(choice);
            let other = row.option(match choice {
                Choice::A => Choice::B,
                Choice::B => Choice::A,
            });
            chosen.worst() < other.best() && stochastically_dominates(other, chosen)
        })
        .map(|(i, _)| i)
        .collect();
    Ok(ConsistencyReport {
        switch_count,
        multiple_switch: switch_count > 1,
        dominated_choices,
    })
}

/// The two target measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasures {
    pub mpl_avg_safe: f64,
    pub risk_grq: Option<u8>,
}

impl RiskMeasures {
    pub fn score(sheets: &[ChoiceSheet], likert: Option<&LikertRecord>) -> Result<Self> {
        Ok(Self {
            mpl_avg_safe: avg_safe(sheets)?,
            risk_grq: likert.map(|l| l.risk_grq),
        })
    }
}

#[derive(Serialize)]
struct OutcomeDoc {
    prob_num: i64,
    prob_den: i64,
    cents: u64,
}

#[derive(Serialize)]
struct RowDoc {
    option_a: Vec<OutcomeDoc>,
    option_b: Vec<OutcomeDoc>,
}

#[derive(Serialize)]
struct TaskDoc {
    id: u32,
    rows: Vec<RowDoc>,
}

#[derive(Serialize)]
struct TasksDoc {
    tasks: Vec<TaskDoc>,
}

fn outcome_docs(l: &Lottery) -> Vec<OutcomeDoc> {
    l.outcomes
        .iter()
        .map(|o| OutcomeDoc {
            prob_num: *o.probability.numer(),
            prob_den: *o.probability.denom(),
            cents: o.payoff.cents(),
        })
        .collect()
}

/// Canonical JSON document of the built-in tasks. Field and element order
/// are fixed, so the output is byte-stable.
pub fn tasks_json() -> String {
    let doc = TasksDoc {
        tasks: builtin_tasks()
            .iter()
            .map(|t| TaskDoc {
                id: t.id,
                rows: t
                    .rows
                    .iter()
                    .map(|r| RowDoc {
                        option_a: outcome_docs(&r.option_a),
                        option_b: outcome_docs(&r.option_b),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("task document serializes");
    s.push('\n');
    s
}
