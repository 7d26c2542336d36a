//! The five built-in multiple price lists.
//!
//! Probabilities are in hundredths and amounts in whole euros, exactly as
//! printed. Option A is the safe option in every list.

use super::{Lottery, MplRow, MplTask, MoneyAmount, Probability};

/// Two-outcome lottery from `(percent, euros)` pairs.
fn lottery(outcomes: &[(i64, u64)]) -> Lottery {
    let outcomes = outcomes
        .iter()
        .map(|&(pct, eur)| (Probability::new(pct, 100), MoneyAmount::from_euros(eur)))
        .collect();
    Lottery::new(outcomes).expect("built-in lottery is well formed")
}

fn task(id: u32, rows: Vec<(Lottery, Lottery)>) -> MplTask {
    let rows = rows
        .into_iter()
        .map(|(option_a, option_b)| MplRow { option_a, option_b })
        .collect();
    MplTask::new(id, rows).expect("built-in task has ten rows")
}

/// Variation 1: the probability of the high payoff rises by 10 points per row.
fn mpl1() -> MplTask {
    let rows = (1..=10)
        .map(|i| {
            let hi = 10 * i;
            (
                lottery(&[(hi, 80), (100 - hi, 64)]),
                lottery(&[(hi, 154), (100 - hi, 4)]),
            )
        })
        .collect();
    task(1, rows)
}

fn mpl2() -> MplTask {
    let rows = (1..=10)
        .map(|i| {
            let hi = 10 * i;
            (
                lottery(&[(hi, 99), (100 - hi, 41)]),
                lottery(&[(hi, 134), (100 - hi, 19)]),
            )
        })
        .collect();
    task(2, rows)
}

/// Variation 3: a rising certain amount against a fixed 50/50 lottery.
fn mpl3() -> MplTask {
    const CERTAIN: [u64; 10] = [52, 57, 63, 68, 73, 78, 82, 88, 94, 101];
    let rows = CERTAIN
        .iter()
        .map(|&eur| (lottery(&[(100, eur)]), lottery(&[(50, 30), (50, 130)])))
        .collect();
    task(3, rows)
}

fn mpl4() -> MplTask {
    const CERTAIN: [u64; 10] = [39, 46, 56, 64, 70, 75, 79, 84, 88, 93];
    let rows = CERTAIN
        .iter()
        .map(|&eur| (lottery(&[(100, eur)]), lottery(&[(33, 20), (67, 110)])))
        .collect();
    task(4, rows)
}

/// Variation 5: fixed 50/50 safe lottery against a rising high payoff.
fn mpl5() -> MplTask {
    const HIGH: [u64; 10] = [103, 109, 115, 122, 128, 131, 138, 153, 170, 186];
    let rows = HIGH
        .iter()
        .map(|&eur| {
            (
                lottery(&[(50, 90), (50, 70)]),
                lottery(&[(50, eur), (50, 35)]),
            )
        })
        .collect();
    task(5, rows)
}

pub(super) fn all() -> Vec<MplTask> {
    vec![mpl1(), mpl2(), mpl3(), mpl4(), mpl5()]
}
