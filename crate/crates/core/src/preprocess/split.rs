//! Stratified train/test splitting and k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthdata::{DataTable, TargetKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test_fraction: f64,
    /// Equal-frequency target bins used as strata.
    pub strata_bins: usize,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(seed: u64) -> Self {
        Self {
            test_fraction: 0.2,
            strata_bins: 10,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// False when the target was constant and a plain random split was used.
    pub stratified: bool,
}

pub fn stratified_split_indices(target: &[f64], plan: &SplitPlan) -> Result<SplitIndices> {
    let n = target.len();
    if !(plan.test_fraction > 0.0 && plan.test_fraction < 1.0) {
        return Err(Error::validation("test_fraction", "must lie strictly between 0 and 1"));
    }
    if plan.strata_bins == 0 {
        return Err(Error::validation("strata_bins", "must be at least 1"));
    }
    if n < plan.strata_bins {
        return Err(Error::validation(
            "rows",
            format!("{n} rows cannot fill {} strata", plan.strata_bins),
        ));
    }
    let n_test = (n as f64 * plan.test_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);

    let constant = target.iter().all(|&v| v == target[0]);
    let mut test = Vec::with_capacity(n_test);
    if constant {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..n_test]);
    } else {
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&a, &b| target[a].total_cmp(&target[b]).then(a.cmp(&b)));
        let bins = plan.strata_bins;
        let mut strata: Vec<Vec<usize>> = vec![Vec::new(); bins];
        for (rank, &row) in ranked.iter().enumerate() {
            strata[rank * bins / n].push(row);
        }
        // Largest-remainder allocation of the test rows across strata.
        let exact: Vec<f64> = strata.iter().map(|s| s.len() as f64 * n_test as f64 / n as f64).collect();
        let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
        let mut by_remainder: Vec<usize> = (0..bins).collect();
        by_remainder.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
        let short = n_test - quota.iter().sum::<usize>();
        for &b in by_remainder.iter().take(short) {
            quota[b] += 1;
        }
        for (stratum, q) in strata.iter_mut().zip(quota) {
            stratum.shuffle(&mut rng);
            test.extend_from_slice(&stratum[..q]);
        }
    }
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    Ok(SplitIndices {
        train: (0..n).filter(|&i| !in_test[i]).collect(),
        test,
        stratified: !constant,
    })
}

/// Splits `table` into (train, test), stratifying on `target`.
pub fn stratified_split(table: &DataTable, target: TargetKind, plan: &SplitPlan) -> Result<(DataTable, DataTable, SplitIndices)> {
    let idx = stratified_split_indices(table.require_target(target)?, plan)?;
    Ok((table.select_rows(&idx.train), table.select_rows(&idx.test), idx))
}

/// `k` disjoint validation folds covering `0..n`; sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::validation("k", "at least two folds are required"));
    }
    if k > n {
        return Err(Error::validation("k", format!("{k} folds exceed {n} rows")));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = rows[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn is_partition(parts: &[&[usize]], n: usize) -> bool {
        let mut seen = vec![false; n];
        for part in parts {
            for &i in *part {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn test_size() {
        let y: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let s = stratified_split_indices(&y, &SplitPlan::new(3)).unwrap();
        assert_eq!(s.test.len(), 20);
        assert_eq!(s.train.len(), 80);
        assert!(s.stratified);
    }

    #[test]
    fn constant_target_falls_back() {
        let s = stratified_split_indices(&[4.0; 50], &SplitPlan::new(1)).unwrap();
        assert!(!s.stratified);
        assert_eq!(s.test.len(), 10);
        assert!(is_partition(&[&s.train, &s.test], 50));
    }

    #[test]
    fn invalid_plans() {
        let y = [1.0, 2.0, 3.0];
        for plan in [
            SplitPlan { test_fraction: 0.0, ..SplitPlan::new(0) },
            SplitPlan { test_fraction: 1.0, ..SplitPlan::new(0) },
            SplitPlan { strata_bins: 0, ..SplitPlan::new(0) },
            SplitPlan::new(0),
        ] {
            assert!(stratified_split_indices(&y, &plan).is_err());
        }
    }

    #[test]
    fn stratification_balances_target_means() {
        // Skewed target: stratified splits should track the mean better than plain shuffles.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let y: Vec<f64> = (0..200).map(|_| rng.random::<f64>().powi(4) * 10.0).collect();
        let gap = |train: &[usize], test: &[usize]| {
            let m = |ix: &[usize]| ix.iter().map(|&i| y[i]).sum::<f64>() / ix.len() as f64;
            (m(train) - m(test)).abs()
        };
        let (mut strat, mut plain) = (0.0, 0.0);
        for seed in 0..100 {
            let s = stratified_split_indices(&y, &SplitPlan::new(seed)).unwrap();
            strat += gap(&s.train, &s.test);
            let mut rows: Vec<usize> = (0..200).collect();
            rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1000));
            plain += gap(&rows[40..], &rows[..40]);
        }
        assert!(strat < plain, "stratified {strat} vs plain {plain}");
    }

    #[test]
    fn fold_examples() {
        let singletons = kfold_indices(10, 10, 0).unwrap();
        assert!(singletons.iter().all(|f| f.len() == 1));
        let folds = kfold_indices(103, 10, 5).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 11).count(), 3);
        assert_eq!(sizes.iter().filter(|&&s| s == 10).count(), 7);
        assert_eq!(folds, kfold_indices(103, 10, 5).unwrap());
        assert!(kfold_indices(3, 4, 0).is_err());
        assert!(kfold_indices(3, 1, 0).is_err());
    }

    #[test]
    fn exhaustive_small_partitions() {
        for n in 1..=12 {
            for k in 2..=4.min(n) {
                for seed in 0..5 {
                    let folds = kfold_indices(n, k, seed).unwrap();
                    let parts: Vec<&[usize]> = folds.iter().map(Vec::as_slice).collect();
                    assert!(is_partition(&parts, n));
                    let max = folds.iter().map(Vec::len).max().unwrap();
                    let min = folds.iter().map(Vec::len).min().unwrap();
                    assert!(max - min <= 1);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn split_partitions_rows(y in prop::collection::vec(0.0..10.0f64, 10..200), seed in any::<u64>(), frac in 0.05..0.95f64) {
            let plan = SplitPlan { test_fraction: frac, strata_bins: 10, seed };
            let s = stratified_split_indices(&y, &plan).unwrap();
            prop_assert!(is_partition(&[&s.train, &s.test], y.len()));
            prop_assert_eq!(s.test.len(), (y.len() as f64 * frac).round() as usize);
        }
    }
}
