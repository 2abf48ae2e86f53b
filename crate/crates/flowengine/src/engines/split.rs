//! Split engines: seeded holdout and k-fold partition plans.

use crate::error::{FlowError, Result, Violation};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldIndices {
    pub train_idx: Vec<u32>,
    pub test_idx: Vec<u32>,
}

/// A complete partition plan: one or more folds, each a disjoint
/// train/test covering of the row set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub folds: Vec<FoldIndices>,
    pub method: String,
    pub seed_used: u64,
}

impl SplitPlan {
    /// Check every plan invariant against a base row count. For k-fold
    /// plans the test sets must additionally tile the row set with sizes
    /// differing by at most one.
    pub fn violations(&self, n_rows: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.folds.is_empty() {
            out.push(Violation::new("split", "plan has no folds"));
            return out;
        }
        for (i, fold) in self.folds.iter().enumerate() {
            let subject = format!("split fold {i}");
            let mut seen = vec![0u8; n_rows];
            let mut in_range = true;
            for &idx in fold.train_idx.iter().chain(&fold.test_idx) {
                if idx as usize >= n_rows {
                    out.push(Violation::new(&subject, format!("index {idx} out of range")));
                    in_range = false;
                    break;
                }
                seen[idx as usize] += 1;
            }
            if !in_range {
                continue;
            }
            if seen.iter().any(|&c| c > 1) {
                out.push(Violation::new(&subject, "train and test indices overlap or repeat"));
            }
            if seen.iter().any(|&c| c == 0) {
                out.push(Violation::new(
                    &subject,
                    "train and test indices do not cover every row",
                ));
            }
        }
        if self.method == "kfold" && self.folds.len() > 1 {
            let mut covered = vec![0u8; n_rows];
            for fold in &self.folds {
                for &idx in &fold.test_idx {
                    if (idx as usize) < n_rows {
                        covered[idx as usize] += 1;
                    }
                }
            }
            if covered.iter().any(|&c| c != 1) {
                out.push(Violation::new(
                    "split",
                    "k-fold test sets must partition the row set",
                ));
            }
            let sizes: Vec<usize> = self.folds.iter().map(|f| f.test_idx.len()).collect();
            let min = *sizes.iter().min().unwrap();
            let max = *sizes.iter().max().unwrap();
            if max - min > 1 {
                out.push(Violation::new(
                    "split",
                    format!("k-fold test sizes {sizes:?} differ by more than 1"),
                ));
            }
        }
        out
    }
}

/// Single holdout split: test size = round(test_fraction * n), rows chosen
/// by a seeded Fisher-Yates shuffle. Deterministic in (n, fraction, seed).
pub fn split_holdout(n_rows: usize, test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(FlowError::Params(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    if n_rows < 2 {
        return Err(FlowError::Params(format!(
            "holdout split needs at least 2 rows, got {n_rows}"
        )));
    }
    let n_test = (test_fraction * n_rows as f64).round() as usize;
    if n_test == 0 || n_test == n_rows {
        return Err(FlowError::Params(format!(
            "test_fraction {test_fraction} of {n_rows} rows leaves an empty partition"
        )));
    }
    let deck = shuffled_deck(n_rows, seed);
    let mut test_idx: Vec<u32> = deck[..n_test].to_vec();
    let mut train_idx: Vec<u32> = deck[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok(SplitPlan {
        folds: vec![FoldIndices { train_idx, test_idx }],
        method: "holdout".to_string(),
        seed_used: seed,
    })
}

/// k-fold plan: seeded shuffle, then round-robin assignment, so the first
/// n mod k folds hold the larger test sets.
pub fn split_kfold(n_rows: usize, k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(FlowError::Params(format!("k must be at least 2, got {k}")));
    }
    if k > n_rows {
        return Err(FlowError::Params(format!(
            "k = {k} exceeds the number of rows {n_rows}"
        )));
    }
    let deck = shuffled_deck(n_rows, seed);
    let mut test_sets: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (pos, &row) in deck.iter().enumerate() {
        test_sets[pos % k].push(row);
    }
    let folds = test_sets
        .into_iter()
        .map(|mut test_idx| {
            test_idx.sort_unstable();
            let mut in_test = vec![false; n_rows];
            for &idx in &test_idx {
                in_test[idx as usize] = true;
            }
            let train_idx = (0..n_rows as u32).filter(|&r| !in_test[r as usize]).collect();
            FoldIndices { train_idx, test_idx }
        })
        .collect();
    Ok(SplitPlan {
        folds,
        method: "kfold".to_string(),
        seed_used: seed,
    })
}

fn shuffled_deck(n_rows: usize, seed: u64) -> Vec<u32> {
    let mut deck: Vec<u32> = (0..n_rows as u32).collect();
    SplitMix64::new(seed).shuffle(&mut deck);
    deck
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn holdout_sizes() {
        let plan = split_holdout(10, 0.2, 99).unwrap();
        assert_eq!(plan.folds[0].test_idx.len(), 2);
        assert_eq!(plan.folds[0].train_idx.len(), 8);
        assert!(plan.violations(10).is_empty());
    }

    #[test]
    fn holdout_deterministic() {
        assert_eq!(split_holdout(100, 0.3, 5).unwrap(), split_holdout(100, 0.3, 5).unwrap());
        assert_ne!(split_holdout(100, 0.3, 5).unwrap(), split_holdout(100, 0.3, 6).unwrap());
    }

    #[test]
    fn holdout_rejects_tiny_or_degenerate() {
        assert!(split_holdout(1, 0.5, 0).is_err());
        assert!(split_holdout(10, 0.0, 0).is_err());
        assert!(split_holdout(10, 1.0, 0).is_err());
        assert!(split_holdout(10, 0.01, 0).is_err()); // rounds to empty test
    }

    #[test]
    fn kfold_even_sizes() {
        let plan = split_kfold(10, 5, 1).unwrap();
        assert_eq!(plan.folds.len(), 5);
        for fold in &plan.folds {
            assert_eq!(fold.test_idx.len(), 2);
        }
        assert!(plan.violations(10).is_empty());
    }

    #[test]
    fn kfold_remainder_largest_first() {
        let plan = split_kfold(10, 3, 1).unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test_idx.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert!(plan.violations(10).is_empty());
    }

    #[test]
    fn kfold_rejects_bad_k() {
        assert!(split_kfold(10, 1, 0).is_err());
        assert!(split_kfold(10, 11, 0).is_err());
    }

    #[test]
    fn validator_catches_corrupt_plans() {
        let mut plan = split_kfold(10, 2, 3).unwrap();
        plan.folds[0].train_idx[0] = plan.folds[0].test_idx[0];
        assert!(!plan.violations(10).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kfold_invariants_hold(
            (n, k) in (2usize..=10_000).prop_flat_map(|n| (Just(n), 2usize..=n.min(32))),
            seed in any::<u64>(),
        ) {
            let plan = split_kfold(n, k, seed).unwrap();
            prop_assert!(plan.violations(n).is_empty());
        }

        #[test]
        fn holdout_invariants_hold(
            n in 4usize..=10_000,
            frac in 0.1f64..0.9,
            seed in any::<u64>(),
        ) {
            let plan = split_holdout(n, frac, seed).unwrap();
            prop_assert!(plan.violations(n).is_empty());
        }
    }
}
