//! Learned approximate-membership filters.
//!
//! Every construction here couples a score-producing classifier with one or
//! more Bloom filters under a shared bit budget and guarantees zero false
//! negatives on the build key set:
//!
//! - [`lbf`]: classifier gate + backup filter over its false negatives.
//! - [`slbf`]: an initial filter over all keys in front of an LBF.
//! - [`adabf`]: a single shared bit array probed with fewer hashes as the
//!   classifier score rises.

pub mod adabf;
pub mod container;
pub mod lbf;
pub mod slbf;
pub mod timing;

pub use adabf::{build_adabf, AdaBf};
pub use container::FilterArtifact;
pub use lbf::{build_lbf, Lbf};
pub use slbf::{build_slbf, Slbf};
pub use timing::{percent_vs_baseline, query_time_ns, TimingConfig};

use crate::bloom::BloomFilter;
use crate::classifiers::Classifier;
use crate::error::{Error, Result};

/// Approximate-membership query structure: never rejects a key it was built
/// over, may accept non-keys.
pub trait Filter {
    fn accepts(&self, x: &[f64]) -> bool;
    /// Total bits charged against the budget: classifier encoding plus all
    /// bit arrays.
    fn size_bits(&self) -> u64;
}

impl Filter for BloomFilter {
    fn accepts(&self, x: &[f64]) -> bool {
        self.query(x)
    }

    fn size_bits(&self) -> u64 {
        self.m()
    }
}

/// Which stages a single query touched, for observing short-circuit order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTrace {
    pub accepted: bool,
    pub classifier_scored: bool,
    pub initial_probed: bool,
    pub backup_probed: bool,
    /// Score-group index for group-structured filters.
    pub group: Option<usize>,
}

/// Fraction of the given non-keys the filter accepts.
pub fn empirical_fpr<F: Filter + ?Sized>(filter: &F, non_keys: &[Vec<f64>]) -> Result<f64> {
    if non_keys.is_empty() {
        return Err(Error::UndefinedMetric(
            "false positive rate over an empty query set".into(),
        ));
    }
    let hits = non_keys.iter().filter(|x| filter.accepts(x)).count();
    Ok(hits as f64 / non_keys.len() as f64)
}

/// Two-stage acceptance rate: classifier passes at rate `classifier_fpr`,
/// and what it holds back leaks through the backup at `backup_fpr`.
pub fn composed_fpr(classifier_fpr: f64, backup_fpr: f64) -> f64 {
    classifier_fpr + (1.0 - classifier_fpr) * backup_fpr
}

/// Backup rate that makes [`composed_fpr`] hit `target`; requires the
/// classifier alone to already be under the target.
pub fn backup_fpr_for_target(target: f64, classifier_fpr: f64) -> Result<f64> {
    if !(0.0 < target && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target FPR must lie in (0, 1), got {target}"
        )));
    }
    if !(0.0..1.0).contains(&classifier_fpr) {
        return Err(Error::InvalidArgument(format!(
            "classifier FPR must lie in [0, 1), got {classifier_fpr}"
        )));
    }
    if classifier_fpr >= target {
        return Err(Error::Infeasible(format!(
            "classifier FPR {classifier_fpr} already exceeds the target {target}"
        )));
    }
    Ok((target - classifier_fpr) / (1.0 - classifier_fpr))
}

/// Three-stage acceptance rate of the sandwiched construction.
pub fn sandwich_fpr(initial_fpr: f64, classifier_fpr: f64, backup_fpr: f64) -> f64 {
    initial_fpr * composed_fpr(classifier_fpr, backup_fpr)
}

/// Initial-filter rate that lets a sandwiched filter hit `target` overall:
/// `(target / classifier_fpr) * (1 - fn_rate)`, where `fn_rate` is the
/// fraction of keys the classifier holds back. Valid in the regime
/// `target * (1 - fn_rate) <= classifier_fpr <= 1 - fn_rate`.
pub fn initial_fpr_for_target(target: f64, classifier_fpr: f64, fn_rate: f64) -> Result<f64> {
    if !(0.0 < target && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target FPR must lie in (0, 1), got {target}"
        )));
    }
    if !(0.0..=1.0).contains(&fn_rate) {
        return Err(Error::InvalidArgument(format!(
            "false negative rate must lie in [0, 1], got {fn_rate}"
        )));
    }
    let kept = 1.0 - fn_rate;
    if !(classifier_fpr >= target * kept && classifier_fpr <= kept) || classifier_fpr <= 0.0 {
        return Err(Error::Infeasible(format!(
            "classifier FPR {classifier_fpr} outside the valid band [{}, {}]",
            target * kept,
            kept
        )));
    }
    Ok((target / classifier_fpr) * kept)
}

/// Nearest-rank quantile of an ascending-sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let idx = (p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Threshold candidates: `size` evenly spaced percentiles of the scores,
/// endpoints included, deduplicated. Including the maximum lets a strong
/// classifier reject every training non-key, and repeated low percentiles
/// collapse for heavily tied score distributions.
pub fn tau_grid(scores: &[f64], size: usize) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "threshold grid needs at least one score".into(),
        ));
    }
    if size < 2 {
        return Err(Error::InvalidArgument(format!(
            "threshold grid needs at least 2 positions, got {size}"
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {s}")));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut grid: Vec<f64> = Vec::with_capacity(size);
    for i in 0..size {
        let p = i as f64 / (size - 1) as f64;
        let v = quantile_sorted(&sorted, p);
        if grid.last() != Some(&v) {
            grid.push(v);
        }
    }
    Ok(grid)
}

pub(crate) fn scores_of<C: Classifier>(classifier: &C, rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|x| classifier.score(x)).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empirical_fpr_counts_accepts() {
        // One bit set out of one: everything hashes to it.
        let f = BloomFilter::build(&[vec![1.0, 2.0]], 1, 1, 0).unwrap();
        let non_keys: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, -1.0]).collect();
        assert_eq!(empirical_fpr(&f, &non_keys).unwrap(), 1.0);

        let empty = BloomFilter::new(1 << 16, 4, 0).unwrap();
        assert_eq!(empirical_fpr(&empty, &non_keys).unwrap(), 0.0);
        assert!(empirical_fpr(&empty, &[]).is_err());
    }

    #[test]
    fn composition_round_trip() {
        let target = 0.05;
        let classifier_fpr = 0.02;
        let backup = backup_fpr_for_target(target, classifier_fpr).unwrap();
        assert!((composed_fpr(classifier_fpr, backup) - target).abs() < 1e-15);
    }

    #[test]
    fn backup_target_requires_headroom() {
        assert!(backup_fpr_for_target(0.05, 0.05).is_err());
        assert!(backup_fpr_for_target(0.05, 0.2).is_err());
        assert!(backup_fpr_for_target(0.0, 0.0).is_err());
        assert!(backup_fpr_for_target(1.0, 0.5).is_err());
        assert!((backup_fpr_for_target(0.05, 0.0).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn sandwich_composition_and_sizing() {
        let eps = sandwich_fpr(0.5, 0.1, 0.2);
        assert!((eps - 0.5 * (0.1 + 0.9 * 0.2)).abs() < 1e-15);

        // Round trip: with the initial rate from the sizing rule, the overall
        // rate hits the target when the backup absorbs what is left.
        let (target, clf, fn_rate) = (0.01, 0.05, 0.2);
        let initial = initial_fpr_for_target(target, clf, fn_rate).unwrap();
        assert!((initial - (target / clf) * 0.8).abs() < 1e-15);

        assert!(initial_fpr_for_target(0.01, 0.9, 0.2).is_err());
        assert!(initial_fpr_for_target(0.01, 0.001, 0.2).is_err());
        assert!(initial_fpr_for_target(0.01, 0.0, 0.0).is_err());
    }

    #[test]
    fn tau_grid_includes_endpoints_and_dedupes() {
        let scores = [0.1, 0.9, 0.4, 0.2, 0.6];
        let grid = tau_grid(&scores, 5).unwrap();
        assert_eq!(grid, vec![0.1, 0.2, 0.4, 0.6, 0.9]);

        let tied = [0.5; 20];
        assert_eq!(tau_grid(&tied, 15).unwrap(), vec![0.5]);

        let grid = tau_grid(&[0.0, 1.0], 15).unwrap();
        assert_eq!(grid.first(), Some(&0.0));
        assert_eq!(grid.last(), Some(&1.0));

        assert!(tau_grid(&[], 15).is_err());
        assert!(tau_grid(&[0.5], 1).is_err());
        assert!(tau_grid(&[f64::NAN], 15).is_err());
    }

    proptest! {
        #[test]
        fn composition_identity_holds(
            target in 0.001f64..0.5,
            classifier_fpr in 0.0f64..0.5,
        ) {
            prop_assume!(classifier_fpr < target);
            let backup = backup_fpr_for_target(target, classifier_fpr).unwrap();
            prop_assert!((0.0..=1.0).contains(&backup));
            prop_assert!((composed_fpr(classifier_fpr, backup) - target).abs() < 1e-12);
        }

        #[test]
        fn tau_grid_sorted_distinct_subset(
            scores in prop::collection::vec(0.0f64..1.0, 1..80),
            size in 2usize..20,
        ) {
            let grid = tau_grid(&scores, size).unwrap();
            prop_assert!(!grid.is_empty());
            prop_assert!(grid.len() <= size);
            prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
            for v in &grid {
                prop_assert!(scores.contains(v));
            }
            prop_assert_eq!(*grid.first().unwrap(),
                scores.iter().cloned().fold(f64::INFINITY, f64::min));
            prop_assert_eq!(*grid.last().unwrap(),
                scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
    }
}
