//! Classifier gate with a backup filter over its false negatives.

use crate::bloom::{canonical_bytes, component_seed, hash_pair, optimal_k, BloomFilter};
use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::filters::{scores_of, tau_grid, Filter, QueryTrace};

/// Learned filter: accept when the score clears the threshold, otherwise
/// defer to a backup filter holding every key the classifier missed.
#[derive(Debug, Clone)]
pub struct Lbf<C> {
    classifier: C,
    tau: f64,
    backup: Option<BloomFilter>,
    false_negatives: u64,
    train_fpr: f64,
}

impl<C: Classifier> Lbf<C> {
    pub fn classifier(&self) -> &C {
        &self.classifier
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn backup(&self) -> Option<&BloomFilter> {
        self.backup.as_ref()
    }

    /// Keys the classifier scored at or below the threshold during the build.
    pub fn false_negatives(&self) -> u64 {
        self.false_negatives
    }

    /// Acceptance rate over the training non-keys at build time.
    pub fn train_fpr(&self) -> f64 {
        self.train_fpr
    }

    pub fn query_trace(&self, x: &[f64]) -> QueryTrace {
        let passed = self.classifier.score(x) > self.tau;
        let backup_probed = !passed && self.backup.is_some();
        let accepted = passed || self.backup.as_ref().is_some_and(|b| b.query(x));
        QueryTrace {
            accepted,
            classifier_scored: true,
            initial_probed: false,
            backup_probed,
            group: None,
        }
    }

    pub(crate) fn from_parts(
        classifier: C,
        tau: f64,
        backup: Option<BloomFilter>,
        false_negatives: u64,
        train_fpr: f64,
    ) -> Self {
        Lbf {
            classifier,
            tau,
            backup,
            false_negatives,
            train_fpr,
        }
    }
}

impl<C: Classifier> Filter for Lbf<C> {
    fn accepts(&self, x: &[f64]) -> bool {
        self.query_trace(x).accepted
    }

    fn size_bits(&self) -> u64 {
        self.classifier.size_bits() + self.backup.as_ref().map_or(0, |b| b.m())
    }
}

/// Pick the threshold from the non-key score percentile grid that minimizes
/// the acceptance rate on `train_non_keys`, giving the backup filter all
/// bits left after the classifier. Ties keep the lowest threshold.
pub fn build_lbf<C: Classifier>(
    classifier: C,
    keys: &[Vec<f64>],
    train_non_keys: &[Vec<f64>],
    budget_bits: u64,
    grid_size: usize,
    seed: u64,
) -> Result<Lbf<C>> {
    if keys.is_empty() {
        return Err(Error::InvalidArgument("no keys to store".into()));
    }
    if train_non_keys.is_empty() {
        return Err(Error::InvalidArgument(
            "threshold selection needs training non-keys".into(),
        ));
    }
    let classifier_bits = classifier.size_bits();
    let remaining = budget_bits
        .checked_sub(classifier_bits)
        .ok_or(Error::BudgetExceeded {
            budget_bits,
            classifier_bits,
        })?;

    let key_scores = scores_of(&classifier, keys);
    let nk_scores = scores_of(&classifier, train_non_keys);
    let taus = tau_grid(&nk_scores, grid_size)?;

    let backup_seed = component_seed(seed, 1);
    let key_pairs: Vec<(u64, u64)> = keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), backup_seed))
        .collect();
    let nk_pairs: Vec<(u64, u64)> = train_non_keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), backup_seed))
        .collect();

    let mut best: Option<(f64, f64, Option<BloomFilter>, u64)> = None;
    for &tau in &taus {
        let misses: Vec<usize> = (0..keys.len()).filter(|&i| key_scores[i] <= tau).collect();
        let backup = if misses.is_empty() {
            None
        } else if remaining == 0 {
            continue;
        } else {
            let mut filter = BloomFilter::new(
                remaining,
                optimal_k(remaining, misses.len() as u64),
                backup_seed,
            )?;
            for &i in &misses {
                filter.insert_pair(key_pairs[i]);
            }
            Some(filter)
        };
        let hits = (0..train_non_keys.len())
            .filter(|&i| {
                nk_scores[i] > tau || backup.as_ref().is_some_and(|b| b.query_pair(nk_pairs[i]))
            })
            .count();
        let fpr = hits as f64 / train_non_keys.len() as f64;
        if best.as_ref().is_none_or(|(f, ..)| fpr < *f) {
            best = Some((fpr, tau, backup, misses.len() as u64));
        }
    }

    let (train_fpr, tau, backup, false_negatives) = best.ok_or_else(|| {
        Error::Infeasible(
            "classifier consumed the whole budget and every threshold leaves false negatives"
                .into(),
        )
    })?;
    Ok(Lbf {
        classifier,
        tau,
        backup,
        false_negatives,
        train_fpr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::empirical_fpr;
    use crate::filters::test_util::{grid_points, ConstScore, HashScore, SignScore};

    fn signed_data(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let keys = (0..n).map(|i| vec![1.0 + i as f64, 0.5]).collect();
        let non_keys = (0..n).map(|i| vec![-1.0 - i as f64, 0.5]).collect();
        (keys, non_keys)
    }

    #[test]
    fn perfect_classifier_needs_no_backup() {
        let (keys, non_keys) = signed_data(200);
        let lbf = build_lbf(SignScore { bits: 64 }, &keys, &non_keys, 4_096, 15, 9).unwrap();
        assert!(lbf.backup().is_none());
        assert_eq!(lbf.false_negatives(), 0);
        assert_eq!(lbf.size_bits(), 64);
        assert_eq!(lbf.train_fpr(), 0.0);
        assert_eq!(empirical_fpr(&lbf, &non_keys).unwrap(), 0.0);
        for k in &keys {
            assert!(lbf.accepts(k));
        }
    }

    #[test]
    fn constant_classifier_degenerates_to_plain_filter() {
        let (keys, non_keys) = signed_data(300);
        let budget = 64 + 2_048;
        let lbf = build_lbf(ConstScore(0.5), &keys, &non_keys, budget, 15, 42).unwrap();
        assert_eq!(lbf.tau(), 0.5);
        assert_eq!(lbf.false_negatives(), keys.len() as u64);

        // Every query falls through to the backup, so decisions must match a
        // plain filter built with the same geometry and seed.
        let backup = lbf.backup().unwrap();
        let plain = BloomFilter::build(&keys, backup.m(), backup.k(), backup.seed()).unwrap();
        let probes = grid_points(500);
        for p in &probes {
            assert_eq!(lbf.accepts(p), plain.query(p));
        }
        assert_eq!(lbf.size_bits(), 64 + backup.m());
    }

    #[test]
    fn never_rejects_a_key() {
        let keys = grid_points(400);
        let non_keys: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 * 0.01, -7.0]).collect();
        let lbf = build_lbf(HashScore, &keys, &non_keys, 256 + 1_200, 15, 3).unwrap();
        assert!(lbf.false_negatives() > 0);
        for k in &keys {
            assert!(lbf.accepts(k), "rejected key {k:?}");
        }
    }

    #[test]
    fn picks_the_threshold_with_lowest_training_fpr() {
        let keys = grid_points(300);
        let non_keys: Vec<Vec<f64>> = (0..300).map(|i| vec![-5.0 - i as f64, 2.0]).collect();
        let lbf = build_lbf(HashScore, &keys, &non_keys, 256 + 900, 15, 11).unwrap();

        // Recompute the objective over the same grid; nothing should beat
        // the chosen threshold.
        let nk_scores: Vec<f64> = non_keys.iter().map(|x| HashScore.score(x)).collect();
        let grid = tau_grid(&nk_scores, 15).unwrap();
        let mut grid_fprs = Vec::new();
        for &tau in &grid {
            grid_fprs.push(one_tau_fpr(&keys, &non_keys, tau, 900, 11));
        }
        let manual_best = grid_fprs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((lbf.train_fpr() - manual_best).abs() < 1e-12);
        let chosen_idx = grid.iter().position(|&t| t == lbf.tau()).unwrap();
        assert_eq!(grid_fprs[chosen_idx], manual_best);
    }

    fn one_tau_fpr(keys: &[Vec<f64>], non_keys: &[Vec<f64>], tau: f64, m: u64, seed: u64) -> f64 {
        let misses: Vec<Vec<f64>> = keys
            .iter()
            .filter(|x| HashScore.score(x) <= tau)
            .cloned()
            .collect();
        let backup = if misses.is_empty() {
            None
        } else {
            Some(
                BloomFilter::build(
                    &misses,
                    m,
                    optimal_k(m, misses.len() as u64),
                    component_seed(seed, 1),
                )
                .unwrap(),
            )
        };
        let hits = non_keys
            .iter()
            .filter(|x| HashScore.score(x) > tau || backup.as_ref().is_some_and(|b| b.query(x)))
            .count();
        hits as f64 / non_keys.len() as f64
    }

    #[test]
    fn oversized_classifier_is_rejected() {
        let (keys, non_keys) = signed_data(50);
        let err =
            build_lbf(SignScore { bits: 10_000 }, &keys, &non_keys, 4_096, 15, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExceeded {
                budget_bits: 4_096,
                classifier_bits: 10_000
            }
        ));
    }

    #[test]
    fn zero_remaining_bits_without_perfect_threshold_is_infeasible() {
        let (keys, non_keys) = signed_data(50);
        let err = build_lbf(ConstScore(0.5), &keys, &non_keys, 64, 15, 0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));

        // A classifier with a clean threshold still fits in exactly its own
        // footprint.
        let lbf = build_lbf(SignScore { bits: 64 }, &keys, &non_keys, 64, 15, 0).unwrap();
        assert!(lbf.backup().is_none());
    }

    #[test]
    fn trace_reports_short_circuit() {
        let (keys, non_keys) = signed_data(100);
        let lbf = build_lbf(ConstScore(0.5), &keys, &non_keys, 64 + 1_024, 15, 5).unwrap();
        let t = lbf.query_trace(&keys[0]);
        assert!(t.accepted && t.classifier_scored && t.backup_probed);
        assert!(!t.initial_probed);
        assert_eq!(t.group, None);

        let (keys, non_keys) = signed_data(100);
        let lbf = build_lbf(SignScore { bits: 64 }, &keys, &non_keys, 4_096, 15, 5).unwrap();
        let t = lbf.query_trace(&keys[0]);
        assert!(t.accepted && !t.backup_probed);
    }

    #[test]
    fn deterministic_across_builds() {
        let keys = grid_points(200);
        let non_keys: Vec<Vec<f64>> = (0..150).map(|i| vec![9.0 + i as f64, 1.0]).collect();
        let a = build_lbf(HashScore, &keys, &non_keys, 256 + 700, 15, 21).unwrap();
        let b = build_lbf(HashScore, &keys, &non_keys, 256 + 700, 15, 21).unwrap();
        assert_eq!(a.tau(), b.tau());
        assert_eq!(a.train_fpr(), b.train_fpr());
        assert_eq!(
            a.backup().map(|f| f.to_bytes()),
            b.backup().map(|f| f.to_bytes())
        );
    }
}
