//! Sandwiched construction: a filter over all keys screens queries before
//! the classifier gate and its backup.

use crate::bloom::{canonical_bytes, component_seed, hash_pair, optimal_k, BloomFilter};
use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::filters::{scores_of, tau_grid, Filter, QueryTrace};

/// Split fractions tried for dividing the leftover bits between the initial
/// and backup filters.
pub const DEFAULT_SPLIT_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone)]
pub struct Slbf<C> {
    classifier: C,
    tau: f64,
    /// Fraction of the leftover bits given to the initial filter.
    split: f64,
    initial: BloomFilter,
    backup: Option<BloomFilter>,
    false_negatives: u64,
    train_fpr: f64,
}

impl<C: Classifier> Slbf<C> {
    pub fn classifier(&self) -> &C {
        &self.classifier
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn split(&self) -> f64 {
        self.split
    }

    pub fn initial(&self) -> &BloomFilter {
        &self.initial
    }

    pub fn backup(&self) -> Option<&BloomFilter> {
        self.backup.as_ref()
    }

    pub fn false_negatives(&self) -> u64 {
        self.false_negatives
    }

    pub fn train_fpr(&self) -> f64 {
        self.train_fpr
    }

    /// The initial filter is probed first; the classifier only sees queries
    /// that survive it, and the backup only those the classifier holds back.
    pub fn query_trace(&self, x: &[f64]) -> QueryTrace {
        if !self.initial.query(x) {
            return QueryTrace {
                accepted: false,
                classifier_scored: false,
                initial_probed: true,
                backup_probed: false,
                group: None,
            };
        }
        let passed = self.classifier.score(x) > self.tau;
        let backup_probed = !passed && self.backup.is_some();
        let accepted = passed || self.backup.as_ref().is_some_and(|b| b.query(x));
        QueryTrace {
            accepted,
            classifier_scored: true,
            initial_probed: true,
            backup_probed,
            group: None,
        }
    }

    pub(crate) fn from_parts(
        classifier: C,
        tau: f64,
        split: f64,
        initial: BloomFilter,
        backup: Option<BloomFilter>,
        false_negatives: u64,
        train_fpr: f64,
    ) -> Self {
        Slbf {
            classifier,
            tau,
            split,
            initial,
            backup,
            false_negatives,
            train_fpr,
        }
    }
}

impl<C: Classifier> Filter for Slbf<C> {
    fn accepts(&self, x: &[f64]) -> bool {
        self.query_trace(x).accepted
    }

    fn size_bits(&self) -> u64 {
        self.classifier.size_bits() + self.initial.m() + self.backup.as_ref().map_or(0, |b| b.m())
    }
}

/// Grid search over split fractions and thresholds for the lowest acceptance
/// rate on `train_non_keys`. When a threshold leaves no false negatives the
/// backup is dropped and the initial filter takes the whole leftover budget.
/// Ties keep the earliest (split, threshold) pair in grid order.
pub fn build_slbf<C: Classifier>(
    classifier: C,
    keys: &[Vec<f64>],
    train_non_keys: &[Vec<f64>],
    budget_bits: u64,
    grid_size: usize,
    splits: &[f64],
    seed: u64,
) -> Result<Slbf<C>> {
    if keys.is_empty() {
        return Err(Error::InvalidArgument("no keys to store".into()));
    }
    if train_non_keys.is_empty() {
        return Err(Error::InvalidArgument(
            "threshold selection needs training non-keys".into(),
        ));
    }
    if splits.is_empty() || splits.iter().any(|s| !(0.0 < *s && *s < 1.0)) {
        return Err(Error::InvalidArgument(
            "split fractions must lie strictly between 0 and 1".into(),
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

    let initial_seed = component_seed(seed, 0);
    let backup_seed = component_seed(seed, 1);
    let key_pairs_initial: Vec<(u64, u64)> = keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), initial_seed))
        .collect();
    let key_pairs_backup: Vec<(u64, u64)> = keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), backup_seed))
        .collect();
    let nk_pairs_initial: Vec<(u64, u64)> = train_non_keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), initial_seed))
        .collect();
    let nk_pairs_backup: Vec<(u64, u64)> = train_non_keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), backup_seed))
        .collect();

    let build_initial = |m: u64| -> Result<BloomFilter> {
        let mut f = BloomFilter::new(m, optimal_k(m, keys.len() as u64), initial_seed)?;
        for &p in &key_pairs_initial {
            f.insert_pair(p);
        }
        Ok(f)
    };

    // The no-false-negative case reallocates the backup's bits to the
    // initial filter, which then no longer depends on the split.
    let mut full_initial: Option<BloomFilter> = None;

    struct Candidate {
        fpr: f64,
        tau: f64,
        split: f64,
        initial: BloomFilter,
        backup: Option<BloomFilter>,
        false_negatives: u64,
    }
    let mut best: Option<Candidate> = None;

    for &split in splits {
        let m_initial = ((split * remaining as f64).round() as u64).min(remaining);
        let m_backup = remaining - m_initial;
        let mut split_initial: Option<BloomFilter> = None;

        for &tau in &taus {
            let misses: Vec<usize> = (0..keys.len()).filter(|&i| key_scores[i] <= tau).collect();

            let (initial, backup) = if misses.is_empty() {
                if full_initial.is_none() {
                    full_initial = Some(build_initial(remaining)?);
                }
                (full_initial.clone().unwrap(), None)
            } else {
                if m_backup == 0 {
                    continue;
                }
                if split_initial.is_none() {
                    split_initial = Some(build_initial(m_initial)?);
                }
                let mut b = BloomFilter::new(
                    m_backup,
                    optimal_k(m_backup, misses.len() as u64),
                    backup_seed,
                )?;
                for &i in &misses {
                    b.insert_pair(key_pairs_backup[i]);
                }
                (split_initial.clone().unwrap(), Some(b))
            };

            let hits = (0..train_non_keys.len())
                .filter(|&i| {
                    initial.query_pair(nk_pairs_initial[i])
                        && (nk_scores[i] > tau
                            || backup
                                .as_ref()
                                .is_some_and(|b| b.query_pair(nk_pairs_backup[i])))
                })
                .count();
            let fpr = hits as f64 / train_non_keys.len() as f64;
            if best.as_ref().is_none_or(|c| fpr < c.fpr) {
                best = Some(Candidate {
                    fpr,
                    tau,
                    split,
                    initial,
                    backup,
                    false_negatives: misses.len() as u64,
                });
            }
        }
    }

    let c = best.ok_or_else(|| {
        Error::Infeasible(
            "no split leaves backup bits and every threshold has false negatives".into(),
        )
    })?;
    Ok(Slbf {
        classifier,
        tau: c.tau,
        split: c.split,
        initial: c.initial,
        backup: c.backup,
        false_negatives: c.false_negatives,
        train_fpr: c.fpr,
    })
}
