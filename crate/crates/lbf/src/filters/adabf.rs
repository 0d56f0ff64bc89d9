//! Group-adaptive filter: one shared bit array, probed with fewer hashes as
//! the classifier score rises; the top score group skips the array entirely.

use crate::bloom::{canonical_bytes, component_seed, hash_pair, optimal_k, probe_index, BitArray};
use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::filters::{quantile_sorted, scores_of, Filter, QueryTrace};

pub const DEFAULT_GROUP_GRID: [usize; 13] = [3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
pub const DEFAULT_RATIO_GRID: [f64; 9] = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0];

#[derive(Debug, Clone)]
pub struct AdaBf<C> {
    classifier: C,
    /// Interior group boundaries, strictly ascending; scores at or below
    /// `thresholds[j]` fall in group `j`, everything above the last boundary
    /// in the top group.
    thresholds: Vec<f64>,
    /// Probes per group, non-increasing; the top group's count is zero.
    hash_counts: Vec<u16>,
    bits: BitArray,
    seed: u64,
    ratio: f64,
    groups_requested: usize,
    fallback: bool,
    train_fpr: f64,
}

impl<C: Classifier> AdaBf<C> {
    pub fn classifier(&self) -> &C {
        &self.classifier
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn hash_counts(&self) -> &[u16] {
        &self.hash_counts
    }

    pub fn groups(&self) -> usize {
        self.hash_counts.len()
    }

    /// Group count the winning candidate asked for; the effective count is
    /// smaller when tied score quantiles collapsed.
    pub fn groups_requested(&self) -> usize {
        self.groups_requested
    }

    /// Non-key count ratio between adjacent groups used for the boundaries.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// True when the ratio-based boundaries collapsed and the equal-count
    /// rule (or its last-resort single cut) was used instead.
    pub fn fallback_used(&self) -> bool {
        self.fallback
    }

    pub fn train_fpr(&self) -> f64 {
        self.train_fpr
    }

    pub fn array_bits(&self) -> u64 {
        self.bits.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn group_of(&self, score: f64) -> usize {
        self.thresholds
            .iter()
            .position(|&t| score <= t)
            .unwrap_or(self.thresholds.len())
    }

    pub fn query_trace(&self, x: &[f64]) -> QueryTrace {
        let group = self.group_of(self.classifier.score(x));
        let k = self.hash_counts[group];
        let accepted = if k == 0 {
            true
        } else {
            let pair = hash_pair(&canonical_bytes(x), self.seed);
            (0..k).all(|j| self.bits.get(probe_index(pair, j, self.bits.len())))
        };
        QueryTrace {
            accepted,
            classifier_scored: true,
            initial_probed: false,
            backup_probed: k > 0,
            group: Some(group),
        }
    }

    pub(crate) fn bit_array(&self) -> &BitArray {
        &self.bits
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        classifier: C,
        thresholds: Vec<f64>,
        hash_counts: Vec<u16>,
        bits: BitArray,
        seed: u64,
        ratio: f64,
        groups_requested: usize,
        fallback: bool,
        train_fpr: f64,
    ) -> Self {
        AdaBf {
            classifier,
            thresholds,
            hash_counts,
            bits,
            seed,
            ratio,
            groups_requested,
            fallback,
            train_fpr,
        }
    }
}

impl<C: Classifier> Filter for AdaBf<C> {
    fn accepts(&self, x: &[f64]) -> bool {
        self.query_trace(x).accepted
    }

    fn size_bits(&self) -> u64 {
        self.classifier.size_bits() + self.bits.len()
    }
}

/// Interior boundaries placing a `ratio`-fold larger share of the scores in
/// each group below the next: quantile positions follow cumulative weights
/// `ratio^(g-1), …, ratio, 1`. Equal scores collapse to one boundary.
fn ratio_cuts(sorted_scores: &[f64], groups: usize, ratio: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..groups)
        .map(|j| ratio.powi((groups - 1 - j) as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut cuts = Vec::with_capacity(groups - 1);
    let mut cumulative = 0.0;
    for w in &weights[..groups - 1] {
        cumulative += w;
        let t = quantile_sorted(sorted_scores, cumulative / total);
        if cuts.last() != Some(&t) {
            cuts.push(t);
        }
    }
    cuts
}

/// Grid search over group counts and count ratios for the lowest acceptance
/// rate on `train_non_keys`. Every candidate shares one array of all bits
/// left after the classifier, probed `round(K(g-j)/(g-1))` times for group
/// `j`, with `K` the classic optimum for that array over all keys. Ties keep
/// the earliest (groups, ratio) pair in grid order.
pub fn build_adabf<C: Classifier>(
    classifier: C,
    keys: &[Vec<f64>],
    train_non_keys: &[Vec<f64>],
    budget_bits: u64,
    groups_grid: &[usize],
    ratio_grid: &[f64],
    seed: u64,
) -> Result<AdaBf<C>> {
    if keys.is_empty() {
        return Err(Error::InvalidArgument("no keys to store".into()));
    }
    if train_non_keys.is_empty() {
        return Err(Error::InvalidArgument(
            "boundary selection needs training non-keys".into(),
        ));
    }
    if groups_grid.is_empty() || groups_grid.iter().any(|&g| g < 2) {
        return Err(Error::InvalidArgument(
            "every group count must be at least 2".into(),
        ));
    }
    if ratio_grid.is_empty() || ratio_grid.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(Error::InvalidArgument(
            "count ratios must be finite and positive".into(),
        ));
    }
    let classifier_bits = classifier.size_bits();
    let m = budget_bits
        .checked_sub(classifier_bits)
        .ok_or(Error::BudgetExceeded {
            budget_bits,
            classifier_bits,
        })?;
    if m == 0 {
        return Err(Error::Infeasible(
            "classifier consumed the whole budget, leaving no bits for the shared array".into(),
        ));
    }

    let key_scores = scores_of(&classifier, keys);
    let nk_scores = scores_of(&classifier, train_non_keys);
    if let Some(s) = key_scores.iter().chain(&nk_scores).find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {s}")));
    }
    let mut nk_sorted = nk_scores.clone();
    nk_sorted.sort_by(|a, b| a.total_cmp(b));

    let array_seed = component_seed(seed, 0);
    let key_pairs: Vec<(u64, u64)> = keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), array_seed))
        .collect();
    let nk_pairs: Vec<(u64, u64)> = train_non_keys
        .iter()
        .map(|x| hash_pair(&canonical_bytes(x), array_seed))
        .collect();
    let max_k = optimal_k(m, keys.len() as u64);

    struct Candidate {
        fpr: f64,
        thresholds: Vec<f64>,
        hash_counts: Vec<u16>,
        bits: BitArray,
        ratio: f64,
        groups_requested: usize,
        fallback: bool,
    }
    let mut best: Option<Candidate> = None;

    for &groups in groups_grid {
        for &ratio in ratio_grid {
            let primary = ratio_cuts(&nk_sorted, groups, ratio);
            let (thresholds, fallback) = if primary.len() == groups - 1 {
                (primary, false)
            } else {
                let equal = ratio_cuts(&nk_sorted, groups, 1.0);
                if equal.is_empty() {
                    (vec![0.5], true)
                } else {
                    (equal, true)
                }
            };
            let effective = thresholds.len() + 1;
            let hash_counts: Vec<u16> = (0..effective)
                .map(|j| {
                    (max_k as f64 * (effective - 1 - j) as f64 / (effective - 1) as f64).round()
                        as u16
                })
                .collect();

            let group_of = |s: f64| {
                thresholds
                    .iter()
                    .position(|&t| s <= t)
                    .unwrap_or(thresholds.len())
            };
            let mut bits = BitArray::new(m);
            for (i, &s) in key_scores.iter().enumerate() {
                for j in 0..hash_counts[group_of(s)] {
                    bits.set(probe_index(key_pairs[i], j, m));
                }
            }
            let hits = (0..train_non_keys.len())
                .filter(|&i| {
                    let k = hash_counts[group_of(nk_scores[i])];
                    (0..k).all(|j| bits.get(probe_index(nk_pairs[i], j, m)))
                })
                .count();
            let fpr = hits as f64 / train_non_keys.len() as f64;
            if best.as_ref().is_none_or(|c| fpr < c.fpr) {
                best = Some(Candidate {
                    fpr,
                    thresholds,
                    hash_counts,
                    bits,
                    ratio,
                    groups_requested: groups,
                    fallback,
                });
            }
        }
    }

    let c = best.expect("grids are non-empty");
    Ok(AdaBf {
        classifier,
        thresholds: c.thresholds,
        hash_counts: c.hash_counts,
        bits: c.bits,
        seed: array_seed,
        ratio: c.ratio,
        groups_requested: c.groups_requested,
        fallback: c.fallback,
        train_fpr: c.fpr,
    })
}
