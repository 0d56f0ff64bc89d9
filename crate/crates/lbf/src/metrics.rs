//! Threshold-free ranking metrics for score-producing classifiers.

use crate::error::{Error, Result};

fn validate(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::UndefinedMetric("no samples".into()));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {s}")));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Indices sorted by ascending score.
fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// Area under the ROC curve via the rank statistic: tied scores receive
/// average ranks, so a tied positive/negative pair contributes 1/2.
/// Undefined unless both classes are present.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    validate(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs at least one positive and one negative".into(),
        ));
    }

    let order = order_by_score(scores);
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j averaged across the tie run.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let n_pos = n_pos as f64;
    let u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg as f64))
}

/// Area under the precision-recall curve: trapezoidal area between the
/// operating points observed at each distinct score threshold (descending),
/// anchored at recall 0 with the precision of the highest-score block.
/// Thresholds that add no new positives contribute no area. Undefined
/// without at least one positive.
pub fn auprc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    validate(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric(
            "AUPRC needs at least one positive".into(),
        ));
    }

    let mut order = order_by_score(scores);
    order.reverse();

    let mut area = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut prev_precision = None;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        if recall > prev_recall {
            let anchor = prev_precision.unwrap_or(precision);
            area += (recall - prev_recall) * (precision + anchor) / 2.0;
            prev_recall = recall;
            prev_precision = Some(precision);
        }
        i = j;
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force AUC: fraction of (positive, negative) pairs ranked
    /// correctly, ties counting 1/2.
    fn auc_by_pairs(scores: &[f64], labels: &[u8]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0u64;
        for (i, &li) in labels.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj != 0 {
                    continue;
                }
                pairs += 1;
                if scores[i] > scores[j] {
                    total += 1.0;
                } else if scores[i] == scores[j] {
                    total += 0.5;
                }
            }
        }
        total / pairs as f64
    }

    #[test]
    fn auc_perfect_and_inverted() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [0, 0, 1, 1];
        assert!((auc(&scores, &labels).unwrap() - 1.0).abs() < 1e-12);
        let inverted = [1, 1, 0, 0];
        assert!(auc(&scores, &inverted).unwrap().abs() < 1e-12);
    }

    #[test]
    fn auc_constant_scores_is_half() {
        let scores = [0.5; 6];
        let labels = [1, 0, 1, 0, 0, 1];
        assert!((auc(&scores, &labels).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_tie_counts_half() {
        let scores = [0.3, 0.3, 0.7];
        let labels = [1, 0, 1];
        // Pairs: (s=0.3 pos vs 0.3 neg) = 0.5, (0.7 pos vs 0.3 neg) = 1.
        assert!((auc(&scores, &labels).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_undefined_on_single_class() {
        assert!(auc(&[0.5, 0.6], &[1, 1]).is_err());
        assert!(auc(&[0.5, 0.6], &[0, 0]).is_err());
        assert!(auc(&[], &[]).is_err());
    }

    #[test]
    fn auprc_perfect_ranking_is_one() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [1, 1, 0, 0];
        assert!((auprc(&scores, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auprc_constant_scores_is_prevalence() {
        let scores = [0.4; 8];
        let labels = [1, 0, 0, 0, 1, 0, 0, 0];
        assert!((auprc(&scores, &labels).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn auprc_interleaved_reference_value() {
        // Thresholds descending: (r=1/2, p=1), then (r=1, p=2/3);
        // area = 1/2 * 1 + 1/2 * (1 + 2/3)/2 = 11/12.
        let scores = [0.9, 0.8, 0.7];
        let labels = [1, 0, 1];
        assert!((auprc(&scores, &labels).unwrap() - 11.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn auprc_undefined_without_positives() {
        assert!(auprc(&[0.1, 0.2], &[0, 0]).is_err());
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(auc(&[0.1], &[0, 1]).is_err());
        assert!(auc(&[f64::NAN, 0.2], &[0, 1]).is_err());
        assert!(auc(&[0.1, 0.2], &[0, 2]).is_err());
    }

    proptest! {
        #[test]
        fn auc_matches_pair_enumeration(
            scores in prop::collection::vec(0.0f64..1.0, 2..60),
            flags in prop::collection::vec(any::<bool>(), 2..60),
        ) {
            let n = scores.len().min(flags.len());
            let scores = &scores[..n];
            // Quantize to force occasional ties.
            let scores: Vec<f64> = scores.iter().map(|s| (s * 8.0).round() / 8.0).collect();
            let labels: Vec<u8> = flags[..n].iter().map(|&b| b as u8).collect();
            let n_pos: usize = labels.iter().map(|&l| l as usize).sum();
            prop_assume!(n_pos > 0 && n_pos < n);
            let fast = auc(&scores, &labels).unwrap();
            let slow = auc_by_pairs(&scores, &labels);
            prop_assert!((fast - slow).abs() < 1e-10);
        }

        #[test]
        fn auc_invariant_under_monotone_transform(
            scores in prop::collection::vec(-5.0f64..5.0, 2..40),
            flags in prop::collection::vec(any::<bool>(), 2..40),
        ) {
            let n = scores.len().min(flags.len());
            let scores = &scores[..n];
            let labels: Vec<u8> = flags[..n].iter().map(|&b| b as u8).collect();
            let n_pos: usize = labels.iter().map(|&l| l as usize).sum();
            prop_assume!(n_pos > 0 && n_pos < n);
            let transformed: Vec<f64> = scores.iter().map(|s| (0.3 * s).exp()).collect();
            let a = auc(scores, &labels).unwrap();
            let b = auc(&transformed, &labels).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn auc_score_negation_complements(
            scores in prop::collection::vec(-3.0f64..3.0, 2..40),
            flags in prop::collection::vec(any::<bool>(), 2..40),
        ) {
            let n = scores.len().min(flags.len());
            let scores = &scores[..n];
            let labels: Vec<u8> = flags[..n].iter().map(|&b| b as u8).collect();
            let n_pos: usize = labels.iter().map(|&l| l as usize).sum();
            prop_assume!(n_pos > 0 && n_pos < n);
            let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
            let a = auc(scores, &labels).unwrap();
            let b = auc(&negated, &labels).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-10);
        }

        #[test]
        fn auprc_bounded_and_at_least_no_skill_for_perfect(
            flags in prop::collection::vec(any::<bool>(), 3..40),
        ) {
            let labels: Vec<u8> = flags.iter().map(|&b| b as u8).collect();
            let n_pos: usize = labels.iter().map(|&l| l as usize).sum();
            prop_assume!(n_pos > 0);
            // Scores equal to labels: perfect separation gives area 1.
            let scores: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
            let v = auprc(&scores, &labels).unwrap();
            prop_assert!((v - 1.0).abs() < 1e-10);
        }
    }
}
