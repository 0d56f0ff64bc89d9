//! Hyperparameter selection by nested stratified cross-validation: an outer
//! loop estimates generalization of the whole selection procedure, an inner
//! loop ranks grid candidates by mean AUC.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bloom::component_seed;
use crate::classifiers::{Classifier, ClassifierConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::{auc, auprc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            outer_folds: 3,
            inner_folds: 3,
            seed: 0,
        }
    }
}

/// Splits row indices into `n_folds` disjoint folds, each receiving every
/// `n_folds`-th member of a shuffled class, so class proportions match the
/// whole dataset to within one sample. Every fold contains both classes;
/// classes with fewer samples than folds are rejected.
pub fn stratified_folds(labels: &[u8], n_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_folds < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    if pos.len() < n_folds || neg.len() < n_folds {
        return Err(Error::DegenerateData(format!(
            "stratified {n_folds}-fold split needs {n_folds} of each class, have {} keys and {} non-keys",
            pos.len(),
            neg.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); n_folds];
    for (j, &i) in pos.iter().enumerate() {
        folds[j % n_folds].push(i);
    }
    for (j, &i) in neg.iter().enumerate() {
        folds[j % n_folds].push(i);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    /// Index into the grid of the candidate the inner loop selected.
    pub chosen_index: usize,
    pub chosen: String,
    /// Mean inner-validation AUC per grid candidate, in grid order.
    pub inner_mean_auc: Vec<f64>,
    /// Outer test metrics of the selected candidate retrained on the full
    /// outer training split.
    pub auc: f64,
    pub auprc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean_auc: f64,
    pub mean_auprc: f64,
}

fn score_all<C: Classifier>(model: &C, data: &LabeledDataset, idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| model.score(data.row(i))).collect()
}

fn labels_at(data: &LabeledDataset, idx: &[usize]) -> Vec<u8> {
    idx.iter().map(|&i| data.label(i)).collect()
}

/// Nested cross-validation over a candidate grid. Inner folds rank
/// candidates by mean AUC (ties resolved toward the earliest grid entry);
/// the winner is retrained on the outer training split and measured on the
/// held-out fold. Deterministic in `cfg.seed`.
pub fn nested_cv(
    data: &LabeledDataset,
    grid: &[ClassifierConfig],
    cfg: &CvConfig,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty candidate grid".into()));
    }
    let outer = stratified_folds(data.labels(), cfg.outer_folds, cfg.seed)?;

    let mut folds = Vec::with_capacity(outer.len());
    for (f, test_idx) in outer.iter().enumerate() {
        let train_idx: Vec<usize> = outer
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        let train_data = data.subset(&train_idx)?;

        let inner = stratified_folds(
            train_data.labels(),
            cfg.inner_folds,
            component_seed(cfg.seed, 0x100 + f as u64),
        )?;

        let mut inner_mean_auc = Vec::with_capacity(grid.len());
        for (g, candidate) in grid.iter().enumerate() {
            let mut total = 0.0;
            for (v, val_idx) in inner.iter().enumerate() {
                let fit_idx: Vec<usize> = inner
                    .iter()
                    .enumerate()
                    .filter(|(w, _)| *w != v)
                    .flat_map(|(_, fold)| fold.iter().copied())
                    .collect();
                let fit_data = train_data.subset(&fit_idx)?;
                let seed = component_seed(
                    cfg.seed,
                    0x1000 + ((f as u64) << 16) + ((g as u64) << 8) + v as u64,
                );
                let model = candidate.train(&fit_data, seed)?;
                let scores = score_all(&model, &train_data, val_idx);
                total += auc(&scores, &labels_at(&train_data, val_idx))?;
            }
            inner_mean_auc.push(total / inner.len() as f64);
        }

        let chosen_index = inner_mean_auc.iter().enumerate().fold(0, |best, (i, &v)| {
            if v > inner_mean_auc[best] {
                i
            } else {
                best
            }
        });

        let model =
            grid[chosen_index].train(&train_data, component_seed(cfg.seed, 0x2000 + f as u64))?;
        let scores = score_all(&model, data, test_idx);
        let test_labels = labels_at(data, test_idx);
        folds.push(FoldReport {
            fold: f,
            chosen_index,
            chosen: grid[chosen_index].describe(),
            inner_mean_auc,
            auc: auc(&scores, &test_labels)?,
            auprc: auprc(&scores, &test_labels)?,
        });
    }

    let mean_auc = folds.iter().map(|f| f.auc).sum::<f64>() / folds.len() as f64;
    let mean_auprc = folds.iter().map(|f| f.auprc).sum::<f64>() / folds.len() as f64;
    Ok(CvReport {
        folds,
        mean_auc,
        mean_auprc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::SvmParams;
    use crate::dataset::Provenance;
    use proptest::prelude::*;

    fn dataset(features: Vec<Vec<f64>>, labels: Vec<u8>) -> LabeledDataset {
        LabeledDataset::new(features, labels, Provenance::Adhoc).unwrap()
    }

    fn separable(n: usize) -> LabeledDataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let off = (i % 9) as f64 * 0.1;
            features.push(vec![2.0 + off, 1.0 - off]);
            labels.push(1);
            features.push(vec![-2.0 - off, off - 1.0]);
            labels.push(0);
        }
        dataset(features, labels)
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<u8> = (0..30).map(|i| (i % 3 == 0) as u8).collect();
        let folds = stratified_folds(&labels, 3, 42).unwrap();
        assert_eq!(folds.len(), 3);

        let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..30).collect::<Vec<_>>());

        // 10 positives and 20 negatives split 3 ways.
        for fold in &folds {
            let pos = fold.iter().filter(|&&i| labels[i] == 1).count();
            let neg = fold.len() - pos;
            assert!((3..=4).contains(&pos), "fold has {pos} positives");
            assert!((6..=7).contains(&neg), "fold has {neg} negatives");
        }
    }

    #[test]
    fn folds_deterministic_per_seed() {
        let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        assert_eq!(
            stratified_folds(&labels, 4, 7).unwrap(),
            stratified_folds(&labels, 4, 7).unwrap()
        );
        assert_ne!(
            stratified_folds(&labels, 4, 7).unwrap(),
            stratified_folds(&labels, 4, 8).unwrap()
        );
    }

    #[test]
    fn folds_reject_bad_inputs() {
        let labels = [1u8, 0, 1, 0];
        assert!(stratified_folds(&labels, 1, 0).is_err());
        assert!(stratified_folds(&labels, 3, 0).is_err()); // 2 positives < 3 folds
        assert!(stratified_folds(&[1, 1, 1, 1], 2, 0).is_err());
    }

    #[test]
    fn nested_cv_prefers_the_working_candidate() {
        let data = separable(30);
        // A zero-epoch SVM scores 0.5 everywhere; the trained one separates.
        let grid = vec![
            ClassifierConfig::Svm(SvmParams {
                epochs: 0,
                ..SvmParams::default()
            }),
            ClassifierConfig::Svm(SvmParams::default()),
        ];
        let report = nested_cv(&data, &grid, &CvConfig::default()).unwrap();
        assert_eq!(report.folds.len(), 3);
        for fold in &report.folds {
            assert_eq!(
                fold.chosen_index, 1,
                "fold {} picked {}",
                fold.fold, fold.chosen
            );
            assert_eq!(fold.inner_mean_auc.len(), 2);
        }
        assert!(report.mean_auc > 0.95);
        assert!(report.mean_auprc > 0.95);
    }

    #[test]
    fn nested_cv_breaks_ties_toward_the_first_candidate() {
        let data = separable(30);
        let grid = vec![
            ClassifierConfig::Svm(SvmParams::default()),
            ClassifierConfig::Svm(SvmParams::default()),
        ];
        let report = nested_cv(&data, &grid, &CvConfig::default()).unwrap();
        for fold in &report.folds {
            assert_eq!(fold.chosen_index, 0);
        }
    }

    #[test]
    fn nested_cv_deterministic() {
        let data = separable(24);
        let grid = ClassifierConfig::Svm(SvmParams::default()).default_grid();
        let cfg = CvConfig {
            seed: 5,
            ..CvConfig::default()
        };
        let a = nested_cv(&data, &grid, &cfg).unwrap();
        let b = nested_cv(&data, &grid, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nested_cv_rejects_unusable_inputs() {
        let data = separable(24);
        assert!(nested_cv(&data, &[], &CvConfig::default()).is_err());
        // 4 keys cannot stratify 3 outer + 3 inner folds.
        let tiny = separable(4);
        assert!(nested_cv(
            &tiny,
            &[ClassifierConfig::Svm(SvmParams::default())],
            &CvConfig::default()
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn folds_always_partition(
            flags in prop::collection::vec(any::<bool>(), 12..60),
            n_folds in 2usize..5,
            seed in any::<u64>(),
        ) {
            let labels: Vec<u8> = flags.iter().map(|&b| b as u8).collect();
            let n_pos: usize = labels.iter().map(|&l| l as usize).sum();
            let n_neg = labels.len() - n_pos;
            prop_assume!(n_pos >= n_folds && n_neg >= n_folds);
            let folds = stratified_folds(&labels, n_folds, seed).unwrap();
            let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..labels.len()).collect::<Vec<_>>());
            for fold in &folds {
                prop_assert!(fold.iter().any(|&i| labels[i] == 1));
                prop_assert!(fold.iter().any(|&i| labels[i] == 0));
            }
        }
    }
}
