//! Linear SVM trained with the Pegasos stochastic subgradient method.
//!
//! Hinge loss with L2 regularization `lambda = 1 / (c * n)`, step size
//! `eta_t = 1 / (lambda * t)`, and an unregularized bias. Scores are the
//! sigmoid of the raw margin — uncalibrated, but order-preserving, which is
//! all the threshold search needs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_weights, sigmoid, Classifier};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Inverse regularization strength; `lambda = 1 / (c * n)`.
    pub c: f64,
    /// Weight positive samples by the class ratio `|D-| / |D+|`.
    pub cost_sensitive: bool,
    /// Passes over the training set; each pass visits every sample once in
    /// a fresh shuffled order.
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            cost_sensitive: false,
            epochs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    /// Regularization strength the model was trained with; informational,
    /// not part of the canonical encoding.
    pub c: f64,
}

impl SvmModel {
    pub fn raw_margin(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.w.len());
        self.w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + self.b
    }
}

impl Classifier for SvmModel {
    fn score(&self, x: &[f64]) -> f64 {
        let z = self.raw_margin(x);
        // Opposing overflows in the dot product can yield NaN; fall back to
        // indifference rather than emit a score outside [0, 1].
        if z.is_nan() {
            return 0.5;
        }
        sigmoid(z)
    }

    fn feature_dim(&self) -> usize {
        self.w.len()
    }

    fn size_bits(&self) -> u64 {
        super::encoding::svm_encoded_len(self.w.len()) * 8
    }
}

pub fn train_svm(data: &LabeledDataset, params: &SvmParams, seed: u64) -> Result<SvmModel> {
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "regularization c must be positive and finite, got {}",
            params.c
        )));
    }
    let (w_neg, w_pos) = class_weights(data.labels(), params.cost_sensitive)?;

    let n = data.len();
    let q = data.dim();
    let lambda = 1.0 / (params.c * n as f64);
    let mut w = vec![0.0; q];
    let mut b = 0.0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = data.row(i);
            let y = if data.label(i) == 1 { 1.0 } else { -1.0 };
            let u = if data.label(i) == 1 { w_pos } else { w_neg };
            let margin = y * (w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b);

            let shrink = 1.0 - eta * lambda;
            for wi in &mut w {
                *wi *= shrink;
            }
            if margin < 1.0 {
                let step = eta * u * y;
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi += step * xi;
                }
                b += step;
            }
        }
    }

    Ok(SvmModel { w, b, c: params.c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use crate::metrics::auc;

    fn dataset(features: Vec<Vec<f64>>, labels: Vec<u8>) -> LabeledDataset {
        LabeledDataset::new(features, labels, Provenance::Adhoc).unwrap()
    }

    fn separable(n: usize) -> LabeledDataset {
        // Positives on x0 > 2, negatives on x0 < -2; trivially separable.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let jitter = (i % 7) as f64 * 0.1;
            features.push(vec![3.0 + jitter, 1.0]);
            labels.push(1);
            features.push(vec![-3.0 - jitter, -1.0]);
            labels.push(0);
        }
        dataset(features, labels)
    }

    #[test]
    fn zero_epochs_gives_indifferent_scores() {
        let data = separable(10);
        let params = SvmParams {
            epochs: 0,
            ..SvmParams::default()
        };
        let m = train_svm(&data, &params, 0).unwrap();
        assert_eq!(m.w, vec![0.0, 0.0]);
        assert_eq!(m.b, 0.0);
        assert!((m.score(&[42.0, -17.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separates_linear_data() {
        let data = separable(100);
        let m = train_svm(&data, &SvmParams::default(), 7).unwrap();
        let scores: Vec<f64> = data.features().iter().map(|x| m.score(x)).collect();
        let a = auc(&scores, data.labels()).unwrap();
        assert!(a > 0.99, "AUC {a} too low for separable data");
        assert!(m.score(&[5.0, 1.0]) > 0.5);
        assert!(m.score(&[-5.0, -1.0]) < 0.5);
    }

    #[test]
    fn deterministic_per_seed() {
        let data = separable(50);
        let a = train_svm(&data, &SvmParams::default(), 3).unwrap();
        let b = train_svm(&data, &SvmParams::default(), 3).unwrap();
        assert_eq!(a, b);
        let c = train_svm(&data, &SvmParams::default(), 4).unwrap();
        assert_ne!(a.w, c.w);
    }

    #[test]
    fn cost_sensitive_shifts_scores_toward_minority() {
        // 1:10 imbalance with overlap; cost weighting should raise the
        // minority (positive) class's scores.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            features.push(vec![1.0 + 0.05 * (i % 5) as f64]);
            labels.push(1);
        }
        for i in 0..200 {
            features.push(vec![-0.2 + 0.05 * (i % 9) as f64]);
            labels.push(0);
        }
        let data = dataset(features, labels);
        let plain = train_svm(&data, &SvmParams::default(), 11).unwrap();
        let weighted = train_svm(
            &data,
            &SvmParams {
                cost_sensitive: true,
                ..SvmParams::default()
            },
            11,
        )
        .unwrap();
        let mean_pos = |m: &SvmModel| {
            data.features()
                .iter()
                .zip(data.labels())
                .filter(|(_, &l)| l == 1)
                .map(|(x, _)| m.score(x))
                .sum::<f64>()
                / 20.0
        };
        assert!(mean_pos(&weighted) > mean_pos(&plain));
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = separable(5);
        let bad_c = SvmParams {
            c: 0.0,
            ..SvmParams::default()
        };
        assert!(train_svm(&data, &bad_c, 0).is_err());

        let one_class = dataset(vec![vec![1.0], vec![2.0]], vec![1, 1]);
        assert!(train_svm(&one_class, &SvmParams::default(), 0).is_err());
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let m = SvmModel {
            w: vec![1e300, -1e300],
            b: 1e300,
            c: 1.0,
        };
        for x in [[1e300, 1e300], [-1e300, 1e300], [0.0, 0.0]] {
            let s = m.score(&x);
            assert!((0.0..=1.0).contains(&s), "score {s} out of range");
        }
    }
}
