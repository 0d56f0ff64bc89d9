//! Score-producing classifiers used as the learned stage of a filter.
//!
//! All three families map a feature vector to a membership score in
//! `[0, 1]`; higher scores mean "more likely a key". The canonical binary
//! encoding (see [`encoding`]) defines each model's footprint for budget
//! accounting.

pub mod encoding;
pub mod forest;
pub mod nn;
pub mod svm;

pub use forest::{train_rf, RfModel, RfParams};
pub use nn::{train_nn, NnModel, NnParams};
pub use svm::{train_svm, SvmModel, SvmParams};

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Maps feature vectors to membership scores in `[0, 1]`.
pub trait Classifier {
    fn score(&self, x: &[f64]) -> f64;
    fn feature_dim(&self) -> usize;
    /// Bits this model occupies in a filter's budget: the length of its
    /// canonical encoding.
    fn size_bits(&self) -> u64;
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-class sample weights `(negative, positive)`. Cost-sensitive training
/// weights positives by `|negatives| / |positives|` so each class contributes
/// equally to the loss; otherwise both weights are 1. Fails on single-class
/// data since every trainer here needs both classes.
pub(crate) fn class_weights(labels: &[u8], cost_sensitive: bool) -> Result<(f64, f64)> {
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateData(
            "training requires at least one key and one non-key".into(),
        ));
    }
    if cost_sensitive {
        Ok((1.0, n_neg as f64 / n_pos as f64))
    } else {
        Ok((1.0, 1.0))
    }
}

/// A trained model of any supported family.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedClassifier {
    Svm(SvmModel),
    Nn(NnModel),
    Rf(RfModel),
}

impl TrainedClassifier {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Svm(_) => "svm",
            Self::Nn(_) => "nn",
            Self::Rf(_) => "rf",
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        encoding::encode(self)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        encoding::decode(bytes)
    }
}

impl Classifier for TrainedClassifier {
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            Self::Svm(m) => m.score(x),
            Self::Nn(m) => m.score(x),
            Self::Rf(m) => m.score(x),
        }
    }

    fn feature_dim(&self) -> usize {
        match self {
            Self::Svm(m) => m.feature_dim(),
            Self::Nn(m) => m.feature_dim(),
            Self::Rf(m) => m.feature_dim(),
        }
    }

    fn size_bits(&self) -> u64 {
        match self {
            Self::Svm(m) => m.size_bits(),
            Self::Nn(m) => m.size_bits(),
            Self::Rf(m) => m.size_bits(),
        }
    }
}

/// Which family to train and with what hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Svm(SvmParams),
    Nn(NnParams),
    Rf(RfParams),
}

impl ClassifierConfig {
    pub fn train(&self, data: &LabeledDataset, seed: u64) -> Result<TrainedClassifier> {
        match self {
            Self::Svm(p) => Ok(TrainedClassifier::Svm(train_svm(data, p, seed)?)),
            Self::Nn(p) => Ok(TrainedClassifier::Nn(train_nn(data, p, seed)?)),
            Self::Rf(p) => Ok(TrainedClassifier::Rf(train_rf(data, p, seed)?)),
        }
    }

    /// The default hyperparameter search grid for this family, produced by
    /// varying the searched knob and keeping everything else fixed:
    /// SVM regularization `c` over `{0.1, 1, 10, 100, 1000}`, network
    /// learning rate over `{1e-4, 1e-3}`, forest leaf size `delta` over
    /// `{1, 3, 5}`.
    pub fn default_grid(&self) -> Vec<ClassifierConfig> {
        match self {
            Self::Svm(p) => [0.1, 1.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|&c| Self::Svm(SvmParams { c, ..p.clone() }))
                .collect(),
            Self::Nn(p) => [1e-4, 1e-3]
                .iter()
                .map(|&lr| Self::Nn(NnParams { lr, ..p.clone() }))
                .collect(),
            Self::Rf(p) => [1usize, 3, 5]
                .iter()
                .map(|&delta| Self::Rf(RfParams { delta, ..p.clone() }))
                .collect(),
        }
    }

    /// Short label for report rows, e.g. `svm(c=10)` or `nn[25](lr=0.001)`.
    pub fn describe(&self) -> String {
        match self {
            Self::Svm(p) => format!("svm(c={})", p.c),
            Self::Nn(p) => {
                let sizes: Vec<String> = p.hidden.iter().map(|h| h.to_string()).collect();
                format!("nn[{}](lr={})", sizes.join(","), p.lr)
            }
            Self::Rf(p) => format!("rf(t={},delta={})", p.trees, p.delta),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Svm(_) => "svm",
            Self::Nn(_) => "nn",
            Self::Rf(_) => "rf",
        }
    }

    /// Copy of this config with cost-sensitive (or imbalance-aware) training
    /// switched on or off.
    pub fn with_cost_sensitive(&self, on: bool) -> Self {
        match self {
            Self::Svm(p) => Self::Svm(SvmParams {
                cost_sensitive: on,
                ..p.clone()
            }),
            Self::Nn(p) => Self::Nn(NnParams {
                cost_sensitive: on,
                ..p.clone()
            }),
            Self::Rf(p) => Self::Rf(RfParams {
                imbalance_aware: on,
                ..p.clone()
            }),
        }
    }
}
