use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a dataset came from; carried along so reports can echo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Synthetic {
        a: f64,
        r: f64,
        rho: f64,
        n1: usize,
        gamma: f64,
        seed: u64,
    },
    Csv {
        path: String,
    },
    Kmer {
        k: usize,
    },
    Adhoc,
}

/// A binary-labeled dataset with a fixed feature dimension.
///
/// Label 1 marks keys (set members), label 0 marks non-keys. Rows are dense
/// `f64` feature vectors; all rows share the same dimension and every value
/// is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    dim: usize,
    provenance: Provenance,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u8>, provenance: Provenance) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidArgument("dataset has no rows".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("feature rows are empty".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} features, expected {}",
                    i,
                    row.len(),
                    dim
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} contains non-finite value {v}"
                )));
            }
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::InvalidArgument(format!(
                "label at row {i} is {l}, expected 0 or 1"
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn n_negative(&self) -> usize {
        self.len() - self.n_positive()
    }

    /// Indices of positive (key) and negative (non-key) rows, in row order.
    pub fn indices_by_label(&self) -> (Vec<usize>, Vec<usize>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if l == 1 {
                pos.push(i);
            } else {
                neg.push(i);
            }
        }
        (pos, neg)
    }

    /// Owned copies of the key rows (label 1).
    pub fn keys(&self) -> Vec<Vec<f64>> {
        self.rows_with_label(1)
    }

    /// Owned copies of the non-key rows (label 0).
    pub fn non_keys(&self) -> Vec<Vec<f64>> {
        self.rows_with_label(0)
    }

    fn rows_with_label(&self, wanted: u8) -> Vec<Vec<f64>> {
        self.features
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == wanted)
            .map(|(row, _)| row.clone())
            .collect()
    }

    /// Ratio of the majority class size to the minority class size.
    /// Returns infinity when one class is absent.
    pub fn imbalance_ratio(&self) -> f64 {
        let pos = self.n_positive();
        let neg = self.len() - pos;
        let (hi, lo) = (pos.max(neg), pos.min(neg));
        if lo == 0 {
            f64::INFINITY
        } else {
            hi as f64 / lo as f64
        }
    }

    /// A new dataset holding the given rows of this one, preserving order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidArgument(format!(
                    "row index {} out of range for dataset of {} rows",
                    i,
                    self.len()
                )));
            }
            features.push(self.features[i].clone());
            labels.push(self.labels[i]);
        }
        Self::new(features, labels, self.provenance.clone())
    }
}
