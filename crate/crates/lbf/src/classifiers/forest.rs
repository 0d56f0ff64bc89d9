//! Random forest of CART trees: Gini-gain splits over a random feature
//! subset of size `ceil(sqrt(q))` per node, bootstrap samples of the full
//! training size, growth until leaves hold at most `delta` samples or are
//! pure (or no split has positive gain). The score is the fraction of trees
//! voting "key".

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_weights, Classifier};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub trees: usize,
    /// Maximum leaf size: nodes with at most this many samples stop splitting.
    pub delta: usize,
    /// Draw each bootstrap sample by first picking a class with a fair coin,
    /// then a sample uniformly within it, equalizing class mass per tree.
    pub imbalance_aware: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            trees: 10,
            delta: 1,
            imbalance_aware: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        class: u8,
    },
    /// Samples with `x[feature] <= threshold` go left. Child indices always
    /// point forward in the node array, so traversal terminates.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    feature_dim: usize,
    /// Leaf size the forest was grown with; informational, not part of the
    /// canonical encoding.
    pub delta: usize,
}

impl RfModel {
    pub fn new(trees: Vec<Tree>, feature_dim: usize, delta: usize) -> Self {
        Self {
            trees,
            feature_dim,
            delta,
        }
    }
}

impl Classifier for RfModel {
    fn score(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.feature_dim);
        let votes = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        votes as f64 / self.trees.len() as f64
    }

    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn size_bits(&self) -> u64 {
        super::encoding::rf_encoded_len(&self.trees) * 8
    }
}

fn gini(n_pos: usize, n: usize) -> f64 {
    let p = n_pos as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn majority_leaf(n_pos: usize, n: usize) -> Node {
    // Exact ties go to the key class.
    Node::Leaf {
        class: (2 * n_pos >= n) as u8,
    }
}

/// Best `(feature, threshold)` by Gini gain over a random subset of `mtry`
/// features, or `None` when no candidate split has positive gain. Ties keep
/// the first candidate encountered (feature draw order, thresholds
/// ascending), which keeps growth deterministic for a fixed seed.
fn best_split(
    data: &LabeledDataset,
    idx: &[usize],
    mtry: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, f64)> {
    let n = idx.len();
    let total_pos = idx.iter().filter(|&&i| data.label(i) == 1).count();
    let parent = gini(total_pos, n);

    let mut best: Option<(f64, usize, f64)> = None;
    let mut vals: Vec<(f64, u8)> = Vec::with_capacity(n);
    for f in rand::seq::index::sample(rng, data.dim(), mtry) {
        vals.clear();
        vals.extend(idx.iter().map(|&i| (data.row(i)[f], data.label(i))));
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_pos = 0usize;
        for i in 0..n - 1 {
            left_pos += vals[i].1 as usize;
            if vals[i].0 < vals[i + 1].0 {
                let n_left = i + 1;
                let n_right = n - n_left;
                let weighted = (n_left as f64 * gini(left_pos, n_left)
                    + n_right as f64 * gini(total_pos - left_pos, n_right))
                    / n as f64;
                let gain = parent - weighted;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, (vals[i].0 + vals[i + 1].0) / 2.0));
                }
            }
        }
    }
    best.filter(|&(gain, _, _)| gain > 1e-12)
        .map(|(_, f, thr)| (f, thr))
}

fn grow_tree(
    data: &LabeledDataset,
    sample: Vec<usize>,
    delta: usize,
    mtry: usize,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut nodes = vec![Node::Leaf { class: 0 }];
    let mut work = vec![(0usize, sample)];
    while let Some((slot, idx)) = work.pop() {
        let n = idx.len();
        let n_pos = idx.iter().filter(|&&i| data.label(i) == 1).count();
        if n <= delta || n_pos == 0 || n_pos == n {
            nodes[slot] = majority_leaf(n_pos, n);
            continue;
        }
        match best_split(data, &idx, mtry, rng) {
            None => nodes[slot] = majority_leaf(n_pos, n),
            Some((feature, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
                    .into_iter()
                    .partition(|&i| data.row(i)[feature] <= threshold);
                let left = nodes.len() as u32;
                nodes.push(Node::Leaf { class: 0 });
                let right = nodes.len() as u32;
                nodes.push(Node::Leaf { class: 0 });
                nodes[slot] = Node::Split {
                    feature: feature as u32,
                    threshold,
                    left,
                    right,
                };
                work.push((right as usize, right_idx));
                work.push((left as usize, left_idx));
            }
        }
    }
    Tree { nodes }
}

pub(crate) fn bootstrap_indices(
    labels: &[u8],
    imbalance_aware: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = labels.len();
    if !imbalance_aware {
        return (0..n).map(|_| rng.gen_range(0..n)).collect();
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    (0..n)
        .map(|_| {
            let class = if rng.gen_bool(0.5) { &pos } else { &neg };
            class[rng.gen_range(0..class.len())]
        })
        .collect()
}

pub fn train_rf(data: &LabeledDataset, params: &RfParams, seed: u64) -> Result<RfModel> {
    if params.trees == 0 {
        return Err(Error::InvalidArgument(
            "forest needs at least one tree".into(),
        ));
    }
    if params.delta == 0 {
        return Err(Error::InvalidArgument(
            "leaf size delta must be at least 1".into(),
        ));
    }
    // Validates both classes are present.
    class_weights(data.labels(), false)?;

    let mtry = (data.dim() as f64).sqrt().ceil() as usize;
    let mtry = mtry.clamp(1, data.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..params.trees)
        .map(|_| {
            let sample = bootstrap_indices(data.labels(), params.imbalance_aware, &mut rng);
            grow_tree(data, sample, params.delta, mtry, &mut rng)
        })
        .collect();
    Ok(RfModel::new(trees, data.dim(), params.delta))
}
