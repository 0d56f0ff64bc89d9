//! Canonical binary encoding for trained classifiers.
//!
//! The encoded length is the size charged against a filter's bit budget, so
//! the layout is frozen: little-endian throughout, magic `LBC1`, version
//! u16, family tag u8 (0 = SVM, 1 = network, 2 = forest), feature dimension
//! u32, then the family payload:
//!
//! - SVM: bias f64, then the `q` weights.
//! - Network: layer count u16, each layer width u32 (first = `q`,
//!   last = 1), then per connection layer the row-major `(out, in)` weight
//!   matrix followed by the `out` biases.
//! - Forest: tree count u32, then per tree a node count u32 and its nodes:
//!   tag u8 0 for a leaf (class u8) or 1 for a split (feature u32,
//!   threshold f64, left u32, right u32; children always point forward).
//!
//! Training-only hyperparameters (SVM `c`, network learning rate, forest
//! `delta`) are not persisted; decoding restores their defaults.

use super::forest::{Node, RfModel, Tree};
use super::nn::NnModel;
use super::svm::SvmModel;
use super::{Classifier, TrainedClassifier};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"LBC1";
pub const VERSION: u16 = 1;

const KIND_SVM: u8 = 0;
const KIND_NN: u8 = 1;
const KIND_RF: u8 = 2;

const HEADER_LEN: u64 = 11;

pub fn svm_encoded_len(q: usize) -> u64 {
    HEADER_LEN + 8 * (q as u64 + 1)
}

pub fn nn_encoded_len(layer_sizes: &[usize]) -> u64 {
    let params: u64 = layer_sizes
        .windows(2)
        .map(|w| (w[0] as u64 + 1) * w[1] as u64)
        .sum();
    HEADER_LEN + 2 + 4 * layer_sizes.len() as u64 + 8 * params
}

pub fn rf_encoded_len(trees: &[Tree]) -> u64 {
    let nodes: u64 = trees
        .iter()
        .map(|t| {
            4 + t
                .nodes
                .iter()
                .map(|n| match n {
                    Node::Leaf { .. } => 2u64,
                    Node::Split { .. } => 21,
                })
                .sum::<u64>()
        })
        .sum();
    HEADER_LEN + 4 + nodes
}

fn header(kind: u8, q: usize, out: &mut Vec<u8>) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    out.extend_from_slice(&(q as u32).to_le_bytes());
}

pub fn encode(c: &TrainedClassifier) -> Vec<u8> {
    let mut out = Vec::new();
    match c {
        TrainedClassifier::Svm(m) => {
            header(KIND_SVM, m.w.len(), &mut out);
            out.extend_from_slice(&m.b.to_le_bytes());
            for w in &m.w {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        TrainedClassifier::Nn(m) => {
            header(KIND_NN, m.layer_sizes[0], &mut out);
            out.extend_from_slice(&(m.layer_sizes.len() as u16).to_le_bytes());
            for &s in &m.layer_sizes {
                out.extend_from_slice(&(s as u32).to_le_bytes());
            }
            for l in 0..m.weights.len() {
                for w in &m.weights[l] {
                    out.extend_from_slice(&w.to_le_bytes());
                }
                for b in &m.biases[l] {
                    out.extend_from_slice(&b.to_le_bytes());
                }
            }
        }
        TrainedClassifier::Rf(m) => {
            header(KIND_RF, m.feature_dim(), &mut out);
            out.extend_from_slice(&(m.trees.len() as u32).to_le_bytes());
            for tree in &m.trees {
                out.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
                for node in &tree.nodes {
                    match node {
                        Node::Leaf { class } => {
                            out.push(0);
                            out.push(*class);
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            out.push(1);
                            out.extend_from_slice(&feature.to_le_bytes());
                            out.extend_from_slice(&threshold.to_le_bytes());
                            out.extend_from_slice(&left.to_le_bytes());
                            out.extend_from_slice(&right.to_le_bytes());
                        }
                    }
                }
            }
        }
    }
    debug_assert_eq!(out.len() as u64 * 8, super::Classifier::size_bits(c));
    out
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated encoding: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after encoding",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn decode(bytes: &[u8]) -> Result<TrainedClassifier> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, expected \"LBC1\"".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported classifier encoding version {version}"
        )));
    }
    let kind = r.u8()?;
    let q = r.u32()? as usize;
    if q == 0 {
        return Err(Error::Format("feature dimension must be positive".into()));
    }

    let model = match kind {
        KIND_SVM => {
            let b = r.f64()?;
            let mut w = Vec::with_capacity(q);
            for _ in 0..q {
                w.push(r.f64()?);
            }
            TrainedClassifier::Svm(SvmModel { w, b, c: 1.0 })
        }
        KIND_NN => {
            let n_layers = r.u16()? as usize;
            if n_layers < 2 {
                return Err(Error::Format(
                    "network needs at least input and output layers".into(),
                ));
            }
            let mut layer_sizes = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                layer_sizes.push(r.u32()? as usize);
            }
            if layer_sizes[0] != q {
                return Err(Error::Format(
                    "first layer width must equal the feature dimension".into(),
                ));
            }
            if *layer_sizes.last().unwrap() != 1 {
                return Err(Error::Format("output layer must have width 1".into()));
            }
            if layer_sizes.contains(&0) {
                return Err(Error::Format("layer widths must be positive".into()));
            }
            let mut weights = Vec::with_capacity(n_layers - 1);
            let mut biases = Vec::with_capacity(n_layers - 1);
            for l in 0..n_layers - 1 {
                let (n_in, n_out) = (layer_sizes[l], layer_sizes[l + 1]);
                let mut w = Vec::with_capacity(n_out * n_in);
                for _ in 0..n_out * n_in {
                    w.push(r.f64()?);
                }
                let mut b = Vec::with_capacity(n_out);
                for _ in 0..n_out {
                    b.push(r.f64()?);
                }
                weights.push(w);
                biases.push(b);
            }
            TrainedClassifier::Nn(NnModel {
                layer_sizes,
                weights,
                biases,
                lr: 1e-3,
            })
        }
        KIND_RF => {
            let n_trees = r.u32()? as usize;
            if n_trees == 0 {
                return Err(Error::Format("forest needs at least one tree".into()));
            }
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes = r.u32()? as usize;
                if n_nodes == 0 {
                    return Err(Error::Format("tree needs at least one node".into()));
                }
                let mut nodes = Vec::with_capacity(n_nodes);
                for at in 0..n_nodes {
                    match r.u8()? {
                        0 => {
                            let class = r.u8()?;
                            if class > 1 {
                                return Err(Error::Format(format!(
                                    "leaf class must be 0 or 1, got {class}"
                                )));
                            }
                            nodes.push(Node::Leaf { class });
                        }
                        1 => {
                            let feature = r.u32()?;
                            let threshold = r.f64()?;
                            let left = r.u32()?;
                            let right = r.u32()?;
                            if feature as usize >= q {
                                return Err(Error::Format(format!(
                                    "split feature {feature} out of range for dimension {q}"
                                )));
                            }
                            if !threshold.is_finite() {
                                return Err(Error::Format("split threshold must be finite".into()));
                            }
                            let forward = |c: u32| (c as usize) > at && (c as usize) < n_nodes;
                            if !forward(left) || !forward(right) {
                                return Err(Error::Format(format!(
                                    "split children ({left}, {right}) must point forward within {n_nodes} nodes"
                                )));
                            }
                            nodes.push(Node::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            });
                        }
                        tag => {
                            return Err(Error::Format(format!("unknown node tag {tag}")));
                        }
                    }
                }
                trees.push(Tree { nodes });
            }
            TrainedClassifier::Rf(RfModel::new(trees, q, 1))
        }
        other => {
            return Err(Error::Format(format!("unknown classifier kind {other}")));
        }
    };
    r.finish()?;
    Ok(model)
}
