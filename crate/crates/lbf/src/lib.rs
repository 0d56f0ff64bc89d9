//! Learned Bloom filters and a benchmark harness for comparing them against
//! classic Bloom filters under a shared bit budget.
//!
//! The crate provides:
//!
//! - [`bloom`]: classic Bloom filter with double hashing, budget sizing
//!   formulas, and a stable binary format.
//! - [`classifiers`]: three from-scratch score-producing classifiers (linear
//!   SVM trained with Pegasos, a small feed-forward network, and a random
//!   forest) with a canonical binary encoding used for size accounting.
//! - [`filters`]: learned filter constructions (LBF, SLBF, ADA-BF) that
//!   combine a classifier with backup/initial Bloom filters under a total
//!   bit budget, plus false-positive-rate estimation and query timing.
//! - [`metrics`], [`model_select`]: ranking metrics (AUC, AUPRC) and nested
//!   stratified cross-validation for hyperparameter selection.
//! - [`complexity`]: dataset classification-complexity measures (F1v, C2).
//! - [`datagen`]: synthetic dataset generation and loaders for CSV and k-mer
//!   inputs.
//! - [`harness`]: the end-to-end experiment protocol (split, train, build,
//!   measure) with CSV/JSON reporting.

pub mod bloom;
pub mod classifiers;
pub mod complexity;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod filters;
pub mod harness;
pub mod metrics;
pub mod model_select;

pub use error::{Error, Result};
