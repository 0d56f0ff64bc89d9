//! Classification-complexity measures for binary datasets: the
//! Fisher-discriminant ratio F1v (geometry of class overlap) and the class
//! balance measure C2. Both increase from 0 (easy) toward 1 (hard).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Per-class and pooled second-moment structure of a binary dataset.
///
/// `within` is the prior-weighted average of the per-class covariance
/// matrices (each normalized by its class count); `between` is the outer
/// product of the centroid difference `u = mean_pos - mean_neg`.
#[derive(Debug, Clone)]
pub struct ScatterDecomposition {
    pub within: DMatrix<f64>,
    pub between: DMatrix<f64>,
    pub mean_diff: DVector<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
}

pub fn scatter_decomposition(data: &LabeledDataset) -> Result<ScatterDecomposition> {
    let (pos_idx, neg_idx) = data.indices_by_label();
    if pos_idx.is_empty() || neg_idx.is_empty() {
        return Err(Error::DegenerateData(
            "complexity measures need both classes".into(),
        ));
    }
    let q = data.dim();

    let centroid = |idx: &[usize]| {
        let mut mu = DVector::zeros(q);
        for &i in idx {
            mu += DVector::from_column_slice(data.row(i));
        }
        mu / idx.len() as f64
    };
    let scatter = |idx: &[usize], mu: &DVector<f64>| {
        let mut s = DMatrix::zeros(q, q);
        for &i in idx {
            let d = DVector::from_column_slice(data.row(i)) - mu;
            s.ger(1.0, &d, &d, 1.0);
        }
        s / idx.len() as f64
    };

    let mu_pos = centroid(&pos_idx);
    let mu_neg = centroid(&neg_idx);
    let p_pos = pos_idx.len() as f64 / data.len() as f64;
    let p_neg = 1.0 - p_pos;
    let within = scatter(&pos_idx, &mu_pos) * p_pos + scatter(&neg_idx, &mu_neg) * p_neg;
    let mean_diff = mu_pos - mu_neg;
    let between = &mean_diff * mean_diff.transpose();

    Ok(ScatterDecomposition {
        within,
        between,
        mean_diff,
        n_pos: pos_idx.len(),
        n_neg: neg_idx.len(),
    })
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition,
/// inverting only eigenvalues above `1e-12` times the largest magnitude.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(m.nrows(), m.ncols(), "pseudo-inverse input must be square");
    let eig = m.clone().symmetric_eigen();
    let max_mag = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let tol = 1e-12 * max_mag;
    let inv_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&v| if v.abs() > tol { 1.0 / v } else { 0.0 }),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.transpose()
}

/// Directional Fisher ratio: project onto the discriminant
/// `d = within⁺ (mean_pos - mean_neg)` and compare within-class to
/// between-class variance along it:
/// `F1v = dᵀWd / (dᵀWd + dᵀBd)`, in `[0, 1]`, higher = more overlap.
///
/// Degenerate geometry resolves to the extremes: identical centroids give
/// 1.0 (nothing separates the classes), zero within-class variance along
/// the discriminant gives 0.0 (perfectly separable).
pub fn f1v(data: &LabeledDataset) -> Result<f64> {
    let sd = scatter_decomposition(data)?;
    if sd.mean_diff.iter().all(|&v| v == 0.0) {
        return Ok(1.0);
    }
    let d = pseudo_inverse(&sd.within) * &sd.mean_diff;
    let dwd = (d.transpose() * &sd.within * &d)[(0, 0)];
    let dbd = {
        let proj = d.dot(&sd.mean_diff);
        proj * proj
    };
    if dwd <= 0.0 {
        return Ok(0.0);
    }
    Ok((dwd / (dwd + dbd)).clamp(0.0, 1.0))
}

/// Class balance measure `C2 = (n1 - n2)² / (n1² + n2²)`: 0 when balanced,
/// 1 when one class is absent. Computed in integer arithmetic before the
/// final division. Undefined on an empty dataset.
pub fn c2(n1: u64, n2: u64) -> Result<f64> {
    if n1 == 0 && n2 == 0 {
        return Err(Error::UndefinedMetric(
            "C2 needs at least one sample".into(),
        ));
    }
    let diff = (n1 as i128 - n2 as i128).unsigned_abs();
    let num = diff * diff;
    let den = (n1 as u128) * (n1 as u128) + (n2 as u128) * (n2 as u128);
    Ok(num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub f1v: f64,
    pub c2: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

pub fn complexity_report(data: &LabeledDataset) -> Result<ComplexityReport> {
    Ok(ComplexityReport {
        f1v: f1v(data)?,
        c2: c2(data.n_positive() as u64, data.n_negative() as u64)?,
        n_pos: data.n_positive(),
        n_neg: data.n_negative(),
    })
}
