//! Classic multidimensional scaling and rigid alignment for display.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::completion::{svd_desc, EIG_EPS, EIG_MAX_ITERS};
use crate::edm::gram_from_edm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MdsResult {
    /// `d x n` estimated coordinates, centered.
    pub x_hat: DMatrix<f64>,
    pub diagnostics: MdsDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsDiagnostics {
    /// The `d` largest eigenvalues of the centered Gram matrix after clamping, descending.
    pub eigenvalues_used: Vec<f64>,
    /// Total magnitude of negative eigenvalues among the top `d` that were clamped to zero.
    pub negative_mass: f64,
}

impl MdsResult {
    pub fn eigenvalues_used(&self) -> &[f64] {
        &self.diagnostics.eigenvalues_used
    }

    pub fn negative_mass(&self) -> f64 {
        self.diagnostics.negative_mass
    }
}

/// Coordinates from the top-`d` eigenpairs of `-1/2 J D J`.
///
/// Eigenvalues are ranked by algebraic value. Negative ones that make the cut
/// are clamped to zero so the square root stays real.
pub fn classic_mds(d_hat: &DMatrix<f64>, d: usize) -> Result<MdsResult> {
    let n = d_hat.nrows();
    if n != d_hat.ncols() {
        return Err(Error::shape(format!(
            "classic MDS needs a square matrix, got {}x{}",
            n,
            d_hat.ncols()
        )));
    }
    if d == 0 || d >= n {
        return Err(Error::invalid(format!(
            "embedding dimension {d} must satisfy 1 <= d < n = {n}"
        )));
    }
    if d_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "non-finite entry entering eigendecomposition".into(),
        ));
    }
    let gram = gram_from_edm(d_hat)?;
    let eig = SymmetricEigen::try_new(gram, EIG_EPS, EIG_MAX_ITERS).ok_or_else(|| {
        Error::Numeric(format!(
            "symmetric eigendecomposition of order {n} did not converge"
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut x_hat = DMatrix::zeros(d, n);
    let mut used = Vec::with_capacity(d);
    let mut negative_mass = 0.0;
    for (k, &idx) in order[..d].iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        let clamped = if lambda < 0.0 {
            negative_mass += -lambda;
            0.0
        } else {
            lambda
        };
        used.push(clamped);
        let scale = clamped.sqrt();
        x_hat.set_row(k, &(eig.eigenvectors.column(idx).transpose() * scale));
    }

    Ok(MdsResult {
        x_hat,
        diagnostics: MdsDiagnostics {
            eigenvalues_used: used,
            negative_mass,
        },
    })
}

fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    x.column_mean()
}

fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = column_mean(x);
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= &mean;
    }
    out
}

/// Orthogonal Procrustes fit of `x_hat` onto `x` (reflections allowed) plus translation.
///
/// For plotting and debugging; the error metrics never depend on it.
pub fn align_rigid(x: &DMatrix<f64>, x_hat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.shape() != x_hat.shape() {
        return Err(Error::shape(format!(
            "cannot align {:?} onto {:?}",
            x_hat.shape(),
            x.shape()
        )));
    }
    let target_mean = column_mean(x);
    let xc = center_columns(x);
    let yc = center_columns(x_hat);
    let cross = &yc * xc.transpose();
    let (u, _, v) = svd_desc(&cross)?;
    let rotation = v * u.transpose();
    let mut aligned = rotation * yc;
    for mut col in aligned.column_iter_mut() {
        col += &target_mean;
    }
    Ok(aligned)
}
