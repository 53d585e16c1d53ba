//! EDM completion by rescaling, rank truncation and symmetrization.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::edm::symmetrize_in_place;
use crate::error::{Error, Result};
use crate::sampling::{MaskMatrix, Observation};

pub(crate) const EIG_EPS: f64 = f64::EPSILON;
pub(crate) const EIG_MAX_ITERS: usize = 10_000;

/// Relative gap below which `sigma_r` and `sigma_{r+1}` count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// A completed distance matrix and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub d_hat: DMatrix<f64>,
    pub diagnostics: CompletionDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CompletionDiagnostics {
    pub algorithm: String,
    pub r: usize,
    /// Singular values of the spectral step, descending.
    pub kept_singular_values: Vec<f64>,
    /// Sum of squared discarded singular values.
    pub discarded_energy: f64,
    pub degenerate_spectrum: bool,
    /// Refinement sweeps, zero for one-shot methods.
    pub iterations: usize,
    pub converged: bool,
    /// Objective value before the first sweep and after each one.
    pub objective_trace: Vec<f64>,
    pub flags: Vec<String>,
}

impl CompletionResult {
    pub fn r(&self) -> usize {
        self.diagnostics.r
    }

    pub fn kept_singular_values(&self) -> &[f64] {
        &self.diagnostics.kept_singular_values
    }
}

/// Output of a rank truncation with the spectrum bookkeeping attached.
#[derive(Debug, Clone)]
pub(crate) struct Truncation {
    pub approx: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub kept: Vec<f64>,
    pub discarded_energy: f64,
    pub degenerate: bool,
}

/// `S = Y / p`, an unbiased estimate of `D` when unobserved entries are guessed as zero.
pub fn unbiased_estimate(obs: &Observation) -> Result<DMatrix<f64>> {
    if !(obs.p > 0.0 && obs.p <= 1.0) {
        return Err(Error::invalid(format!("cannot rescale by p = {}", obs.p)));
    }
    Ok(&obs.y / obs.p)
}

/// Thin SVD `s = U diag(sigma) V^T` with `sigma` descending, `min(rows, cols)` terms.
///
/// Computed through a symmetric eigendecomposition: of `s` itself when it is
/// symmetric, otherwise of the dilation `[[0, s], [s^T, 0]]`, whose positive
/// eigenpairs are `(sigma_i, [u_i; v_i] / sqrt 2)`. nalgebra's bidiagonal SVD
/// misconverges on some exactly rank-deficient inputs; its symmetric solver does not.
/// Equal singular values keep the solver's order (stable sort).
pub(crate) fn svd_desc(s: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = s.shape();
    let k = rows.min(cols);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry entering SVD".into()));
    }
    let eig = |m: DMatrix<f64>| {
        let n = m.nrows();
        SymmetricEigen::try_new(m, EIG_EPS, EIG_MAX_ITERS).ok_or_else(|| {
            Error::Numeric(format!(
                "eigendecomposition of {n}x{n} matrix did not converge"
            ))
        })
    };
    if rows == cols && *s == s.transpose() {
        let e = eig(s.clone())?;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| e.eigenvalues[b].abs().total_cmp(&e.eigenvalues[a].abs()));
        let mut u = DMatrix::zeros(k, k);
        let mut v = DMatrix::zeros(k, k);
        let mut sigma = Vec::with_capacity(k);
        for (c, &i) in order.iter().enumerate() {
            let lam = e.eigenvalues[i];
            let q = e.eigenvectors.column(i);
            u.set_column(c, &q);
            v.set_column(c, &(q * if lam < 0.0 { -1.0 } else { 1.0 }));
            sigma.push(lam.abs());
        }
        return Ok((u, sigma, v));
    }
    let mut h = DMatrix::zeros(rows + cols, rows + cols);
    h.view_mut((0, rows), (rows, cols)).copy_from(s);
    h.view_mut((rows, 0), (cols, rows))
        .copy_from(&s.transpose());
    let e = eig(h)?;
    let mut order: Vec<usize> = (0..rows + cols).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let mut u = DMatrix::zeros(rows, k);
    let mut v = DMatrix::zeros(cols, k);
    let mut sigma = Vec::with_capacity(k);
    for (c, &i) in order[..k].iter().enumerate() {
        let q = e.eigenvectors.column(i);
        let (qu, qv) = (q.rows(0, rows), q.rows(rows, cols));
        // At sigma = 0 the halves need not have equal norm; their product is unused there.
        let (nu, nv) = (qu.norm(), qv.norm());
        if nu > 0.0 {
            u.set_column(c, &(qu / nu));
        }
        if nv > 0.0 {
            v.set_column(c, &(qv / nv));
        }
        sigma.push(e.eigenvalues[i].max(0.0));
    }
    Ok((u, sigma, v))
}

/// Best rank-`r` approximation in Frobenius norm.
pub fn truncate_rank(s: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    Ok(truncate_detailed(s, r)?.approx)
}

pub(crate) fn truncate_detailed(s: &DMatrix<f64>, r: usize) -> Result<Truncation> {
    let (rows, cols) = s.shape();
    let k = rows.min(cols);
    if r == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    if r > k {
        return Err(Error::invalid(format!("rank {r} exceeds matrix order {k}")));
    }
    let (u_all, sigma, v_all) = svd_desc(s)?;
    let kept: Vec<f64> = sigma[..r].to_vec();
    let discarded_energy = sigma[r..].iter().map(|x| x * x).sum();
    let degenerate = r < k && (sigma[r - 1] - sigma[r]).abs() <= TIE_TOLERANCE * sigma[0];
    let u = u_all.columns(0, r).into_owned();
    let v = v_all.columns(0, r).into_owned();
    let mut us = u.clone();
    for (c, s) in kept.iter().enumerate() {
        us.column_mut(c).scale_mut(*s);
    }
    let approx = &us * v.transpose();
    Ok(Truncation {
        approx,
        u,
        v,
        kept,
        discarded_energy,
        degenerate,
    })
}

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape(format!(
            "cannot symmetrize a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = m.clone();
    symmetrize_in_place(&mut out);
    Ok(out)
}

/// Rescale, truncate to rank `r`, symmetrize.
pub fn svd_reconstruct(obs: &Observation, r: usize) -> Result<CompletionResult> {
    let s = unbiased_estimate(obs)?;
    let t = truncate_detailed(&s, r)?;
    let d_hat = symmetrize(&t.approx)?;
    let mut flags = Vec::new();
    if t.degenerate {
        flags.push("degenerate_spectrum".to_string());
    }
    Ok(CompletionResult {
        d_hat,
        diagnostics: CompletionDiagnostics {
            algorithm: "svd_reconstruct".into(),
            r,
            kept_singular_values: t.kept,
            discarded_energy: t.discarded_energy,
            degenerate_spectrum: t.degenerate,
            iterations: 0,
            converged: true,
            objective_trace: Vec::new(),
            flags,
        },
    })
}

/// Fraction of observed entries on or above the diagonal.
///
/// Never substituted for a known `p` by the completion routines.
pub fn estimate_p(mask: &MaskMatrix) -> f64 {
    let n = mask.n() as f64;
    mask.upper_count() as f64 / (n * (n + 1.0) / 2.0)
}
