//! Error metrics and closed-form evaluators of the completion error bounds.
//!
//! The bounds carry unspecified absolute constants, so every evaluator takes
//! the constant explicitly through [`BoundParams::c_const`]. Only the scaling
//! in `n`, `m`, `r`, `d`, `zeta` and `nu` is meaningful.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::edm::double_center;
use crate::error::{Error, Result};

/// `(1/n) ||d_hat - d_true||_F`, the root-mean-square entry error.
pub fn per_entry_error(d_hat: &DMatrix<f64>, d_true: &DMatrix<f64>) -> Result<f64> {
    if d_hat.shape() != d_true.shape() || d_hat.nrows() != d_hat.ncols() {
        return Err(Error::shape(format!(
            "per-entry error of {:?} against {:?}",
            d_hat.shape(),
            d_true.shape()
        )));
    }
    Ok((d_hat - d_true).norm() / d_hat.nrows() as f64)
}

/// `(1/n) ||J X^T X J - J Xh^T Xh J||_F`, invariant to rigid motions of either argument.
///
/// The two clouds may live in different dimensions; only the node counts must agree.
pub fn dist_metric(x: &DMatrix<f64>, x_hat: &DMatrix<f64>) -> Result<f64> {
    let n = x.ncols();
    if x_hat.ncols() != n {
        return Err(Error::shape(format!(
            "dist between {n} and {} nodes",
            x_hat.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("dist of empty point sets"));
    }
    let g = double_center(&(x.transpose() * x));
    let g_hat = double_center(&(x_hat.transpose() * x_hat));
    Ok((g - g_hat).norm() / n as f64)
}

/// Inputs shared by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    /// Expected number of observed entries, `p * n^2`.
    pub m: f64,
    pub r: usize,
    pub d: usize,
    /// Upper bound on the entries of the true EDM.
    pub zeta: f64,
    pub nu: f64,
    pub c_const: f64,
}

impl BoundParams {
    pub fn from_probability(
        n: usize,
        p: f64,
        r: usize,
        d: usize,
        zeta: f64,
        nu: f64,
        c_const: f64,
    ) -> Self {
        Self {
            n,
            m: p * (n * n) as f64,
            r,
            d,
            zeta,
            nu,
            c_const,
        }
    }

    fn validate(&self) -> Result<()> {
        let nf = self.n as f64;
        if self.n == 0 || self.r == 0 || self.d == 0 {
            return Err(Error::invalid("n, r and d must be positive"));
        }
        if !(self.m > 0.0) || self.m > nf * nf {
            return Err(Error::invalid(format!(
                "m = {} must lie in (0, n^2]",
                self.m
            )));
        }
        if !(self.zeta > 0.0) || !(self.nu >= 0.0) || !(self.c_const > 0.0) {
            return Err(Error::invalid(
                "zeta and c must be positive, nu nonnegative",
            ));
        }
        Ok(())
    }

    /// `zeta` must dominate every entry of the matrix it describes.
    pub fn check_zeta(&self, d: &DMatrix<f64>) -> Result<()> {
        let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max > self.zeta {
            return Err(Error::invalid(format!(
                "zeta = {} below max entry {max}",
                self.zeta
            )));
        }
        Ok(())
    }

    /// Hypotheses of the bounds that fail for these parameters. Not fatal.
    pub fn warnings(&self) -> Vec<String> {
        let nf = self.n as f64;
        let mut out = Vec::new();
        if self.m < nf * nf.ln() {
            out.push(format!(
                "m = {} is below n log n = {:.3}; the expectation bound assumes otherwise",
                self.m,
                nf * nf.ln()
            ));
        }
        let rn = (self.r * self.n) as f64;
        if rn < 512.0 * std::f64::consts::LN_2 {
            out.push(format!(
                "r n = {rn} is below 512 log 2; the minimax bound assumes otherwise"
            ));
        }
        out
    }

    fn scale(&self) -> f64 {
        self.zeta + self.nu
    }
}

/// Expected per-entry completion error bound `C sqrt(r n / m) (zeta + nu)`.
pub fn expectation_bound(bp: &BoundParams) -> Result<f64> {
    bp.validate()?;
    Ok(bp.c_const * ((bp.r * bp.n) as f64 / bp.m).sqrt() * bp.scale())
}

/// Right-hand side of the tail bound on `||D_hat - D||_F >= t`, before clipping at one.
///
/// `n exp(-c min(m t^2 / (n^3 r s^2), m t / (n^2 sqrt(r) s)))` with `s = zeta + nu`.
/// The two arguments of the minimum cross at `t = n sqrt(r) s`.
pub fn tail_bound(t: f64, bp: &BoundParams) -> Result<f64> {
    bp.validate()?;
    if !(t >= 0.0) {
        return Err(Error::invalid(format!(
            "tail threshold t = {t} must be >= 0"
        )));
    }
    let nf = bp.n as f64;
    let rf = bp.r as f64;
    let s = bp.scale();
    let quadratic = bp.m * t * t / (nf.powi(3) * rf * s * s);
    let linear = bp.m * t / (nf * nf * rf.sqrt() * s);
    Ok(nf * (-bp.c_const * quadratic.min(linear)).exp())
}

/// Expected `dist` bound for the MDS coordinates, `C sqrt(d n / m) (zeta + nu)`.
pub fn coordinate_bound(bp: &BoundParams) -> Result<f64> {
    bp.validate()?;
    Ok(bp.c_const * ((bp.d * bp.n) as f64 / bp.m).sqrt() * bp.scale())
}

/// Minimax lower bound on `E ||D_hat - D||_F`, `(n nu / 64) sqrt(r n / m)`.
///
/// This bounds the total Frobenius error, not the per-entry one.
pub fn minimax_lower_bound(bp: &BoundParams) -> Result<f64> {
    bp.validate()?;
    let nf = bp.n as f64;
    Ok(nf * bp.nu / 64.0 * ((bp.r * bp.n) as f64 / bp.m).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "{} x values vs {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in fit"));
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("x values are all equal"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Least-squares slope of `log_y` on `log_x`, for empirical rate checks.
pub fn fit_rate(log_x: &[f64], log_y: &[f64]) -> Result<f64> {
    if log_x.len() < 3 {
        return Err(Error::invalid(format!(
            "rate fit needs at least 3 points, got {}",
            log_x.len()
        )));
    }
    if log_x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("log_x must be strictly increasing"));
    }
    Ok(linear_fit(log_x, log_y)?.slope)
}
