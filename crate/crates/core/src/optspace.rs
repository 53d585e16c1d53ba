//! Comparator completion routine: trimming, spectral initialization, then
//! alternating ridge least squares on the observed entries.
//!
//! The refinement minimizes
//!
//! ```text
//! F(U, V) = 1/2 sum_{(i,j) observed} (Y_ij - u_i . v_j)^2 + lambda/2 (||U||_F^2 + ||V||_F^2)
//! ```
//!
//! over `n x r` factors. `lambda` starts at `ridge_start` and halves every
//! sweep (by `ridge_decay`) until it reaches the floor
//! `max(ridge_scale * nu^2, 1e-10)`. The recorded objective is non-increasing:
//! each sweep cannot increase `F` at the current `lambda`, and lowering
//! `lambda` cannot increase it either. With `nu = 0` the floor is `1e-10` and
//! the method converges to the plain least-squares fit.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::completion::{symmetrize, truncate_detailed, CompletionDiagnostics, CompletionResult};
use crate::error::{Error, Result};
use crate::sampling::Observation;

/// Smallest ridge ever used; keeps every normal-equation system positive definite.
pub const MIN_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptSpaceConfig {
    pub r: usize,
    pub max_iters: usize,
    /// Stop once the relative objective decrease of a sweep at the final ridge is below this.
    pub tol: f64,
    pub trim: bool,
    /// Final ridge is `ridge_scale * nu^2`; zero gives plain least squares.
    pub ridge_scale: f64,
    pub ridge_start: f64,
    pub ridge_decay: f64,
}

impl OptSpaceConfig {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            max_iters: 100,
            tol: 1e-6,
            trim: true,
            ridge_scale: 1.0,
            ridge_start: 10.0,
            ridge_decay: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::invalid("OptSpace rank must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol = {} must be > 0", self.tol)));
        }
        if !(self.ridge_scale >= 0.0) || !(self.ridge_start > 0.0) {
            return Err(Error::invalid(
                "ridge_scale must be >= 0 and ridge_start > 0",
            ));
        }
        if !(self.ridge_decay > 0.0 && self.ridge_decay <= 1.0) {
            return Err(Error::invalid(format!(
                "ridge_decay = {} not in (0, 1]",
                self.ridge_decay
            )));
        }
        Ok(())
    }

    fn ridge_floor(&self, nu: f64) -> f64 {
        (self.ridge_scale * nu * nu).max(MIN_RIDGE)
    }
}

/// Rows (equivalently columns) whose observed count exceeds twice the mean.
fn overrepresented(obs: &Observation) -> Vec<usize> {
    let n = obs.n();
    let counts: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| obs.mask.is_observed(i, j)).count())
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / n as f64;
    (0..n).filter(|&i| counts[i] as f64 > 2.0 * mean).collect()
}

struct Problem<'a> {
    y: &'a DMatrix<f64>,
    /// Observed column indices per row; the mask is symmetric so these double as row indices per column.
    observed: Vec<Vec<usize>>,
    r: usize,
}

impl Problem<'_> {
    fn residual(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for (i, cols) in self.observed.iter().enumerate() {
            for &j in cols {
                let fit = u.row(i).dot(&v.row(j));
                total += (self.y[(i, j)] - fit).powi(2);
            }
        }
        total
    }

    fn objective(&self, u: &DMatrix<f64>, v: &DMatrix<f64>, lambda: f64) -> f64 {
        0.5 * self.residual(u, v) + 0.5 * lambda * (u.norm_squared() + v.norm_squared())
    }

    /// Re-solves every row of `target` with `fixed` held constant. Returns true
    /// when some row had fewer observations than the rank.
    fn sweep(&self, target: &mut DMatrix<f64>, fixed: &DMatrix<f64>, lambda: f64) -> bool {
        let r = self.r;
        let mut deficient = false;
        for (i, idx) in self.observed.iter().enumerate() {
            if idx.len() < r {
                deficient = true;
            }
            let mut gram = DMatrix::<f64>::zeros(r, r);
            let mut rhs = DVector::<f64>::zeros(r);
            for &j in idx {
                let f = fixed.row(j);
                let yv = self.y[(i, j)];
                for a in 0..r {
                    rhs[a] += f[a] * yv;
                    for b in 0..=a {
                        gram[(a, b)] += f[a] * f[b];
                    }
                }
            }
            for a in 0..r {
                for b in 0..a {
                    gram[(b, a)] = gram[(a, b)];
                }
                gram[(a, a)] += lambda;
            }
            let sol = match Cholesky::new(gram.clone()) {
                Some(ch) => ch.solve(&rhs),
                None => {
                    deficient = true;
                    let mut g = gram;
                    for a in 0..r {
                        g[(a, a)] += MIN_RIDGE * (1.0 + g[(a, a)].abs());
                    }
                    match Cholesky::new(g) {
                        Some(ch) => ch.solve(&rhs),
                        None => DVector::zeros(r),
                    }
                }
            };
            target.set_row(i, &sol.transpose());
        }
        deficient
    }
}

pub fn optspace_complete(obs: &Observation, cfg: &OptSpaceConfig) -> Result<CompletionResult> {
    cfg.validate()?;
    let n = obs.n();
    if cfg.r > n {
        return Err(Error::invalid(format!("rank {} exceeds n = {n}", cfg.r)));
    }
    let r = cfg.r;
    let mut flags = Vec::new();

    // Spectral initialization on the rescaled, optionally trimmed matrix.
    let mut start = &obs.y / obs.p;
    if cfg.trim {
        let heavy = overrepresented(obs);
        if !heavy.is_empty() {
            flags.push(format!("trimmed_rows={}", heavy.len()));
            for &i in &heavy {
                start.row_mut(i).fill(0.0);
                start.column_mut(i).fill(0.0);
            }
        }
    }
    let init = truncate_detailed(&start, r)?;
    let mut u = init.u.clone();
    let mut v = init.v.clone();
    for (c, s) in init.kept.iter().enumerate() {
        let root = s.sqrt();
        u.column_mut(c).scale_mut(root);
        v.column_mut(c).scale_mut(root);
    }
    if init.degenerate {
        flags.push("degenerate_spectrum".into());
    }

    let problem = Problem {
        y: &obs.y,
        observed: (0..n)
            .map(|i| (0..n).filter(|&j| obs.mask.is_observed(i, j)).collect())
            .collect(),
        r,
    };
    let y_t = obs.y.transpose();
    let problem_t = Problem {
        y: &y_t,
        observed: problem.observed.clone(),
        r,
    };

    let floor = cfg.ridge_floor(obs.nu);
    let mut lambda = cfg.ridge_start.max(floor);
    let mut trace = vec![problem.objective(&u, &v, lambda)];
    let mut deficient = false;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        deficient |= problem.sweep(&mut u, &v, lambda);
        deficient |= problem_t.sweep(&mut v, &u, lambda);
        let current = problem.objective(&u, &v, lambda);
        if !current.is_finite() {
            return Err(Error::Numeric("alternating least squares diverged".into()));
        }
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(current);
        let at_floor = lambda <= floor;
        if at_floor && previous - current <= cfg.tol * previous {
            converged = true;
            break;
        }
        lambda = (lambda * cfg.ridge_decay).max(floor);
    }
    if deficient {
        flags.push("ridge_regularized".into());
    }
    if !converged {
        flags.push("not_converged".into());
    }

    let d_hat = symmetrize(&(&u * v.transpose()))?;
    Ok(CompletionResult {
        d_hat,
        diagnostics: CompletionDiagnostics {
            algorithm: "optspace".into(),
            r,
            kept_singular_values: init.kept,
            discarded_energy: init.discarded_energy,
            degenerate_spectrum: init.degenerate,
            iterations,
            converged,
            objective_trace: trace,
            flags,
        },
    })
}
