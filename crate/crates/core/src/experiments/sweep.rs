use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use crate::completion::{svd_reconstruct, CompletionResult};
use crate::edm::{edm_from_points, Edm, PointCloud};
use crate::error::Result;
use crate::mds::classic_mds;
use crate::metrics::{dist_metric, per_entry_error};
use crate::optspace::optspace_complete;
use crate::sampling::{observe, Observation, SeedSpec};

/// One algorithm run on one trial at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub trial: usize,
    pub p: f64,
    pub nu: f64,
    pub per_entry_error: f64,
    pub frob_error: f64,
    pub dist_error: f64,
    pub wall_time_ms: f64,
    /// `;`-separated diagnostics; empty when nothing notable happened.
    pub flags: String,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.flags.split(';').any(|f| f.starts_with("error"))
    }
}

fn scene(cfg: &ExperimentConfig, trial: usize) -> Result<(PointCloud, Edm)> {
    let cloud_trial = if cfg.fixed_cloud { 0 } else { trial as u64 };
    let cloud = PointCloud::uniform(
        cfg.d,
        cfg.n,
        cfg.coord_lo,
        cfg.coord_hi,
        &SeedSpec::new(cfg.master_seed, cloud_trial),
    )?;
    let d = edm_from_points(&cloud);
    Ok((cloud, d))
}

fn complete(alg: Algorithm, obs: &Observation, cfg: &ExperimentConfig) -> Result<CompletionResult> {
    match alg {
        Algorithm::SvdReconstruct => svd_reconstruct(obs, cfg.r),
        Algorithm::OptSpace => optspace_complete(obs, &cfg.optspace()),
    }
}

fn evaluate(
    alg: Algorithm,
    obs: &Observation,
    cloud: &PointCloud,
    d: &DMatrix<f64>,
    cfg: &ExperimentConfig,
) -> (f64, f64, f64, Vec<String>) {
    let outcome = complete(alg, obs, cfg).and_then(|res| {
        let per_entry = per_entry_error(&res.d_hat, d)?;
        let frob = (&res.d_hat - d).norm();
        let mds = classic_mds(&res.d_hat, cfg.d)?;
        let dist = dist_metric(cloud.coords(), &mds.x_hat)?;
        let mut flags = res.diagnostics.flags;
        if mds.negative_mass() > 0.0 {
            flags.push("negative_eigenvalues_clamped".into());
        }
        Ok((per_entry, frob, dist, flags))
    });
    match outcome {
        Ok(v) => v,
        Err(e) => {
            let kind = if e.is_numeric() {
                "error_numeric"
            } else {
                "error"
            };
            let msg = e.to_string().replace([';', ',', '\n'], " ");
            (f64::NAN, f64::NAN, f64::NAN, vec![format!("{kind}: {msg}")])
        }
    }
}

/// All records for one trial at one grid point, algorithms in config order.
pub fn run_trial(
    cfg: &ExperimentConfig,
    trial: usize,
    p: f64,
    nu: f64,
) -> Result<Vec<TrialRecord>> {
    let (cloud, d) = scene(cfg, trial)?;
    let obs = observe(&d, p, nu, &SeedSpec::new(cfg.master_seed, trial as u64))?;
    let records = cfg
        .algorithms
        .iter()
        .map(|&alg| {
            let start = Instant::now();
            let (per_entry_error, frob_error, dist_error, flags) =
                evaluate(alg, &obs, &cloud, d.matrix(), cfg);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            TrialRecord {
                algorithm: alg,
                trial,
                p,
                nu,
                per_entry_error,
                frob_error,
                dist_error,
                wall_time_ms: if cfg.record_wall_time { elapsed } else { 0.0 },
                flags: flags.join(";"),
            }
        })
        .collect();
    Ok(records)
}

/// Runs every `(trial, p, nu)` job in parallel. Algorithm failures are
/// recorded in `flags` with NaN errors; only scene-generation errors abort.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let jobs: Vec<(usize, f64, f64)> = (0..cfg.trials)
        .flat_map(|t| {
            cfg.p_grid
                .iter()
                .flat_map(move |&p| cfg.nu_grid.iter().map(move |&nu| (t, p, nu)))
        })
        .collect();
    let per_job: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(t, p, nu)| run_trial(cfg, t, p, nu))
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_count_and_order() {
        let mut cfg = ExperimentConfig::new(12, 2, vec![0.5, 1.0], vec![0.0, 0.3, 1.0], 3, 1);
        cfg.algorithms = vec![Algorithm::SvdReconstruct, Algorithm::OptSpace];
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 3 * 2 * 3 * 2);
        assert_eq!(recs[0].trial, 0);
        assert_eq!(recs[0].algorithm, Algorithm::SvdReconstruct);
        assert_eq!(recs[1].algorithm, Algorithm::OptSpace);
        assert_eq!(recs.last().unwrap().trial, 2);
        assert!(recs.iter().all(|r| r.wall_time_ms == 0.0));
    }

    #[test]
    fn exact_recovery_grid() {
        let mut cfg = ExperimentConfig::new(20, 3, vec![1.0], vec![0.0], 3, 5);
        cfg.algorithms = vec![Algorithm::SvdReconstruct, Algorithm::OptSpace];
        for rec in run_sweep(&cfg).unwrap() {
            let (_, d) = scene(&cfg, rec.trial).unwrap();
            assert!(rec.frob_error <= 1e-6 * d.matrix().norm(), "{rec:?}");
            assert!(rec.dist_error <= 1e-8);
        }
    }

    #[test]
    fn fixed_cloud_reuses_trial_zero() {
        let mut cfg = ExperimentConfig::new(10, 2, vec![1.0], vec![0.0], 2, 5);
        cfg.fixed_cloud = true;
        assert_eq!(scene(&cfg, 0).unwrap().0, scene(&cfg, 1).unwrap().0);
        cfg.fixed_cloud = false;
        assert_ne!(scene(&cfg, 0).unwrap().0, scene(&cfg, 1).unwrap().0);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        // A rank above n fails inside each algorithm, not in scene generation.
        let mut cfg = ExperimentConfig::new(8, 2, vec![0.5], vec![0.1], 1, 5);
        cfg.algorithms = vec![Algorithm::SvdReconstruct, Algorithm::OptSpace];
        cfg.r = 9;
        let recs = run_trial(&cfg, 0, 0.5, 0.1).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert!(r.failed(), "{r:?}");
            assert!(r.frob_error.is_nan());
        }
    }
}
