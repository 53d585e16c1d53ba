use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optspace::OptSpaceConfig;

/// Only version this build reads or writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SvdReconstruct,
    #[serde(rename = "optspace")]
    OptSpace,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SvdReconstruct => "svd_reconstruct",
            Algorithm::OptSpace => "optspace",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd_reconstruct" | "svd" => Ok(Algorithm::SvdReconstruct),
            "optspace" => Ok(Algorithm::OptSpace),
            other => Err(Error::invalid(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordDist {
    /// Each coordinate i.i.d. `Uniform(coord_lo, coord_hi)`.
    Uniform,
}

fn default_true() -> bool {
    true
}

/// A sweep over `(p, nu)` with a fixed scene size.
///
/// Stored as flat TOML; see `configs/fig1.toml` for a complete file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub coord_dist: CoordDist,
    pub coord_lo: f64,
    pub coord_hi: f64,
    pub p_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    pub r: usize,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub master_seed: u64,
    pub outputs: PathBuf,
    /// Reuse trial 0's point cloud for every trial instead of drawing a fresh one.
    #[serde(default)]
    pub fixed_cloud: bool,
    /// Wall time breaks byte-identical reruns, so it is written as 0 unless enabled.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default = "defaults::max_iters")]
    pub optspace_max_iters: usize,
    #[serde(default = "defaults::tol")]
    pub optspace_tol: f64,
    #[serde(default = "default_true")]
    pub optspace_trim: bool,
    #[serde(default = "defaults::ridge_scale")]
    pub optspace_ridge_scale: f64,
    #[serde(default = "defaults::ridge_start")]
    pub optspace_ridge_start: f64,
    #[serde(default = "defaults::ridge_decay")]
    pub optspace_ridge_decay: f64,
}

mod defaults {
    use crate::optspace::OptSpaceConfig;

    fn base() -> OptSpaceConfig {
        OptSpaceConfig::new(1)
    }
    pub fn max_iters() -> usize {
        base().max_iters
    }
    pub fn tol() -> f64 {
        base().tol
    }
    pub fn ridge_scale() -> f64 {
        base().ridge_scale
    }
    pub fn ridge_start() -> f64 {
        base().ridge_start
    }
    pub fn ridge_decay() -> f64 {
        base().ridge_decay
    }
}

impl ExperimentConfig {
    /// Baseline with every field set; callers override what they sweep.
    pub fn new(
        n: usize,
        d: usize,
        p_grid: Vec<f64>,
        nu_grid: Vec<f64>,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        let os = OptSpaceConfig::new(d + 2);
        Self {
            schema_version: SCHEMA_VERSION,
            n,
            d,
            coord_dist: CoordDist::Uniform,
            coord_lo: -1.0,
            coord_hi: 1.0,
            p_grid,
            nu_grid,
            r: d + 2,
            algorithms: vec![Algorithm::SvdReconstruct],
            trials,
            master_seed,
            outputs: PathBuf::from("results"),
            fixed_cloud: false,
            record_wall_time: false,
            optspace_max_iters: os.max_iters,
            optspace_tol: os.tol,
            optspace_trim: os.trim,
            optspace_ridge_scale: os.ridge_scale,
            optspace_ridge_start: os.ridge_start,
            optspace_ridge_decay: os.ridge_decay,
        }
    }

    /// The noise-level comparison: 50 nodes in (-1, 1)^3, p = 0.5, 20 trials per level,
    /// nu in {0.1, 0.3, ..., 3.9, 4.0}, rank 5 for both algorithms.
    pub fn fig1() -> Self {
        let mut nu_grid: Vec<f64> = (0..20).map(|k| (1 + 2 * k) as f64 / 10.0).collect();
        nu_grid.push(4.0);
        let mut cfg = Self::new(50, 3, vec![0.5], nu_grid, 20, 20_190_417);
        cfg.algorithms = vec![Algorithm::SvdReconstruct, Algorithm::OptSpace];
        cfg.outputs = PathBuf::from("results/fig1");
        cfg
    }

    pub fn optspace(&self) -> OptSpaceConfig {
        OptSpaceConfig {
            r: self.r,
            max_iters: self.optspace_max_iters,
            tol: self.optspace_tol,
            trim: self.optspace_trim,
            ridge_scale: self.optspace_ridge_scale,
            ridge_start: self.optspace_ridge_start,
            ridge_decay: self.optspace_ridge_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} unsupported, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        if self.d == 0 || self.n <= self.d {
            return bad(format!(
                "need 1 <= d < n, got d = {}, n = {}",
                self.d, self.n
            ));
        }
        if !(self.coord_lo < self.coord_hi)
            || !self.coord_lo.is_finite()
            || !self.coord_hi.is_finite()
        {
            return bad(format!(
                "coordinate range ({}, {}) is empty",
                self.coord_lo, self.coord_hi
            ));
        }
        if self.p_grid.is_empty() || self.nu_grid.is_empty() || self.algorithms.is_empty() {
            return bad("p_grid, nu_grid and algorithms must be nonempty".into());
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return bad(format!("p = {p} not in (0, 1]"));
        }
        if let Some(nu) = self
            .nu_grid
            .iter()
            .find(|nu| !(**nu >= 0.0 && nu.is_finite()))
        {
            return bad(format!("nu = {nu} must be finite and >= 0"));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.r == 0 || self.r > self.n {
            return bad(format!("rank r = {} must be in 1..=n", self.r));
        }
        self.optspace()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let text = self.to_toml_string()?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}
