//! Localization of nodes from a randomly observed, noisy Euclidean distance
//! matrix (EDM).
//!
//! The pipeline rescales the observed entries by the sampling probability,
//! truncates to rank `r` with an SVD, symmetrizes, and recovers coordinates
//! with classic multidimensional scaling. Around it sit an alternating least
//! squares comparator, closed-form error-bound evaluators, a packing-set
//! generator for minimax experiments, and a seeded Monte Carlo harness.
//!
//! ```
//! use svdmds::{edm_from_points, observe, svd_reconstruct, classic_mds, dist_metric};
//! use svdmds::{PointCloud, SeedSpec};
//!
//! let x = PointCloud::uniform(3, 30, -1.0, 1.0, &SeedSpec::new(7, 0)).unwrap();
//! let d = edm_from_points(&x);
//! let obs = observe(&d, 1.0, 0.0, &SeedSpec::new(7, 0)).unwrap();
//! let completed = svd_reconstruct(&obs, 5).unwrap();
//! let mds = classic_mds(&completed.d_hat, 3).unwrap();
//! assert!(dist_metric(x.coords(), &mds.x_hat).unwrap() < 1e-8);
//! ```

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod completion;
pub mod edm;
pub mod error;
pub mod experiments;
pub mod io;
pub mod mds;
pub mod metrics;
pub mod optspace;
pub mod packing;
pub mod sampling;

pub use nalgebra::DMatrix;

pub use completion::{
    estimate_p, svd_reconstruct, symmetrize, truncate_rank, unbiased_estimate, CompletionResult,
};
pub use edm::{
    centering_matrix, double_center, edm_from_points, gram_from_edm, numerical_rank,
    CenteringMatrix, Edm, PointCloud, RANK_TOLERANCE,
};
pub use error::{Error, Result};
pub use mds::{align_rigid, classic_mds, MdsResult};
pub use metrics::{
    coordinate_bound, dist_metric, expectation_bound, fit_rate, linear_fit, minimax_lower_bound,
    per_entry_error, tail_bound, BoundParams, LinearFit,
};
pub use optspace::{optspace_complete, OptSpaceConfig};
pub use packing::{
    generate_packing, packing_cardinality, verify_packing, PackingSet, Verification,
};
pub use sampling::{
    observe, sample_mask, sample_noise, MaskMatrix, NoiseMatrix, Observation, SeedSpec,
};
