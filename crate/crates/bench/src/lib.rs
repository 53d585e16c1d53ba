//! Fixtures shared by the criterion benchmarks in `benches/`.

use svdmds::{edm_from_points, observe, Edm, Observation, PointCloud, SeedSpec};

/// A uniform cloud in (-1, 1)^3 and one observation of its EDM.
pub fn scene(n: usize, p: f64, nu: f64, seed: u64) -> (Edm, Observation) {
    let spec = SeedSpec::new(seed, 0);
    let d = edm_from_points(&PointCloud::uniform(3, n, -1.0, 1.0, &spec).expect("valid cloud"));
    let obs = observe(&d, p, nu, &spec).expect("valid observation");
    (d, obs)
}
