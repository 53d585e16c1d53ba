//! The random observation model `Y = mask ⊙ (D + E)`.
//!
//! Every entry on or above the diagonal, the diagonal included, is observed
//! independently with probability `p` and carries `N(0, nu^2)` noise; the lower
//! triangle mirrors the upper one.
//!
//! # Randomness
//!
//! All draws come from ChaCha20 (`rand_chacha::ChaCha20Rng`), which is
//! counter-based and bit-reproducible across platforms. A stream is keyed by
//! `(master_seed, trial_index, tag, sub_index)`; the four words are folded
//! through the SplitMix64 finalizer into a 256-bit ChaCha key. Trials never
//! share a generator, so they can run on any thread in any order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::edm::Edm;
use crate::error::{Error, Result};

/// Identifies one trial's family of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

/// Which consumer a stream belongs to. Distinct tags give decorrelated streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Cloud,
    Mask,
    Noise,
    Packing,
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Cloud => 0x636c_6f75_6400_0001,
            StreamTag::Mask => 0x6d61_736b_0000_0002,
            StreamTag::Noise => 0x6e6f_6973_6500_0003,
            StreamTag::Packing => 0x7061_636b_0000_0004,
        }
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    pub fn stream(&self, tag: StreamTag) -> ChaCha20Rng {
        self.stream_with(tag, 0)
    }

    /// Stream for the `sub`-th independent consumer under one tag.
    pub fn stream_with(&self, tag: StreamTag, sub: u64) -> ChaCha20Rng {
        let mut h = splitmix64(self.master_seed);
        h = splitmix64(h ^ self.trial_index);
        h = splitmix64(h ^ tag.code());
        h = splitmix64(h ^ sub);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        ChaCha20Rng::from_seed(key)
    }
}

/// Symmetric `{0, 1}` observation mask, stored as `f64` for direct use in products.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskMatrix {
    entries: DMatrix<f64>,
}

impl MaskMatrix {
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(Error::shape("mask must be square"));
        }
        for j in 0..n {
            for i in 0..n {
                let v = entries[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::invalid(format!(
                        "mask entry ({i}, {j}) = {v}, expected 0 or 1"
                    )));
                }
                if v != entries[(j, i)] {
                    return Err(Error::invalid(format!("mask not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.entries[(i, j)] != 0.0
    }

    /// Observed entries on or above the diagonal.
    pub fn upper_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|j| (0..=j).filter(|&i| self.is_observed(i, j)).count())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    entries: DMatrix<f64>,
}

impl NoiseMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// A masked noisy EDM together with the model parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: DMatrix<f64>,
    pub mask: MaskMatrix,
    pub p: f64,
    pub nu: f64,
    /// Present when the observation was sampled rather than loaded.
    pub seed: Option<SeedSpec>,
}

/// JSON sidecar stored next to `y.csv` and `mask.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMeta {
    pub n: usize,
    pub p: f64,
    pub nu: f64,
    pub master_seed: Option<u64>,
    pub trial_index: Option<u64>,
}

impl Observation {
    /// Wraps externally supplied data; `y` must vanish wherever the mask does.
    pub fn new(y: DMatrix<f64>, mask: MaskMatrix, p: f64, nu: f64) -> Result<Self> {
        check_p(p)?;
        check_nu(nu)?;
        if y.shape() != mask.matrix().shape() {
            return Err(Error::shape(format!(
                "y is {:?} but mask is {:?}",
                y.shape(),
                mask.matrix().shape()
            )));
        }
        let n = y.nrows();
        for j in 0..n {
            for i in 0..n {
                if !y[(i, j)].is_finite() {
                    return Err(Error::invalid(format!("y entry ({i}, {j}) is not finite")));
                }
                if !mask.is_observed(i, j) && y[(i, j)] != 0.0 {
                    return Err(Error::invalid(format!(
                        "y entry ({i}, {j}) is nonzero but unobserved"
                    )));
                }
                if y[(i, j)] != y[(j, i)] {
                    return Err(Error::invalid(format!("y not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            y,
            mask,
            p,
            nu,
            seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn meta(&self) -> ObservationMeta {
        ObservationMeta {
            n: self.n(),
            p: self.p,
            nu: self.nu,
            master_seed: self.seed.map(|s| s.master_seed),
            trial_index: self.seed.map(|s| s.trial_index),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "observation probability {p} not in (0, 1]"
        )))
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu >= 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "noise level {nu} must be finite and >= 0"
        )))
    }
}

/// Upper-triangle entries (diagonal included) are i.i.d. Bernoulli(p), drawn
/// column by column; the lower triangle mirrors them.
pub fn sample_mask(n: usize, p: f64, seed: &SeedSpec) -> Result<MaskMatrix> {
    if n == 0 {
        return Err(Error::invalid("mask needs n >= 1"));
    }
    check_p(p)?;
    let mut rng = seed.stream(StreamTag::Mask);
    let mut entries = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            // One uniform per entry even at p = 1 keeps the stream layout fixed.
            let u: f64 = rng.random();
            let v = if u < p { 1.0 } else { 0.0 };
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(MaskMatrix { entries })
}

/// Upper-triangle entries (diagonal included) are i.i.d. `N(0, nu^2)`.
pub fn sample_noise(n: usize, nu: f64, seed: &SeedSpec) -> Result<NoiseMatrix> {
    if n == 0 {
        return Err(Error::invalid("noise needs n >= 1"));
    }
    check_nu(nu)?;
    let mut rng = seed.stream(StreamTag::Noise);
    let mut entries = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let z: f64 = rng.sample(StandardNormal);
            let v = nu * z;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(NoiseMatrix { entries })
}

pub fn observe(d: &Edm, p: f64, nu: f64, seed: &SeedSpec) -> Result<Observation> {
    let n = d.n();
    let mask = sample_mask(n, p, seed)?;
    let noise = sample_noise(n, nu, seed)?;
    let y = (d.matrix() + noise.matrix()).component_mul(mask.matrix());
    Ok(Observation {
        y,
        mask,
        p,
        nu,
        seed: Some(*seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edm::{edm_from_points, PointCloud};

    fn upper(m: &DMatrix<f64>) -> Vec<f64> {
        let n = m.nrows();
        (0..n)
            .flat_map(|j| (0..=j).map(move |i| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect()
    }

    #[test]
    fn streams_depend_on_every_key_part() {
        let a = SeedSpec::new(1, 0);
        let first = |mut r: ChaCha20Rng| r.random::<u64>();
        let base = first(a.stream(StreamTag::Mask));
        assert_eq!(base, first(a.stream(StreamTag::Mask)));
        assert_ne!(base, first(a.stream(StreamTag::Noise)));
        assert_ne!(base, first(SeedSpec::new(1, 1).stream(StreamTag::Mask)));
        assert_ne!(base, first(SeedSpec::new(2, 0).stream(StreamTag::Mask)));
        assert_ne!(base, first(a.stream_with(StreamTag::Mask, 1)));
    }

    #[test]
    fn full_probability_gives_all_ones() {
        let m = sample_mask(7, 1.0, &SeedSpec::new(3, 0)).unwrap();
        assert!(m.matrix().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mask_fraction_concentrates() {
        // 20100 Bernoulli(1/2) draws; P(|frac - 1/2| > 0.05) is below 1e-40.
        let m = sample_mask(200, 0.5, &SeedSpec::new(99, 4)).unwrap();
        let u = upper(m.matrix());
        let frac = u.iter().sum::<f64>() / u.len() as f64;
        assert!((0.45..=0.55).contains(&frac), "fraction {frac}");
        assert_eq!(m.matrix(), &m.matrix().transpose());
    }

    #[test]
    fn bad_parameters_rejected() {
        let s = SeedSpec::new(0, 0);
        assert!(sample_mask(5, 0.0, &s).is_err());
        assert!(sample_mask(5, 1.5, &s).is_err());
        assert!(sample_mask(5, f64::NAN, &s).is_err());
        assert!(sample_noise(5, -0.1, &s).is_err());
        assert!(sample_noise(0, 1.0, &s).is_err());
    }

    #[test]
    fn zero_noise_is_zero() {
        let e = sample_noise(6, 0.0, &SeedSpec::new(1, 1)).unwrap();
        assert!(e.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_moments() {
        let e = sample_noise(200, 1.0, &SeedSpec::new(8, 0)).unwrap();
        assert_eq!(e.matrix(), &e.matrix().transpose());
        let u = upper(e.matrix());
        let n = u.len() as f64;
        let mean = u.iter().sum::<f64>() / n;
        let var = u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Standard errors: 1/sqrt(20100) = 0.007 for the mean, sqrt(2/20100) = 0.01 for the variance.
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "var {var}");
    }

    fn small_edm() -> Edm {
        edm_from_points(&PointCloud::uniform(2, 12, -1.0, 1.0, &SeedSpec::new(5, 0)).unwrap())
    }

    #[test]
    fn observe_full_noiseless_is_identity() {
        let d = small_edm();
        let obs = observe(&d, 1.0, 0.0, &SeedSpec::new(1, 2)).unwrap();
        assert_eq!(&obs.y, d.matrix());
    }

    #[test]
    fn noiseless_masking_keeps_observed_values() {
        let d = small_edm();
        let obs = observe(&d, 0.5, 0.0, &SeedSpec::new(1, 2)).unwrap();
        for (y, dv) in obs.y.iter().zip(d.matrix().iter()) {
            if *y != 0.0 {
                assert_eq!(y, dv);
            }
        }
    }

    #[test]
    fn observe_reproduces_model_and_is_deterministic() {
        let d = small_edm();
        let seed = SeedSpec::new(77, 3);
        let a = observe(&d, 0.4, 0.3, &seed).unwrap();
        let b = observe(&d, 0.4, 0.3, &seed).unwrap();
        assert_eq!(a, b);
        let mask = sample_mask(12, 0.4, &seed).unwrap();
        let noise = sample_noise(12, 0.3, &seed).unwrap();
        assert_eq!(a.mask, mask);
        for j in 0..12 {
            for i in 0..12 {
                let want = mask.matrix()[(i, j)] * (d.matrix()[(i, j)] + noise.matrix()[(i, j)]);
                assert_eq!(a.y[(i, j)], want);
            }
        }
        assert_eq!(a.y, a.y.transpose());
    }

    #[test]
    fn observation_constructor_validates() {
        let mask =
            MaskMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        let ok = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.2]);
        assert!(Observation::new(ok.clone(), mask.clone(), 0.5, 0.1).is_ok());
        let leak = DMatrix::from_row_slice(2, 2, &[0.1, 3.0, 3.0, 0.2]);
        assert!(Observation::new(leak, mask.clone(), 0.5, 0.1).is_err());
        assert!(Observation::new(ok, mask, 0.0, 0.1).is_err());
        assert!(
            MaskMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).is_err()
        );
        assert!(
            MaskMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).is_err()
        );
    }
}
