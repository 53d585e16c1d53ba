//! Random construction of a delta-packing of symmetric, zero-diagonal,
//! rank-at-most-`r` matrices, and its verification.
//!
//! Each matrix has independent ±1 entries in rows `0..k` strictly above the
//! diagonal (`k = floor(r/2)`), mirrored below, and zeros everywhere else. It
//! is then rescaled to Frobenius norm `delta`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{SeedSpec, StreamTag};

/// Largest set generated without an explicit `sample_m`; verification is quadratic in it.
pub const MAX_CARDINALITY: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PackingSet {
    pub matrices: Vec<DMatrix<f64>>,
    pub n: usize,
    pub r: usize,
    pub delta: f64,
    /// `delta` divided by the closed-form pre-rescale norm.
    pub scale_used: f64,
    /// Full cardinality `floor(exp(r n / 128))`, even when fewer matrices were drawn.
    pub cardinality: u64,
    pub seed: u64,
    /// Frobenius norm of each matrix before rescaling.
    pub prescale_norms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub success: bool,
    /// Smallest pairwise Frobenius distance; infinite when there are no pairs
    /// (`null` in JSON).
    #[serde(with = "infinite_as_null")]
    pub min_pairwise: f64,
    pub norms_ok: bool,
    pub max_norm_error: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn check_hypotheses(n: usize, r: usize) -> Result<()> {
    if n < 10 {
        return Err(Error::invalid(format!(
            "packing needs n >= 10, got n = {n}"
        )));
    }
    if r < 2 || r > n {
        return Err(Error::invalid(format!(
            "packing needs 2 <= r <= n, got r = {r}, n = {n}"
        )));
    }
    Ok(())
}

/// `floor(exp(r n / 128))`.
///
/// `exp` of a nonzero rational is never an integer, so the float floor is only
/// wrong when rounding crosses an integer; the log comparisons correct that.
pub fn packing_cardinality(n: usize, r: usize) -> Result<u64> {
    check_hypotheses(n, r)?;
    let x = (r * n) as f64 / 128.0;
    let value = x.exp();
    if !(value < 1.8e19) {
        return Err(Error::invalid(format!("exp({x}) does not fit in 64 bits")));
    }
    let mut m = value.floor() as u64;
    while ((m + 1) as f64).ln() <= x {
        m += 1;
    }
    while m > 1 && (m as f64).ln() > x {
        m -= 1;
    }
    Ok(m)
}

/// Closed-form Frobenius norm of an unscaled draw:
/// `sqrt(r (n - r/4 - 1/2))` for even `r`, the same with `r - 1` for odd `r`.
pub fn closed_form_norm(n: usize, r: usize) -> f64 {
    let even = (r - r % 2) as f64;
    (even * (n as f64 - even / 4.0 - 0.5)).sqrt()
}

fn draw(n: usize, r: usize, seed: &SeedSpec, l: u64) -> DMatrix<f64> {
    let k = r / 2;
    let mut rng = seed.stream_with(StreamTag::Packing, l);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..k {
        for j in (i + 1)..n {
            let v = if rng.random::<bool>() { 1.0 } else { -1.0 };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Draws the packing. `sample_m` limits how many of the `floor(exp(r n / 128))`
/// matrices are drawn and is required when that count exceeds [`MAX_CARDINALITY`].
pub fn generate_packing(
    n: usize,
    r: usize,
    delta: f64,
    seed: u64,
    sample_m: Option<usize>,
) -> Result<PackingSet> {
    let cardinality = packing_cardinality(n, r)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta = {delta} must be positive")));
    }
    let count = match sample_m {
        Some(0) => return Err(Error::invalid("sample_m must be >= 1")),
        Some(k) if k as u64 > cardinality => {
            return Err(Error::invalid(format!(
                "sample_m = {k} exceeds the cardinality {cardinality}"
            )))
        }
        Some(k) => k,
        None if cardinality > MAX_CARDINALITY => {
            return Err(Error::invalid(format!(
                "cardinality {cardinality} exceeds {MAX_CARDINALITY}; pass sample_m to draw fewer"
            )))
        }
        None => cardinality as usize,
    };

    let spec = SeedSpec::new(seed, 0);
    let raw: Vec<DMatrix<f64>> = (0..count as u64)
        .into_par_iter()
        .map(|l| draw(n, r, &spec, l))
        .collect();
    let prescale_norms: Vec<f64> = raw.iter().map(|m| m.norm()).collect();
    let matrices = raw
        .into_iter()
        .zip(&prescale_norms)
        .map(|(m, &norm)| m * (delta / norm))
        .collect();

    Ok(PackingSet {
        matrices,
        n,
        r,
        delta,
        scale_used: delta / closed_form_norm(n, r),
        cardinality,
        seed,
        prescale_norms,
    })
}

/// All pairwise Frobenius distances, in `(k, l)` order with `k < l`.
pub fn pairwise_distances(ps: &PackingSet) -> Vec<f64> {
    let m = ps.matrices.len();
    (0..m)
        .into_par_iter()
        .flat_map_iter(|k| ((k + 1)..m).map(move |l| (k, l)))
        .map(|(k, l)| (&ps.matrices[k] - &ps.matrices[l]).norm())
        .collect()
}

const NORM_TOLERANCE: f64 = 1e-10;

pub fn verify_packing(ps: &PackingSet) -> Verification {
    let max_norm_error = ps
        .matrices
        .iter()
        .map(|m| (m.norm() - ps.delta).abs())
        .fold(0.0, f64::max);
    let norms_ok = max_norm_error <= NORM_TOLERANCE;
    let min_pairwise = pairwise_distances(ps)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    // Pairwise distances are products of rounded quantities; allow one part in 1e12.
    let separated = min_pairwise >= ps.delta * (1.0 - 1e-12);
    Verification {
        success: norms_ok && separated,
        min_pairwise,
        norms_ok,
        max_norm_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edm::numerical_rank;

    #[test]
    fn verification_json_round_trip() {
        let ps = generate_packing(10, 2, 1.0, 0, None).unwrap();
        let v = verify_packing(&ps);
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"min_pairwise\":null"));
        let back: Verification = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn cardinalities() {
        // exp(0.15625) = 1.169..., exp(3.90625) = 49.72..., exp(1) = 2.718...
        assert_eq!(packing_cardinality(10, 2).unwrap(), 1);
        assert_eq!(packing_cardinality(100, 5).unwrap(), 49);
        assert_eq!(packing_cardinality(64, 2).unwrap(), 2);
        assert_eq!(packing_cardinality(100, 4).unwrap(), 22);
        assert!(packing_cardinality(9, 2).is_err());
        assert!(packing_cardinality(10, 1).is_err());
        assert!(packing_cardinality(10, 11).is_err());
    }

    #[test]
    fn cardinality_agrees_with_log_bracketing_up_to_1400() {
        for rn in 20..=1400usize {
            // Pick any admissible (n, r) with this product.
            let Some((n, r)) = (2..=rn / 10)
                .filter(|r| rn % r == 0)
                .map(|r| (rn / r, r))
                .find(|&(n, r)| n >= 10 && r <= n)
            else {
                continue;
            };
            let m = packing_cardinality(n, r).unwrap();
            let x = rn as f64 / 128.0;
            assert!(
                (m as f64).ln() <= x && x < ((m + 1) as f64).ln(),
                "rn = {rn}"
            );
        }
    }

    #[test]
    fn smallest_case() {
        let ps = generate_packing(10, 2, 1.0, 3, None).unwrap();
        assert_eq!(ps.matrices.len(), 1);
        let m = &ps.matrices[0];
        assert!((m.norm() - 1.0).abs() < 1e-12);
        assert!(numerical_rank(m) <= 2);
        for i in 0..10 {
            for j in 0..10 {
                if i != 0 && j != 0 {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
        let v = verify_packing(&ps);
        assert!(v.success && v.min_pairwise.is_infinite());
    }

    #[test]
    fn structure_and_closed_form() {
        for (n, r) in [(20, 2), (20, 3), (30, 4), (30, 5), (12, 12)] {
            let ps = generate_packing(
                n,
                r,
                2.5,
                17,
                Some(1.min(packing_cardinality(n, r).unwrap() as usize)),
            )
            .unwrap();
            let closed = closed_form_norm(n, r);
            for (m, pre) in ps.matrices.iter().zip(&ps.prescale_norms) {
                assert_eq!(m, &m.transpose());
                assert!(m.diagonal().iter().all(|v| *v == 0.0));
                assert!(numerical_rank(m) <= r);
                assert!((m.norm() - 2.5).abs() <= 1e-10);
                assert_eq!(pre * pre, closed * closed, "n = {n}, r = {r}");
            }
        }
    }

    #[test]
    fn duplicates_fail_verification() {
        let mut ps = generate_packing(64, 4, 1.0, 1, None).unwrap();
        ps.matrices[1] = ps.matrices[0].clone();
        let v = verify_packing(&ps);
        assert!(!v.success);
        assert_eq!(v.min_pairwise, 0.0);
    }

    #[test]
    fn limits_and_bad_input() {
        assert!(generate_packing(10, 2, 0.0, 1, None).is_err());
        assert!(generate_packing(10, 2, 1.0, 1, Some(2)).is_err());
        assert!(generate_packing(10, 2, 1.0, 1, Some(0)).is_err());
        // exp(5000 / 128) is about 9e16.
        assert!(generate_packing(500, 10, 1.0, 1, None).is_err());
        assert_eq!(
            generate_packing(500, 10, 1.0, 1, Some(3))
                .unwrap()
                .matrices
                .len(),
            3
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_packing(40, 4, 1.0, 5, None).unwrap();
        let b = generate_packing(40, 4, 1.0, 5, None).unwrap();
        let c = generate_packing(40, 4, 1.0, 6, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.matrices, c.matrices);
    }
}
