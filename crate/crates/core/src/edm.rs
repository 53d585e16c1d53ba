//! Point clouds, Euclidean distance matrices and double centering.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::{SeedSpec, StreamTag};

/// Relative singular-value threshold used for every numerical-rank decision.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// `d x n` coordinates, one node per column.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: DMatrix<f64>,
}

impl PointCloud {
    pub fn new(coords: DMatrix<f64>) -> Result<Self> {
        if coords.nrows() == 0 || coords.ncols() == 0 {
            return Err(Error::invalid("point cloud needs d >= 1 and n >= 1"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point cloud has non-finite coordinates"));
        }
        Ok(Self { coords })
    }

    /// Each coordinate drawn independently from `Uniform(lo, hi)`.
    pub fn uniform(d: usize, n: usize, lo: f64, hi: f64, seed: &SeedSpec) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("bad coordinate range ({lo}, {hi})")));
        }
        let mut rng = seed.stream(StreamTag::Cloud);
        // from_fn fills column-major, so draws proceed node by node.
        let coords = DMatrix::from_fn(d, n, |_, _| rng.random_range(lo..hi));
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    pub fn len(&self) -> usize {
        self.coords.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.ncols() == 0
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.coords
    }
}

/// Symmetric, zero-diagonal, nonnegative matrix of squared distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Edm {
    entries: DMatrix<f64>,
}

impl Edm {
    /// Validates an externally supplied squared-distance matrix.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(Error::shape(format!(
                "EDM must be square, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("EDM diagonal entry {i} is nonzero")));
            }
            for j in 0..i {
                let v = entries[(i, j)];
                if v != entries[(j, i)] {
                    return Err(Error::invalid(format!("EDM not symmetric at ({i}, {j})")));
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!("EDM entry ({i}, {j}) = {v}")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// Largest entry, the tightest admissible incoherence bound.
    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// The geometric centering matrix `I - (1/n) 1 1^T`, kept implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenteringMatrix {
    n: usize,
}

impl CenteringMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let inv = 1.0 / self.n as f64;
        DMatrix::from_fn(self.n, self.n, |i, j| if i == j { 1.0 - inv } else { -inv })
    }

    /// `J * m * J` by subtracting row, column and grand means.
    pub fn apply_both(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(Error::shape(format!(
                "centering of order {} applied to {}x{}",
                self.n,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(double_center(m))
    }

    /// `m * J`: subtracts each row's mean. Works for any `k x n` matrix.
    pub fn apply_right(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.n {
            return Err(Error::shape(format!(
                "centering of order {} applied to {} columns",
                self.n,
                m.ncols()
            )));
        }
        let mut out = m.clone();
        for mut row in out.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        Ok(out)
    }
}

pub fn centering_matrix(n: usize) -> Result<CenteringMatrix> {
    if n == 0 {
        return Err(Error::invalid("centering matrix needs n >= 1"));
    }
    Ok(CenteringMatrix { n })
}

/// Pairwise squared distances. Each pair is computed once and mirrored.
pub fn edm_from_points(points: &PointCloud) -> Edm {
    let x = points.coords();
    let n = x.ncols();
    let mut entries = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let s: f64 = x
                .column(i)
                .iter()
                .zip(x.column(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            entries[(i, j)] = s;
            entries[(j, i)] = s;
        }
    }
    Edm { entries }
}

/// `J m J` for a square `m`, computed in O(n^2) and symmetrized when `m` is.
pub fn double_center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// The centered Gram matrix `-1/2 J D J`, exactly symmetric on output.
pub fn gram_from_edm(d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if d.nrows() != d.ncols() {
        return Err(Error::shape(format!(
            "gram_from_edm needs a square matrix, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    let mut g = double_center(d) * -0.5;
    symmetrize_in_place(&mut g);
    Ok(g)
}

/// Number of singular values above `RANK_TOLERANCE * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn cloud(rows: &[&[f64]]) -> PointCloud {
        let d = rows.len();
        let n = rows[0].len();
        PointCloud::new(DMatrix::from_fn(d, n, |i, j| rows[i][j])).unwrap()
    }

    #[test]
    fn two_points_on_a_line() {
        let d = edm_from_points(&cloud(&[&[0.0, 1.0]]));
        assert_eq!(
            d.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
    }

    #[test]
    fn three_collinear_points() {
        let d = edm_from_points(&cloud(&[&[0.0, 1.0, 2.0]]));
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]);
        assert_eq!(d.matrix(), &want);
    }

    #[test]
    fn rank_of_random_edm_in_r3() {
        let x = PointCloud::uniform(3, 50, -1.0, 1.0, &SeedSpec::new(11, 0)).unwrap();
        let d = edm_from_points(&x);
        // D is symmetric, so its singular values are the absolute eigenvalues.
        let eig = SymmetricEigen::new(d.matrix().clone()).eigenvalues;
        let top = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let oracle_rank = eig.iter().filter(|v| v.abs() > 1e-9 * top).count();
        assert!(oracle_rank <= 5, "oracle rank {oracle_rank}");
        assert_eq!(numerical_rank(d.matrix()), oracle_rank);
    }

    #[test]
    fn centering_matrix_small_cases() {
        assert!(centering_matrix(0).is_err());
        let j2 = centering_matrix(2).unwrap().to_dense();
        assert_eq!(j2, DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));

        let j3 = centering_matrix(3).unwrap().to_dense();
        let ones = nalgebra::DVector::from_element(3, 1.0);
        assert!((j3 * ones).norm() < 1e-15);

        let j10 = centering_matrix(10).unwrap().to_dense();
        assert!((&j10 * &j10 - &j10).norm() <= 1e-12);
    }

    #[test]
    fn implicit_centering_matches_dense() {
        let x = PointCloud::uniform(4, 17, -2.0, 3.0, &SeedSpec::new(5, 2)).unwrap();
        let m = edm_from_points(&x).into_inner();
        let j = centering_matrix(17).unwrap();
        let dense = j.to_dense();
        let want = &dense * &m * &dense;
        assert!((j.apply_both(&m).unwrap() - want).abs().max() <= 1e-12);
        let xc = j.apply_right(x.coords()).unwrap();
        assert!((xc - x.coords() * &dense).abs().max() <= 1e-12);
    }

    #[test]
    fn gram_of_zero_and_two_points() {
        let z = gram_from_edm(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z, DMatrix::zeros(2, 2));

        let g = gram_from_edm(edm_from_points(&cloud(&[&[0.0, 1.0]])).matrix()).unwrap();
        // Centered coordinates are -0.5 and +0.5.
        let xc = DMatrix::from_row_slice(1, 2, &[-0.5, 0.5]);
        let oracle = xc.transpose() * xc;
        assert!((&g - &oracle).abs().max() < 1e-15);
        let mut ev: Vec<f64> = SymmetricEigen::new(oracle)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((ev[0] - 0.5).abs() < 1e-15 && ev[1].abs() < 1e-15);
    }

    #[test]
    fn gram_rejects_non_square() {
        assert!(gram_from_edm(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn edm_validation() {
        assert!(Edm::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0])).is_err());
        assert!(Edm::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0])).is_err());
        assert!(Edm::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0])).is_err());
        assert!(Edm::from_matrix(DMatrix::zeros(2, 3)).is_err());
        assert!(Edm::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).is_ok());
    }

    #[test]
    fn point_cloud_rejects_bad_input() {
        assert!(PointCloud::new(DMatrix::zeros(0, 3)).is_err());
        assert!(PointCloud::new(DMatrix::from_element(1, 2, f64::NAN)).is_err());
        assert!(PointCloud::uniform(2, 3, 1.0, 1.0, &SeedSpec::new(0, 0)).is_err());
    }
}
