use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svdmds::{
    classic_mds, dist_metric, edm_from_points, gram_from_edm, DMatrix, PointCloud, SeedSpec,
};

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

fn cloud(d: usize, n: usize, seed: u64) -> PointCloud {
    PointCloud::uniform(d, n, -1.0, 1.0, &SeedSpec::new(seed, 0)).unwrap()
}

fn moved(x: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = x.nrows();
    let q = random_orthogonal(d, rng);
    let t = DMatrix::from_fn(d, 1, |_, _| rng.random_range(-5.0..5.0));
    let mut y = q * x;
    for mut c in y.column_iter_mut() {
        c += &t;
    }
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edm_is_rigid_invariant(seed in any::<u64>(), d in 1usize..5, n in 3usize..30) {
        let c = cloud(d, n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let y = PointCloud::new(moved(c.coords(), &mut rng)).unwrap();
        let (a, b) = (edm_from_points(&c), edm_from_points(&y));
        let scale = a.max_entry().max(1.0);
        prop_assert!((a.matrix() - b.matrix()).abs().max() <= 1e-10 * scale);
    }

    #[test]
    fn dist_is_rigid_invariant(seed in any::<u64>(), d in 1usize..5, n in 3usize..30) {
        let x = cloud(d, n, seed);
        let x_hat = cloud(d, n, seed.wrapping_add(1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let base = dist_metric(x.coords(), x_hat.coords()).unwrap();
        let a = dist_metric(&moved(x.coords(), &mut rng), x_hat.coords()).unwrap();
        let b = dist_metric(x.coords(), &moved(x_hat.coords(), &mut rng)).unwrap();
        prop_assert!((a - base).abs() <= 1e-10);
        prop_assert!((b - base).abs() <= 1e-10);
        prop_assert!(dist_metric(x.coords(), &moved(x.coords(), &mut rng)).unwrap() <= 1e-10);
    }

    #[test]
    fn gram_of_an_edm_is_psd(seed in any::<u64>(), d in 1usize..5, n in 3usize..30) {
        let g = gram_from_edm(edm_from_points(&cloud(d, n, seed)).matrix()).unwrap();
        let eig = g.clone().symmetric_eigen();
        let top = eig.eigenvalues.max().max(1.0);
        prop_assert!(eig.eigenvalues.iter().all(|l| *l >= -1e-12 * top));
        prop_assert!(g.row_sum().abs().max() <= 1e-12 * top * n as f64);
    }

    #[test]
    fn mds_reproduces_the_centered_gram(seed in any::<u64>(), d in 1usize..5, extra in 1usize..20) {
        let n = d + 1 + extra;
        let c = cloud(d, n, seed);
        let dm = edm_from_points(&c);
        let res = classic_mds(dm.matrix(), d).unwrap();
        let g = gram_from_edm(dm.matrix()).unwrap();
        let g_hat = res.x_hat.transpose() * &res.x_hat;
        prop_assert!((g - g_hat).abs().max() <= 1e-10);
    }
}
