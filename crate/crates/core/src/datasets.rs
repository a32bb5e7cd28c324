//! Toy point clouds for the bridge experiments.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::gaussian::Gaussian;
use crate::gmm::GaussianMixture;
use crate::spd::{SpdMatrix, SymMatrix};

/// Two interleaving half circles with isotropic Gaussian jitter, the lower one
/// shifted by `(1, −½)`.
pub fn moons<R: Rng + ?Sized>(n: usize, noise: f64, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let upper = i % 2 == 0;
            let a = rng.random_range(0.0..PI);
            let (x, y) = if upper {
                (a.cos(), a.sin())
            } else {
                (1.0 - a.cos(), 0.5 - a.sin())
            };
            let ex: f64 = rng.sample(StandardNormal);
            let ey: f64 = rng.sample(StandardNormal);
            vec![x + noise * ex, y + noise * ey]
        })
        .collect()
}

/// Planar Swiss roll `s (cos s, sin s) / 5` for `s ∈ [1.5π, 4.5π]`, with jitter.
pub fn swiss_roll<R: Rng + ?Sized>(n: usize, noise: f64, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let s = 1.5 * PI * (1.0 + 2.0 * rng.random::<f64>());
            let ex: f64 = rng.sample(StandardNormal);
            let ey: f64 = rng.sample(StandardNormal);
            vec![s * s.cos() / 5.0 + noise * ex, s * s.sin() / 5.0 + noise * ey]
        })
        .collect()
}

/// A random `k`-component mixture in `dim` dimensions with means in
/// `[−spread, spread]^dim` and covariances `AAᵀ/dim + ½I`.
pub fn random_mixture<R: Rng + ?Sized>(dim: usize, k: usize, spread: f64, rng: &mut R) -> GaussianMixture<f64> {
    let comps = (0..k)
        .map(|_| {
            let mean = (0..dim).map(|_| rng.random_range(-spread..spread)).collect();
            let a: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
            let cov = SymMatrix::from_upper_fn(dim, |i, j| {
                (0..dim).map(|l| a[i * dim + l] * a[j * dim + l]).sum::<f64>() / dim as f64
            })
            .add_identity(0.5);
            Gaussian::new(mean, SpdMatrix::new(cov).expect("shifted Gram matrix is SPD")).expect("dimensions agree")
        })
        .collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    GaussianMixture::new(raw.iter().map(|w| w / total).collect(), comps).expect("valid mixture")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = moons(1000, 0.0, &mut rng);
        assert_eq!(m.len(), 1000);
        assert!(m
            .iter()
            .all(|p| (-1.0..=2.0).contains(&p[0]) && (-0.5..=1.0).contains(&p[1])));
        let s = swiss_roll(1000, 0.0, &mut rng);
        assert!(s
            .iter()
            .all(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() <= 4.5 * PI / 5.0 + 1e-12));
        let g = random_mixture(5, 3, 4.0, &mut rng);
        assert_eq!((g.dim(), g.n_components()), (5, 3));
    }
}
