//! Distances between distributions and moment diagnostics.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{min_cost_assignment, CostMatrix};
use crate::error::{check_dim, Error, Result};
use crate::gaussian::Gaussian;
use crate::scalar::{sub, Scalar};
use crate::spd::{SpdMatrix, SymMatrix};

/// Largest point set `emd_samples` accepts; exact assignment is cubic.
pub const EMD_MAX_POINTS: usize = 2000;

/// Bures–Wasserstein distance
/// `W₂² = ‖μ₀−μ₁‖² + Tr(Σ₀ + Σ₁ − 2(Σ₀^{1/2} Σ₁ Σ₀^{1/2})^{1/2})`.
pub fn w2_gaussian<T: Scalar>(g0: &Gaussian<T>, g1: &Gaussian<T>) -> Result<T> {
    check_dim("w2 gaussians", g0.dim(), g1.dim())?;
    let dm = sub(g0.mean(), g1.mean());
    let mean_part: T = dm.iter().map(|&v| v * v).sum();
    let root0 = g0.cov().sqrt();
    let cross = g1.cov().as_sym().congruence(root0.as_sym());
    let cross_root_trace: T = cross.eigen()?.values.iter().map(|&l| l.max(T::zero()).sqrt()).sum();
    let bures = g0.cov().trace() + g1.cov().trace() - T::lit(2.0) * cross_root_trace;
    Ok((mean_part + bures.max(T::zero())).sqrt())
}

/// Exact empirical `W₂` between equal-size point sets: minimal-cost perfect
/// matching on squared Euclidean cost, square-rooted.
pub fn emd_samples<T: Scalar>(x: &[Vec<T>], y: &[Vec<T>]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() > EMD_MAX_POINTS {
        return Err(Error::Oversize {
            n: x.len(),
            max: EMD_MAX_POINTS,
        });
    }
    if x.is_empty() {
        return Ok(T::zero());
    }
    let d = x[0].len();
    for p in x.iter().chain(y) {
        check_dim("emd point", d, p.len())?;
    }
    let xf: Vec<Vec<f64>> = x.iter().map(|p| p.iter().map(|v| v.as_f64()).collect()).collect();
    let yf: Vec<Vec<f64>> = y.iter().map(|p| p.iter().map(|v| v.as_f64()).collect()).collect();
    let cost = CostMatrix::from_fn(x.len(), y.len(), |i, j| {
        xf[i].iter().zip(&yf[j]).map(|(a, b)| (a - b) * (a - b)).sum()
    });
    let (_, total) = min_cost_assignment(&cost);
    Ok(T::lit((total / x.len() as f64).max(0.0).sqrt()))
}

/// Uniform subsample without replacement, seeded; returns the input when it
/// already fits.
pub fn subsample<T: Clone>(x: &[Vec<T>], n: usize, seed: u64) -> Vec<Vec<T>> {
    if x.len() <= n {
        return x.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample_indices(&mut rng, x.len(), n).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| x[i].clone()).collect()
}

/// Sample mean and unbiased (`n − 1`) covariance.
pub fn moment_check<T: Scalar>(x: &[Vec<T>]) -> Result<(Vec<T>, SymMatrix<T>)> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "moment_check needs at least 2 points, got {}",
            x.len()
        )));
    }
    let d = x[0].len();
    for p in x {
        check_dim("moment point", d, p.len())?;
    }
    let n = T::from_usize(x.len()).unwrap();
    let mut mean = vec![T::zero(); d];
    for p in x {
        for (m, &v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut acc = vec![T::zero(); d * d];
    for p in x {
        let dp = sub(p, &mean);
        for i in 0..d {
            for j in i..d {
                acc[i * d + j] += dp[i] * dp[j];
            }
        }
    }
    let denom = n - T::one();
    Ok((mean, SymMatrix::from_upper_fn(d, |i, j| acc[i * d + j] / denom)))
}

/// Moment-matched Gaussian of a point set.
pub fn gaussian_fit<T: Scalar>(x: &[Vec<T>]) -> Result<Gaussian<T>> {
    let (mean, cov) = moment_check(x)?;
    Gaussian::new(mean, SpdMatrix::new(cov)?)
}
