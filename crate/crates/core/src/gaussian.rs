use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Result};
use crate::scalar::{sub, Scalar};
use crate::spd::{Matrix, SpdMatrix, SymMatrix};

/// Multivariate normal `N(mean, cov)` with cached precision and normalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian<T> {
    mean: Vec<T>,
    cov: SpdMatrix<T>,
    precision: Matrix<T>,
    log_norm: T,
}

impl<T: Scalar> Gaussian<T> {
    pub fn new(mean: Vec<T>, cov: SpdMatrix<T>) -> Result<Self> {
        check_dim("gaussian mean vs covariance", cov.dim(), mean.len())?;
        let n = T::from_usize(mean.len()).unwrap();
        let two_pi = T::lit(2.0 * std::f64::consts::PI);
        let log_norm = -T::lit(0.5) * (n * two_pi.ln() + cov.log_det());
        let precision = cov.inverse().as_matrix().clone();
        Ok(Self {
            mean,
            cov,
            precision,
            log_norm,
        })
    }

    pub fn standard(n: usize) -> Self {
        Self::new(vec![T::zero(); n], SpdMatrix::identity(n)).expect("identity is SPD")
    }

    pub fn isotropic(mean: Vec<T>, variance: T) -> Result<Self> {
        let n = mean.len();
        Self::new(mean, SpdMatrix::new(SymMatrix::identity(n).scale(variance))?)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn cov(&self) -> &SpdMatrix<T> {
        &self.cov
    }

    /// Σ⁻¹.
    pub fn precision(&self) -> &Matrix<T> {
        &self.precision
    }

    pub fn log_pdf(&self, x: &[T]) -> T {
        self.log_norm - T::lit(0.5) * self.mahalanobis_sq(x)
    }

    /// `(x − μ)ᵀ Σ⁻¹ (x − μ)` without temporaries.
    pub fn mahalanobis_sq(&self, x: &[T]) -> T {
        let n = self.dim();
        let p = self.precision.as_slice();
        let mut q = T::zero();
        for i in 0..n {
            let di = x[i] - self.mean[i];
            let row = &p[i * n..(i + 1) * n];
            let mut s = T::zero();
            for j in 0..n {
                s += row[j] * (x[j] - self.mean[j]);
            }
            q += di * s;
        }
        q
    }

    pub fn pdf(&self, x: &[T]) -> T {
        self.log_pdf(x).exp()
    }

    /// `∇ log p(x) = −Σ⁻¹(x − μ)`.
    pub fn score(&self, x: &[T]) -> Vec<T> {
        let d = sub(x, &self.mean);
        self.precision.matvec(&d).into_iter().map(|v| -v).collect()
    }

    /// Draws `n` points as `μ + Σ^{1/2} ξ`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<T>> {
        let root = self.cov.sqrt();
        (0..n).map(|_| self.sample_with_root(root.as_matrix(), rng)).collect()
    }

    pub(crate) fn sample_with_root<R: Rng + ?Sized>(&self, root: &Matrix<T>, rng: &mut R) -> Vec<T> {
        let xi = standard_normal_vec(self.dim(), rng);
        root.matvec(&xi)
            .into_iter()
            .zip(&self.mean)
            .map(|(a, &m)| a + m)
            .collect()
    }
}

pub(crate) fn standard_normal_vec<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_log_density_at_origin() {
        let g = Gaussian::<f64>::standard(1);
        assert!((g.log_pdf(&[0.0]) + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert_eq!(g.score(&[2.0]), vec![-2.0]);
    }

    #[test]
    fn density_matches_explicit_2d_formula() {
        let cov = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let g = Gaussian::new(vec![1.0, -1.0], cov).unwrap();
        let det: f64 = 2.0 * 1.0 - 0.25;
        let (dx, dy) = (0.3_f64 - 1.0, 0.2_f64 + 1.0);
        // inverse of [[2, .5], [.5, 1]] = [[1, -.5], [-.5, 2]] / det
        let q = (dx * dx - dx * dy + 2.0 * dy * dy) / det;
        let expect = (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt());
        assert!((g.pdf(&[0.3, 0.2]) - expect).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(Gaussian::new(vec![0.0, 0.0], SpdMatrix::<f64>::identity(3)).is_err());
    }
}
