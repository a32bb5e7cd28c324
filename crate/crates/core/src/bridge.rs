//! Closed-form Gaussian bridges.
//!
//! All three problems share the mean path `μ(t) = μ₀ + (μ₁ − μ₀) t` and a
//! covariance of the form
//!
//! ```text
//! Σ(t) = Σ₀^{-1/2} [(1 − t) Σ₀ + t G]² Σ₀^{-1/2} + E(t)
//! ```
//!
//! with `Σ̃ = Σ₀^{1/2} Σ₁ Σ₀^{1/2}` and
//!
//! | kind                 | `G`               | `E(t)`        |
//! |----------------------|-------------------|---------------|
//! | quantum              | `(Σ̃ − β²I)^{1/2}` | `+t² β² Σ₀⁻¹` |
//! | classical SB         | `(Σ̃ + β²I)^{1/2}` | `−t β² Σ₀⁻¹`  |
//! | Benamou–Brenier OT   | `Σ̃^{1/2}`         | `0`           |
//!
//! For the quantum bridge the drift `v = ∇S` is recovered from the symmetric
//! continuity condition `½(CΣ + ΣC) = Σ̇`, and `S` is the quadratic phase
//! `¼(x−μ)ᵀC(x−μ) + μ̇·(x−μ) + f(t)` with `ḟ = ½|μ̇|² − β² Tr Σ⁻¹`, `f(0) = 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bohm::bohm_gaussian;
use crate::error::{check_dim, Error, Result};
use crate::gaussian::Gaussian;
use crate::scalar::{dot, norm_sq, sub, Scalar};
use crate::spd::{Matrix, SpdMatrix, SymMatrix};

/// Grid size for the trapezoid integration of the phase offset `f(t)`.
pub const PHASE_QUADRATURE_POINTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BridgeKind {
    #[serde(rename = "quantum")]
    Quantum,
    #[serde(rename = "classical_sb")]
    ClassicalSb,
    #[serde(rename = "bb_ot")]
    BenamouBrenierOt,
}

impl BridgeKind {
    pub const ALL: [BridgeKind; 3] = [
        BridgeKind::Quantum,
        BridgeKind::ClassicalSb,
        BridgeKind::BenamouBrenierOt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BridgeKind::Quantum => "quantum",
            BridgeKind::ClassicalSb => "classical_sb",
            BridgeKind::BenamouBrenierOt => "bb_ot",
        }
    }
}

/// Finite-difference steps: `time` is absolute, `space` is scaled by `1 + |xᵢ|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdSteps<T> {
    pub time: T,
    pub space: T,
}

impl<T: Scalar> Default for FdSteps<T> {
    fn default() -> Self {
        Self {
            time: T::lit(1e-4),
            space: T::lit(1e-5),
        }
    }
}

/// `√λ_min(Σ₀^{1/2} Σ₁ Σ₀^{1/2})`, the largest feasible quantum `β`.
pub fn beta_max<T: Scalar>(sigma0: &SpdMatrix<T>, sigma1: &SpdMatrix<T>) -> Result<T> {
    check_dim("beta_max covariances", sigma0.dim(), sigma1.dim())?;
    let root = sigma0.sqrt();
    let tilde = sigma1.as_sym().congruence(root.as_sym());
    let lmin = tilde.eigen()?.values[0];
    Ok(lmin.max(T::zero()).sqrt())
}

/// Linear mean path, shared by every bridge kind.
pub fn bridge_mean<T: Scalar>(mu0: &[T], mu1: &[T], t: T) -> Vec<T> {
    assert_eq!(mu0.len(), mu1.len(), "bridge endpoint means differ in dimension");
    mu0.iter().zip(mu1).map(|(&a, &b)| a + (b - a) * t).collect()
}

/// Endpoint Gaussians, diffusion coefficient and problem kind, with the
/// `t`-independent factors of the closed form precomputed.
#[derive(Clone, Debug)]
pub struct BridgeProblem<T> {
    g0: Gaussian<T>,
    g1: Gaussian<T>,
    beta: T,
    kind: BridgeKind,
    beta_max: T,
    sigma0_inv_sqrt: SymMatrix<T>,
    sigma0_inv: SymMatrix<T>,
    g_root: SymMatrix<T>,
}

impl<T: Scalar> BridgeProblem<T> {
    pub fn new(g0: Gaussian<T>, g1: Gaussian<T>, beta: T, kind: BridgeKind) -> Result<Self> {
        check_dim("bridge endpoints", g0.dim(), g1.dim())?;
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        if kind == BridgeKind::BenamouBrenierOt && beta != T::zero() {
            return Err(Error::InvalidArgument(format!(
                "the Benamou-Brenier bridge has no diffusion, got beta = {beta}"
            )));
        }
        let root0 = g0.cov().sqrt();
        let tilde = g1.cov().as_sym().congruence(root0.as_sym());
        let tilde_eig = tilde.eigen()?;
        let beta_max = tilde_eig.values[0].max(T::zero()).sqrt();
        let b2 = beta * beta;
        let g_root = match kind {
            BridgeKind::Quantum => {
                if beta > beta_max * (T::one() + T::lit(1e-12)) {
                    return Err(Error::Infeasible {
                        beta: beta.as_f64(),
                        beta_max: beta_max.as_f64(),
                    });
                }
                tilde_eig.reconstruct_with(|l| (l - b2).max(T::zero()).sqrt())
            }
            BridgeKind::ClassicalSb => tilde_eig.reconstruct_with(|l| (l.max(T::zero()) + b2).sqrt()),
            BridgeKind::BenamouBrenierOt => tilde_eig.reconstruct_with(|l| l.max(T::zero()).sqrt()),
        };
        Ok(Self {
            sigma0_inv_sqrt: g0.cov().inv_sqrt().as_sym().clone(),
            sigma0_inv: g0.cov().inverse().as_sym().clone(),
            g_root: SymMatrix::symmetrize(&g_root),
            g0,
            g1,
            beta,
            kind,
            beta_max,
        })
    }

    pub fn start(&self) -> &Gaussian<T> {
        &self.g0
    }

    pub fn end(&self) -> &Gaussian<T> {
        &self.g1
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn kind(&self) -> BridgeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.g0.dim()
    }

    /// Feasibility bound of the endpoint pair (meaningful for every kind).
    pub fn beta_max(&self) -> T {
        self.beta_max
    }

    fn check_time(t: T) -> Result<()> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, 1]")));
        }
        Ok(())
    }

    fn check_interior(t: T, h: T) -> Result<()> {
        if !(t - h >= T::zero() && t + h <= T::one()) {
            return Err(Error::BoundaryTime {
                t: t.as_f64(),
                h: h.as_f64(),
            });
        }
        Ok(())
    }

    fn require_gradient_flow(&self, operation: &'static str) -> Result<()> {
        if self.kind == BridgeKind::ClassicalSb {
            return Err(Error::UnsupportedKind {
                operation,
                kind: self.kind.name(),
            });
        }
        Ok(())
    }

    pub fn mean(&self, t: T) -> Vec<T> {
        bridge_mean(self.g0.mean(), self.g1.mean(), t)
    }

    /// `μ̇ = μ₁ − μ₀`.
    pub fn mean_velocity(&self) -> Vec<T> {
        sub(self.g1.mean(), self.g0.mean())
    }

    /// `(1 − t) Σ₀ + t G`.
    fn interpolant(&self, t: T) -> Matrix<T> {
        let a = self.g0.cov().as_matrix().scale(T::one() - t);
        let b = self.g_root.as_matrix().scale(t);
        &a + &b
    }

    /// Closed-form covariance without the SPD validation step.
    fn covariance_sym(&self, t: T) -> SymMatrix<T> {
        let m = self.interpolant(t);
        let core = SymMatrix::symmetrize(&(&m * &m)).congruence(&self.sigma0_inv_sqrt);
        let b2 = self.beta * self.beta;
        match self.kind {
            BridgeKind::Quantum => core.add(&self.sigma0_inv.scale(t * t * b2)),
            BridgeKind::ClassicalSb => core.sub(&self.sigma0_inv.scale(t * b2)),
            BridgeKind::BenamouBrenierOt => core,
        }
    }

    pub fn covariance(&self, t: T) -> Result<SpdMatrix<T>> {
        Self::check_time(t)?;
        SpdMatrix::new(self.covariance_sym(t))
    }

    /// Analytic `Σ̇(t)`.
    pub fn covariance_dot(&self, t: T) -> Result<SymMatrix<T>> {
        Self::check_time(t)?;
        let m = self.interpolant(t);
        let m_dot = self.g_root.as_matrix() - self.g0.cov().as_matrix();
        let prod = &(&m_dot * &m) + &(&m * &m_dot);
        let core = SymMatrix::symmetrize(&prod).congruence(&self.sigma0_inv_sqrt);
        let b2 = self.beta * self.beta;
        Ok(match self.kind {
            BridgeKind::Quantum => core.add(&self.sigma0_inv.scale(T::lit(2.0) * t * b2)),
            BridgeKind::ClassicalSb => core.sub(&self.sigma0_inv.scale(b2)),
            BridgeKind::BenamouBrenierOt => core,
        })
    }

    pub fn marginal(&self, t: T) -> Result<Gaussian<T>> {
        Gaussian::new(self.mean(t), self.covariance(t)?)
    }

    /// Symmetric `C(t)` solving `C Σ + Σ C = 2 Σ̇`.
    pub fn drift_matrix(&self, t: T) -> Result<SymMatrix<T>> {
        self.require_gradient_flow("drift reconstruction")?;
        let sigma = self.covariance(t)?;
        let sigma_dot = self.covariance_dot(t)?;
        Ok(sigma.solve_sym_lyapunov(&sigma_dot.scale(T::lit(2.0))))
    }

    /// `v(x, t) = μ̇ + ½ C(t) (x − μ(t))`.
    pub fn drift_velocity(&self, x: &[T], t: T) -> Result<Vec<T>> {
        check_dim("drift point", self.dim(), x.len())?;
        let c = self.drift_matrix(t)?;
        let d = sub(x, &self.mean(t));
        let cd = c.as_matrix().matvec(&d);
        Ok(self
            .mean_velocity()
            .into_iter()
            .zip(cd)
            .map(|(m, v)| m + T::lit(0.5) * v)
            .collect())
    }

    /// `f(t) = ∫₀ᵗ ½|μ̇|² − β² Tr Σ(s)⁻¹ ds` by the composite trapezoid rule.
    pub fn phase_offset(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        self.require_gradient_flow("phase")?;
        let kinetic = T::lit(0.5) * norm_sq(&self.mean_velocity());
        if self.beta == T::zero() || t == T::zero() {
            return Ok(kinetic * t);
        }
        let b2 = self.beta * self.beta;
        let n = PHASE_QUADRATURE_POINTS;
        let step = t / T::from_usize(n - 1).unwrap();
        let mut acc = T::zero();
        for i in 0..n {
            let s = step * T::from_usize(i).unwrap();
            let tr = self.trace_inverse_covariance(s)?;
            let w = if i == 0 || i == n - 1 { T::lit(0.5) } else { T::one() };
            acc += w * tr;
        }
        Ok(kinetic * t - b2 * step * acc)
    }

    fn trace_inverse_covariance(&self, s: T) -> Result<T> {
        let sym = self.covariance_sym(s);
        match sym.trace_of_inverse() {
            Some(v) => Ok(v),
            None => Ok(SpdMatrix::new(sym)?.inverse().trace()),
        }
    }

    fn phase_with_offset(&self, c: &SymMatrix<T>, mean: &[T], offset: T, x: &[T]) -> T {
        let d = sub(x, mean);
        let quad = dot(&d, &c.as_matrix().matvec(&d));
        T::lit(0.25) * quad + dot(&self.mean_velocity(), &d) + offset
    }

    /// Phase `S(x, t)` with gauge `f(0) = 0`; `∇S` is the drift velocity.
    pub fn phase(&self, x: &[T], t: T) -> Result<T> {
        check_dim("phase point", self.dim(), x.len())?;
        let c = self.drift_matrix(t)?;
        let f = self.phase_offset(t)?;
        Ok(self.phase_with_offset(&c, &self.mean(t), f, x))
    }

    /// `ψ = √p e^{iS/2β}` returned as `(|ψ|, arg ψ)`.
    pub fn wavefunction(&self, x: &[T], t: T) -> Result<(T, T)> {
        if self.kind != BridgeKind::Quantum {
            return Err(Error::UnsupportedKind {
                operation: "wavefunction",
                kind: self.kind.name(),
            });
        }
        if self.beta == T::zero() {
            return Err(Error::ZeroBeta);
        }
        let p = self.marginal(t)?.pdf(x);
        let s = self.phase(x, t)?;
        Ok((p.sqrt(), s / (T::lit(2.0) * self.beta)))
    }

    /// `|∂ₜp + ∇·(v p)|`, every derivative by central differences.
    pub fn continuity_residual(&self, x: &[T], t: T, steps: FdSteps<T>) -> Result<T> {
        self.require_gradient_flow("continuity residual")?;
        check_dim("residual point", self.dim(), x.len())?;
        Self::check_interior(t, steps.time)?;
        let two = T::lit(2.0);
        let h = steps.time;
        let dp_dt = (self.marginal(t + h)?.pdf(x) - self.marginal(t - h)?.pdf(x)) / (two * h);

        let g = self.marginal(t)?;
        let c = self.drift_matrix(t)?;
        let mean = self.mean(t);
        let mdot = self.mean_velocity();
        let flux = |y: &[T], axis: usize| -> T {
            let d = sub(y, &mean);
            let v = mdot[axis] + T::lit(0.5) * dot(c.as_matrix().row(axis), &d);
            v * g.pdf(y)
        };
        let mut div = T::zero();
        let mut probe = x.to_vec();
        for a in 0..x.len() {
            let delta = steps.space * (T::one() + x[a].abs());
            probe[a] = x[a] + delta;
            let fp = flux(&probe, a);
            probe[a] = x[a] - delta;
            let fm = flux(&probe, a);
            probe[a] = x[a];
            div += (fp - fm) / (two * delta);
        }
        Ok((dp_dt + div).abs())
    }

    /// `|∂ₜS + ½|∇S|² + Q|` with `Q` the Gaussian Bohm potential of the marginal.
    pub fn hje_residual(&self, x: &[T], t: T, steps: FdSteps<T>) -> Result<T> {
        self.require_gradient_flow("Hamilton-Jacobi residual")?;
        check_dim("residual point", self.dim(), x.len())?;
        Self::check_interior(t, steps.time)?;
        let two = T::lit(2.0);
        let h = steps.time;
        let ds_dt = (self.phase(x, t + h)? - self.phase(x, t - h)?) / (two * h);

        let c = self.drift_matrix(t)?;
        let f = self.phase_offset(t)?;
        let mean = self.mean(t);
        let mut grad_sq = T::zero();
        let mut probe = x.to_vec();
        for a in 0..x.len() {
            let delta = steps.space * (T::one() + x[a].abs());
            probe[a] = x[a] + delta;
            let sp = self.phase_with_offset(&c, &mean, f, &probe);
            probe[a] = x[a] - delta;
            let sm = self.phase_with_offset(&c, &mean, f, &probe);
            probe[a] = x[a];
            let g = (sp - sm) / (two * delta);
            grad_sq += g * g;
        }
        let q = bohm_gaussian(&self.marginal(t)?, self.beta, x);
        Ok((ds_dt + T::lit(0.5) * grad_sq + q).abs())
    }

    /// `C_Q = C + 2iβΣ⁻¹` as a (real, imaginary) pair.
    fn complex_riccati_matrix(&self, t: T) -> Result<(Matrix<T>, Matrix<T>)> {
        let c = self.drift_matrix(t)?;
        let inv = self.covariance(t)?.inverse();
        Ok((c.into_matrix(), inv.as_matrix().scale(T::lit(2.0) * self.beta)))
    }

    /// `‖Ċ_Q + ½ C_Q²‖_F` with `Ċ_Q` by central differences.
    pub fn riccati_residual(&self, t: T, h: T) -> Result<T> {
        self.require_gradient_flow("Riccati residual")?;
        Self::check_interior(t, h)?;
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let (rp, ip) = self.complex_riccati_matrix(t + h)?;
        let (rm, im) = self.complex_riccati_matrix(t - h)?;
        let (re, imag) = self.complex_riccati_matrix(t)?;
        let re_dot = (&rp - &rm).scale((two * h).recip());
        let im_dot = (&ip - &im).scale((two * h).recip());
        // (A + iB)² = A² − B² + i(AB + BA)
        let sq_re = &(&re * &re) - &(&imag * &imag);
        let sq_im = &(&re * &imag) + &(&imag * &re);
        let res_re = &re_dot + &sq_re.scale(half);
        let res_im = &im_dot + &sq_im.scale(half);
        let f_re = res_re.frobenius_norm();
        let f_im = res_im.frobenius_norm();
        Ok((f_re * f_re + f_im * f_im).sqrt())
    }

    /// i.i.d. draws from the bridge marginal at time `t`.
    pub fn sample_marginal<R: Rng + ?Sized>(&self, t: T, n: usize, rng: &mut R) -> Result<Vec<Vec<T>>> {
        Ok(self.marginal(t)?.sample(n, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(mean: f64, var: f64) -> Gaussian<f64> {
        Gaussian::new(vec![mean], SpdMatrix::from_diag(&[var]).unwrap()).unwrap()
    }

    fn scalar_problem(s0: f64, s1: f64, beta: f64) -> BridgeProblem<f64> {
        BridgeProblem::new(scalar(0.0, s0), scalar(0.0, s1), beta, BridgeKind::Quantum).unwrap()
    }

    #[test]
    fn beta_max_examples() {
        let i2 = SpdMatrix::<f64>::identity(2);
        let four = SpdMatrix::from_diag(&[4.0, 4.0]).unwrap();
        assert!((beta_max(&i2, &four).unwrap() - 2.0).abs() < 1e-14);
        assert!((beta_max(&i2, &i2).unwrap() - 1.0).abs() < 1e-14);
        // diag(1,2) and diag(3,1): Σ₀^{1/2}Σ₁Σ₀^{1/2} = diag(3, 2)
        let a = SpdMatrix::from_diag(&[1.0, 2.0]).unwrap();
        let b = SpdMatrix::from_diag(&[3.0, 1.0]).unwrap();
        assert!((beta_max(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(beta_max(&a, &SpdMatrix::identity(3)).is_err());
    }

    #[test]
    fn mean_path() {
        assert_eq!(bridge_mean(&[0.0, 0.0], &[2.0, 4.0], 0.5), vec![1.0, 2.0]);
        assert_eq!(bridge_mean(&[1.0], &[1.0], 0.3), vec![1.0]);
        assert_eq!(bridge_mean(&[1.0, 2.0], &[5.0, 6.0], 0.0), vec![1.0, 2.0]);
        assert_eq!(bridge_mean(&[1.0, 2.0], &[5.0, 6.0], 1.0), vec![5.0, 6.0]);
    }

    #[test]
    fn scalar_quantum_covariance_values() {
        let p = scalar_problem(1.0, 1.0, 0.0);
        for t in [0.0, 0.3, 1.0] {
            assert!((p.covariance(t).unwrap().get(0, 0) - 1.0).abs() < 1e-15);
        }
        let p = scalar_problem(1.0, 4.0, 1.0);
        assert!((p.covariance(1.0).unwrap().get(0, 0) - 4.0).abs() < 1e-14);
        // ((1-t)σ₀ + t√(σ₀σ₁ − β²))²/σ₀ + t²β²/σ₀ at t = ½
        let expect = (0.5 + 0.5 * 3f64.sqrt()).powi(2) + 0.25;
        assert!((p.covariance(0.5).unwrap().get(0, 0) - expect).abs() < 1e-14);
    }

    #[test]
    fn infeasible_beta_reports_bound() {
        let err = BridgeProblem::new(scalar(0.0, 1.0), scalar(0.0, 4.0), 2.5, BridgeKind::Quantum).unwrap_err();
        match err {
            Error::Infeasible { beta, beta_max } => {
                assert_eq!(beta, 2.5);
                assert!((beta_max - 2.0).abs() < 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
        // classical SB has no such bound
        assert!(BridgeProblem::new(scalar(0.0, 1.0), scalar(0.0, 4.0), 2.5, BridgeKind::ClassicalSb).is_ok());
        assert!(BridgeProblem::new(scalar(0.0, 1.0), scalar(0.0, 4.0), 0.5, BridgeKind::BenamouBrenierOt).is_err());
    }

    #[test]
    fn covariance_dot_scalar_and_stationary() {
        let p = scalar_problem(1.0, 1.0, 0.0);
        assert!(p.covariance_dot(0.4).unwrap().get(0, 0).abs() < 1e-15);
        let p = scalar_problem(1.0, 4.0, 0.0);
        for t in [0.0, 0.25, 0.8] {
            let d = p.covariance_dot(t).unwrap().get(0, 0);
            assert!((d - 2.0 * (1.0 + t)).abs() < 1e-13);
        }
    }

    #[test]
    fn drift_vanishes_for_stationary_bridge() {
        let g = Gaussian::<f64>::new(
            vec![0.5, -1.0],
            SpdMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap(),
        )
        .unwrap();
        let p = BridgeProblem::new(g.clone(), g, 0.0, BridgeKind::Quantum).unwrap();
        assert!(p.drift_matrix(0.3).unwrap().frobenius_norm() < 1e-12);
        let v = p.drift_velocity(&[3.0, 1.0], 0.7).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn drift_diagonal_commuting_case() {
        let g0 = Gaussian::<f64>::new(vec![0.0, 0.0], SpdMatrix::from_diag(&[1.0, 2.0]).unwrap()).unwrap();
        let g1 = Gaussian::new(vec![1.0, 0.0], SpdMatrix::from_diag(&[3.0, 0.5]).unwrap()).unwrap();
        let p = BridgeProblem::new(g0, g1, 0.4, BridgeKind::Quantum).unwrap();
        let t = 0.35;
        let c = p.drift_matrix(t).unwrap();
        let s = p.covariance(t).unwrap();
        let sd = p.covariance_dot(t).unwrap();
        for i in 0..2 {
            assert!((c.get(i, i) - sd.get(i, i) / s.get(i, i)).abs() < 1e-12);
        }
        assert!(c.get(0, 1).abs() < 1e-12);
        let v = p.drift_velocity(&p.mean(t), t).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14);
    }

    #[test]
    fn translation_phase_by_hand() {
        // σ₀ = σ₁, β = 0: S = μ̇(x − μ(t)) + ½ μ̇² t
        let p = BridgeProblem::new(scalar(0.0, 2.0), scalar(3.0, 2.0), 0.0, BridgeKind::Quantum).unwrap();
        let (x, t) = (0.7, 0.4);
        let expect = 3.0 * (x - 3.0 * t) + 0.5 * 9.0 * t;
        assert!((p.phase(&[x], t).unwrap() - expect).abs() < 1e-12);
        let p = BridgeProblem::new(scalar(1.0, 2.0), scalar(1.0, 2.0), 0.0, BridgeKind::Quantum).unwrap();
        assert!(p.phase(&[1.0], 0.6).unwrap().abs() < 1e-15);
    }

    #[test]
    fn wavefunction_definitions() {
        let p = scalar_problem(1.0, 4.0, 1.0);
        let t = 0.4;
        let mu = p.mean(t);
        let (mag, _) = p.wavefunction(&mu, t).unwrap();
        let var = p.covariance(t).unwrap().get(0, 0);
        let expect = (2.0 * std::f64::consts::PI).powf(-0.25) * var.powf(-0.25);
        assert!((mag - expect).abs() < 1e-14);
        let x = [0.8];
        let (mag, phase) = p.wavefunction(&x, t).unwrap();
        assert!((mag * mag - p.marginal(t).unwrap().pdf(&x)).abs() < 1e-15);
        assert!((phase * 2.0 - p.phase(&x, t).unwrap()).abs() < 1e-14);
        assert!(matches!(
            scalar_problem(1.0, 4.0, 0.0).wavefunction(&x, t),
            Err(Error::ZeroBeta)
        ));
    }

    #[test]
    fn boundary_time_rejected() {
        let p = scalar_problem(1.0, 4.0, 1.0);
        let steps = FdSteps::default();
        assert!(matches!(
            p.continuity_residual(&[0.0], 0.00005, steps),
            Err(Error::BoundaryTime { .. })
        ));
        assert!(matches!(p.riccati_residual(1.0, 1e-4), Err(Error::BoundaryTime { .. })));
    }

    #[test]
    fn scalar_residuals_small() {
        let p = scalar_problem(1.0, 4.0, 1.0);
        let steps = FdSteps::default();
        let density = p.marginal(0.5).unwrap().pdf(&[0.3]);
        assert!(p.continuity_residual(&[0.3], 0.5, steps).unwrap() < 1e-5 * density);
        assert!(p.hje_residual(&[0.3], 0.5, steps).unwrap() < 1e-4);
        assert!(p.riccati_residual(0.5, 1e-4).unwrap() < 1e-4);
    }

    #[test]
    fn stationary_residuals_vanish() {
        let p = scalar_problem(1.0, 1.0, 0.0);
        let steps = FdSteps::default();
        assert!(p.continuity_residual(&[0.4], 0.5, steps).unwrap() < 1e-14);
        assert!(p.hje_residual(&[0.4], 0.5, steps).unwrap() < 1e-12);
        assert!(p.riccati_residual(0.5, 1e-4).unwrap() < 1e-12);
    }

    #[test]
    fn printed_linear_beta_term_violates_riccati() {
        // Σ(t) = ((1-t)σ₀ + t r)²/σ₀ + t β²/σ₀ satisfies both endpoint
        // conditions but not the quantum Riccati equation: the invariant
        // σσ̈ − σ̇²/2 must equal 2β² along a solution.
        let (s0, s1, b) = (1.0f64, 4.0f64, 1.0f64);
        let r = (s0 * s1 - b * b).sqrt();
        let linear = |t: f64| ((1.0 - t) * s0 + t * r).powi(2) / s0 + t * b * b / s0;
        let quadratic = |t: f64| ((1.0 - t) * s0 + t * r).powi(2) / s0 + t * t * b * b / s0;
        let invariant = |f: &dyn Fn(f64) -> f64, t: f64| {
            let h = 1e-4;
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            f(t) * d2 - 0.5 * d1 * d1
        };
        assert!((invariant(&quadratic, 0.5) - 2.0).abs() < 1e-5);
        assert!((invariant(&linear, 0.5) - 2.0).abs() > 1.0);
        let p = scalar_problem(s0, s1, b);
        assert!((p.covariance(0.5).unwrap().get(0, 0) - quadratic(0.5)).abs() < 1e-14);
    }

    #[test]
    fn classical_and_ot_endpoints() {
        let g0 = scalar(0.0, 1.0);
        let g1 = scalar(2.0, 4.0);
        let c = BridgeProblem::new(g0.clone(), g1.clone(), 0.7, BridgeKind::ClassicalSb).unwrap();
        assert!((c.covariance(0.0).unwrap().get(0, 0) - 1.0).abs() < 1e-14);
        assert!((c.covariance(1.0).unwrap().get(0, 0) - 4.0).abs() < 1e-13);
        assert!(matches!(c.drift_matrix(0.5), Err(Error::UnsupportedKind { .. })));
        let ot = BridgeProblem::new(g0, g1, 0.0, BridgeKind::BenamouBrenierOt).unwrap();
        // standard deviation is affine: 1 + t
        assert!((ot.covariance(0.5).unwrap().get(0, 0) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn sampling_reproducible() {
        let p = scalar_problem(1.0, 4.0, 1.0);
        let a = p.sample_marginal(0.3, 1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = p.sample_marginal(0.3, 1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_precision_boundaries() {
        let g0 = Gaussian::<f32>::new(
            vec![0.0, 1.0],
            SpdMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.5]]).unwrap(),
        )
        .unwrap();
        let g1 = Gaussian::<f32>::new(vec![1.0, 1.0], SpdMatrix::from_diag(&[2.0, 1.5]).unwrap()).unwrap();
        let p = BridgeProblem::new(g0.clone(), g1.clone(), 0.3, BridgeKind::Quantum).unwrap();
        let s1 = p.covariance(1.0).unwrap();
        assert!(crate::spd::relative_frobenius(s1.as_matrix(), g1.cov().as_matrix()) < 1e-5);
    }
}
