//! Bohm (quantum) potential `Q = −β²(Δ log p + ½|∇ log p|²)`.

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::scalar::{dot, norm_sq, sub, to_f64_vec, Scalar};

/// `∇ log p(x) = −Σ⁻¹(x − μ)`; the osmotic velocity is `β` times this.
pub fn score_gaussian<T: Scalar>(g: &Gaussian<T>, x: &[T]) -> Vec<T> {
    g.score(x)
}

/// Closed form for a Gaussian: `β²[Tr(Σ⁻¹) − ½ (x−μ)ᵀ Σ⁻² (x−μ)]`.
pub fn bohm_gaussian<T: Scalar>(g: &Gaussian<T>, beta: T, x: &[T]) -> T {
    let d = sub(x, g.mean());
    let pd = g.precision().matvec(&d);
    beta * beta * (g.precision().trace() - T::lit(0.5) * norm_sq(&pd))
}

/// Expected Bohm potential under the Gaussian itself, `(β²/2) Tr(Σ⁻¹)`.
pub fn internal_energy<T: Scalar>(g: &Gaussian<T>, beta: T) -> T {
    T::lit(0.5) * beta * beta * g.precision().trace()
}

struct Stencil<T> {
    laplacian: T,
    gradient: Vec<T>,
}

/// Per-axis central differences with step `h (1 + |x_i|)`.
fn log_density_stencil<T: Scalar>(logp: &dyn Fn(&[T]) -> T, x: &[T], h: T) -> Result<Stencil<T>> {
    let check = |p: &[T], v: T| -> Result<T> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteLogDensity { point: to_f64_vec(p) })
        }
    };
    let f0 = check(x, logp(x))?;
    let two = T::lit(2.0);
    let mut laplacian = T::zero();
    let mut gradient = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for a in 0..x.len() {
        let delta = h * (T::one() + x[a].abs());
        probe[a] = x[a] + delta;
        let fp = check(&probe, logp(&probe))?;
        probe[a] = x[a] - delta;
        let fm = check(&probe, logp(&probe))?;
        probe[a] = x[a];
        laplacian += (fp - two * f0 + fm) / (delta * delta);
        gradient.push((fp - fm) / (two * delta));
    }
    Ok(Stencil { laplacian, gradient })
}

/// Finite-difference Bohm potential of an arbitrary log-density.
pub fn bohm_generic_fd<T: Scalar>(logp: &dyn Fn(&[T]) -> T, beta: T, x: &[T], h: T) -> Result<T> {
    let s = log_density_stencil(logp, x, h)?;
    Ok(-beta * beta * (s.laplacian + T::lit(0.5) * dot(&s.gradient, &s.gradient)))
}

/// The amplitude form `−2β² Δ√p / √p`, differencing `√p` instead of `log p`.
pub fn bohm_amplitude_fd<T: Scalar>(logp: &dyn Fn(&[T]) -> T, beta: T, x: &[T], h: T) -> Result<T> {
    let f0 = logp(x);
    if !f0.is_finite() {
        return Err(Error::NonFiniteLogDensity { point: to_f64_vec(x) });
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    // √p(y)/√p(x) = exp(½(log p(y) − log p(x))), avoiding underflow in the tails.
    let ratio = |y: &[T]| -> Result<T> {
        let v = logp(y);
        if v.is_finite() {
            Ok((half * (v - f0)).exp())
        } else {
            Err(Error::NonFiniteLogDensity { point: to_f64_vec(y) })
        }
    };
    let mut lap = T::zero();
    let mut probe = x.to_vec();
    for a in 0..x.len() {
        let delta = h * (T::one() + x[a].abs());
        probe[a] = x[a] + delta;
        let rp = ratio(&probe)?;
        probe[a] = x[a] - delta;
        let rm = ratio(&probe)?;
        probe[a] = x[a];
        lap += (rp - two + rm) / (delta * delta);
    }
    Ok(-two * beta * beta * lap)
}
