//! Gaussian mixtures: density, responsibilities, EM fitting, sampling and the
//! mixture Bohm potential.

use log::{debug, warn};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bohm::bohm_gaussian;
use crate::error::{check_dim, Error, Result};
use crate::gaussian::Gaussian;
use crate::scalar::{dot, norm_sq, sub, Scalar};
use crate::spd::{SpdMatrix, SymMatrix};

/// Mixture `p(x) = Σₖ αₖ N(x; μₖ, Σₖ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture<T> {
    weights: Vec<T>,
    log_weights: Vec<T>,
    components: Vec<Gaussian<T>>,
}

fn weight_tolerance<T: Scalar>() -> T {
    (T::epsilon() * T::lit(100.0)).max(T::lit(1e-12))
}

fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

impl<T: Scalar> GaussianMixture<T> {
    /// Weights must be nonnegative and sum to one within rounding.
    pub fn new(weights: Vec<T>, components: Vec<Gaussian<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("a mixture needs at least one component".into()));
        }
        check_dim("mixture weights vs components", components.len(), weights.len())?;
        let dim = components[0].dim();
        for (k, c) in components.iter().enumerate() {
            check_dim("mixture component dimension", dim, c.dim()).map_err(|e| e.in_component(k))?;
        }
        if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "mixture weights must be finite and nonnegative".into(),
            ));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > weight_tolerance::<T>() {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self::from_normalized(weights, components))
    }

    fn from_normalized(weights: Vec<T>, components: Vec<Gaussian<T>>) -> Self {
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Self {
            weights,
            log_weights,
            components,
        }
    }

    pub fn single(g: Gaussian<T>) -> Self {
        Self::from_normalized(vec![T::one()], vec![g])
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn components(&self) -> &[Gaussian<T>] {
        &self.components
    }

    /// `log αₖ + log Nₖ(x)` for every component.
    pub fn component_log_joint(&self, x: &[T]) -> Vec<T> {
        self.components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, &lw)| lw + c.log_pdf(x))
            .collect()
    }

    pub fn log_pdf(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.dim(), "mixture log_pdf dimension");
        log_sum_exp(&self.component_log_joint(x))
    }

    pub fn pdf(&self, x: &[T]) -> T {
        self.log_pdf(x).exp()
    }

    /// Posterior membership `wₖ(x) = αₖ Nₖ(x) / p(x)`.
    pub fn responsibilities(&self, x: &[T]) -> Vec<T> {
        let lj = self.component_log_joint(x);
        let lse = log_sum_exp(&lj);
        let mut w: Vec<T> = lj.into_iter().map(|l| (l - lse).exp()).collect();
        let s: T = w.iter().copied().sum();
        w.iter_mut().for_each(|v| *v /= s);
        w
    }

    /// `∇ log p(x) = Σₖ wₖ ∇ log Nₖ(x)`.
    pub fn score(&self, x: &[T]) -> Vec<T> {
        let w = self.responsibilities(x);
        let mut out = vec![T::zero(); self.dim()];
        for (c, wk) in self.components.iter().zip(w) {
            for (o, s) in out.iter_mut().zip(c.score(x)) {
                *o += wk * s;
            }
        }
        out
    }

    /// Overall mixture mean.
    pub fn mean(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        for (c, &w) in self.components.iter().zip(&self.weights) {
            for (o, &m) in out.iter_mut().zip(c.mean()) {
                *o += w * m;
            }
        }
        out
    }

    /// Overall mixture covariance `Σₖ αₖ (Σₖ + μₖμₖᵀ) − μμᵀ`.
    pub fn covariance(&self) -> SymMatrix<T> {
        let mu = self.mean();
        let n = self.dim();
        SymMatrix::from_upper_fn(n, |i, j| {
            let mut s = T::zero();
            for (c, &w) in self.components.iter().zip(&self.weights) {
                let m = c.mean();
                s += w * (c.cov().get(i, j) + m[i] * m[j]);
            }
            s - mu[i] * mu[j]
        })
    }

    /// Ancestral sampling.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<T>> {
        self.sample_labeled(n, rng).into_iter().map(|(_, x)| x).collect()
    }

    /// Ancestral sampling, returning the drawn component with each point.
    pub fn sample_labeled<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(usize, Vec<T>)> {
        let roots: Vec<_> = self.components.iter().map(|c| c.cov().sqrt()).collect();
        let w: Vec<f64> = self.weights.iter().map(|w| w.as_f64()).collect();
        let index = WeightedIndex::new(&w).expect("mixture weights are a distribution");
        (0..n)
            .map(|_| {
                let k = index.sample(rng);
                (k, self.components[k].sample_with_root(roots[k].as_matrix(), rng))
            })
            .collect()
    }

    /// Mean log-likelihood of a point set.
    pub fn mean_log_likelihood(&self, samples: &[Vec<T>]) -> T {
        let total: T = samples.iter().map(|x| self.log_pdf(x)).sum();
        total / T::from_usize(samples.len()).unwrap()
    }
}

/// The two parts of the mixture Bohm potential at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BohmParts<T> {
    /// `Σₖ wₖ Qₖ`.
    pub weighted: T,
    /// `(β²/2)[‖∇log p‖² − Σₖ wₖ ‖∇log Nₖ‖²]`, never positive.
    pub mixing: T,
}

pub fn bohm_mixture_parts<T: Scalar>(mix: &GaussianMixture<T>, beta: T, x: &[T]) -> BohmParts<T> {
    let w = mix.responsibilities(x);
    let mut weighted = T::zero();
    let mut score = vec![T::zero(); mix.dim()];
    let mut mean_sq = T::zero();
    for (c, &wk) in mix.components().iter().zip(&w) {
        weighted += wk * bohm_gaussian(c, beta, x);
        let s = c.score(x);
        mean_sq += wk * norm_sq(&s);
        for (o, v) in score.iter_mut().zip(s) {
            *o += wk * v;
        }
    }
    let mixing = T::lit(0.5) * beta * beta * (norm_sq(&score) - mean_sq);
    BohmParts { weighted, mixing }
}

/// Exact Bohm potential of a mixture.
pub fn bohm_mixture<T: Scalar>(mix: &GaussianMixture<T>, beta: T, x: &[T]) -> T {
    let p = bohm_mixture_parts(mix, beta, x);
    p.weighted + p.mixing
}

/// Bohm potential with the mixing term optionally dropped.
pub fn bohm_mixture_with<T: Scalar>(mix: &GaussianMixture<T>, beta: T, x: &[T], include_mixing: bool) -> T {
    let p = bohm_mixture_parts(mix, beta, x);
    if include_mixing {
        p.weighted + p.mixing
    } else {
        p.weighted
    }
}

#[derive(Clone, Debug)]
pub enum EmInit<T> {
    KMeansPlusPlus { restarts: usize },
    WarmStart(GaussianMixture<T>),
}

#[derive(Clone, Debug)]
pub struct EmConfig<T> {
    pub max_iters: usize,
    /// Relative change of mean log-likelihood that stops the iteration.
    pub tol: T,
    /// Diagonal loading added to every covariance; `None` means `1e-6` times
    /// the mean per-axis data variance.
    pub ridge: Option<T>,
    pub init: EmInit<T>,
    pub seed: u64,
}

impl<T: Scalar> Default for EmConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: T::lit(1e-6),
            ridge: None,
            init: EmInit::KMeansPlusPlus { restarts: 10 },
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmReport<T> {
    /// Mean log-likelihood before each M-step, then of the returned mixture.
    pub log_likelihood: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub reseeded: usize,
}

fn data_scale<T: Scalar>(samples: &[Vec<T>]) -> T {
    let n = T::from_usize(samples.len()).unwrap();
    let d = samples[0].len();
    let mut total = T::zero();
    for a in 0..d {
        let m = samples.iter().map(|x| x[a]).sum::<T>() / n;
        total += samples.iter().map(|x| (x[a] - m) * (x[a] - m)).sum::<T>() / n;
    }
    let s = total / T::from_usize(d).unwrap();
    if s > T::zero() {
        s
    } else {
        T::one()
    }
}

fn weighted_gaussian<T: Scalar>(samples: &[Vec<T>], weights: &[T], ridge: T, scale: T) -> Result<(T, Gaussian<T>)> {
    let d = samples[0].len();
    let nk: T = weights.iter().copied().sum();
    let mut mean = vec![T::zero(); d];
    for (x, &w) in samples.iter().zip(weights) {
        for (m, &v) in mean.iter_mut().zip(x) {
            *m += w * v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nk);
    let mut cov = vec![T::zero(); d * d];
    for (x, &w) in samples.iter().zip(weights) {
        if w == T::zero() {
            continue;
        }
        let dx = sub(x, &mean);
        for i in 0..d {
            let wi = w * dx[i];
            for j in i..d {
                cov[i * d + j] += wi * dx[j];
            }
        }
    }
    let sym = SymMatrix::from_upper_fn(d, |i, j| cov[i * d + j] / nk).add_identity(ridge);
    let spd = match SpdMatrix::new(sym.clone()) {
        Ok(s) => s,
        Err(_) => {
            debug!("degenerate covariance, applying ridge floor");
            SpdMatrix::new(sym.add_identity(T::lit(1e-10) * scale))?
        }
    };
    Ok((nk, Gaussian::new(mean, spd)?))
}

/// k-means++ seeding followed by a few Lloyd sweeps; returns hard labels.
fn kmeans_labels<T: Scalar>(samples: &[Vec<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = samples.len();
    let mut centers: Vec<Vec<T>> = vec![samples[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = samples.iter().map(|x| norm_sq(&sub(x, &centers[0])).as_f64()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            WeightedIndex::new(&d2)
                .map(|w| w.sample(rng))
                .unwrap_or_else(|_| rng.random_range(0..n))
        } else {
            rng.random_range(0..n)
        };
        centers.push(samples[next].clone());
        let c = centers.last().unwrap();
        for (d, x) in d2.iter_mut().zip(samples) {
            *d = d.min(norm_sq(&sub(x, c)).as_f64());
        }
    }
    let mut labels = vec![0usize; n];
    for _ in 0..10 {
        let mut changed = false;
        for (i, x) in samples.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| {
                    norm_sq(&sub(x, &centers[a]))
                        .partial_cmp(&norm_sq(&sub(x, &centers[b])))
                        .unwrap()
                })
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let d = samples[0].len();
        let mut sums = vec![vec![T::zero(); d]; k];
        let mut counts = vec![0usize; k];
        for (x, &l) in samples.iter().zip(&labels) {
            counts[l] += 1;
            for (s, &v) in sums[l].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let cnt = T::from_usize(counts[c]).unwrap();
                centers[c] = sums[c].iter().map(|&s| s / cnt).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn mixture_from_labels<T: Scalar>(
    samples: &[Vec<T>],
    labels: &[usize],
    k: usize,
    ridge: T,
    scale: T,
    rng: &mut ChaCha8Rng,
) -> Result<GaussianMixture<T>> {
    let n = samples.len();
    let mut weights = Vec::with_capacity(k);
    let mut comps = Vec::with_capacity(k);
    for c in 0..k {
        let mut w: Vec<T> = labels
            .iter()
            .map(|&l| if l == c { T::one() } else { T::zero() })
            .collect();
        if labels.iter().all(|&l| l != c) {
            w[rng.random_range(0..n)] = T::one();
        }
        let (nk, g) = weighted_gaussian(samples, &w, ridge, scale)?;
        weights.push(nk);
        comps.push(g);
    }
    let total: T = weights.iter().copied().sum();
    Ok(GaussianMixture::from_normalized(
        weights.into_iter().map(|w| w / total).collect(),
        comps,
    ))
}

fn run_em<T: Scalar>(
    samples: &[Vec<T>],
    mut mix: GaussianMixture<T>,
    config: &EmConfig<T>,
    ridge: T,
    scale: T,
    rng: &mut ChaCha8Rng,
) -> Result<(GaussianMixture<T>, EmReport<T>)> {
    let n = samples.len();
    let k = mix.n_components();
    let nf = T::from_usize(n).unwrap();
    let mut trace = Vec::new();
    let mut reseeded = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut resp = vec![vec![T::zero(); n]; k];
    loop {
        let mut ll = T::zero();
        for (i, x) in samples.iter().enumerate() {
            let lj = mix.component_log_joint(x);
            let lse = log_sum_exp(&lj);
            ll += lse;
            for (c, l) in lj.into_iter().enumerate() {
                resp[c][i] = (l - lse).exp();
            }
        }
        let ll = ll / nf;
        if !ll.is_finite() {
            return Err(Error::Diverged {
                iteration: iterations,
                loss: ll.as_f64(),
            });
        }
        if let Some(&prev) = trace.last() {
            let prev: T = prev;
            if (ll - prev).abs() <= config.tol * prev.abs().max(T::one()) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == config.max_iters {
            break;
        }
        iterations += 1;
        let mut weights = Vec::with_capacity(k);
        let mut comps = Vec::with_capacity(k);
        for (c, r) in resp.iter_mut().enumerate() {
            let nk: T = r.iter().copied().sum();
            if nk < T::lit(1e-8) * nf || nk <= T::epsilon() {
                let i = rng.random_range(0..n);
                warn!("EM component {c} lost all mass at iteration {iterations}; reseeding at sample {i}");
                reseeded += 1;
                r.iter_mut().for_each(|v| *v = T::zero());
                r[i] = T::one();
            }
            let (nk, g) = weighted_gaussian(samples, r, ridge, scale).map_err(|e| e.in_component(c))?;
            weights.push(nk);
            comps.push(g);
        }
        let total: T = weights.iter().copied().sum();
        mix = GaussianMixture::from_normalized(weights.into_iter().map(|w| w / total).collect(), comps);
    }
    Ok((
        mix,
        EmReport {
            log_likelihood: trace,
            iterations,
            converged,
            reseeded,
        },
    ))
}

/// Expectation maximization for a `k`-component mixture.
pub fn fit_em<T: Scalar>(
    samples: &[Vec<T>],
    k: usize,
    config: &EmConfig<T>,
) -> Result<(GaussianMixture<T>, EmReport<T>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("EM needs at least one component".into()));
    }
    if samples.len() < k {
        return Err(Error::InvalidArgument(format!(
            "EM needs at least {k} samples, got {}",
            samples.len()
        )));
    }
    let d = samples[0].len();
    for x in samples {
        check_dim("EM sample", d, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("EM samples must be finite".into()));
        }
    }
    if !(config.tol > T::zero()) {
        return Err(Error::InvalidArgument("EM tolerance must be positive".into()));
    }
    let scale = data_scale(samples);
    let ridge = config.ridge.unwrap_or(T::lit(1e-6) * scale);
    if !(ridge >= T::zero()) {
        return Err(Error::InvalidArgument("EM ridge must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match &config.init {
        EmInit::WarmStart(m) => {
            if m.n_components() != k {
                return Err(Error::InvalidArgument(format!(
                    "warm start has {} components, expected {k}",
                    m.n_components()
                )));
            }
            check_dim("EM warm start", d, m.dim())?;
            run_em(samples, m.clone(), config, ridge, scale, &mut rng)
        }
        EmInit::KMeansPlusPlus { restarts } => {
            let mut best: Option<(GaussianMixture<T>, EmReport<T>)> = None;
            for r in 0..(*restarts).max(1) {
                let labels = kmeans_labels(samples, k, &mut rng);
                let init = mixture_from_labels(samples, &labels, k, ridge, scale, &mut rng)?;
                let fit = run_em(samples, init, config, ridge, scale, &mut rng)?;
                let ll = *fit.1.log_likelihood.last().unwrap();
                debug!("EM restart {r}: mean log-likelihood {ll}");
                if best.as_ref().is_none_or(|b| ll > *b.1.log_likelihood.last().unwrap()) {
                    best = Some(fit);
                }
            }
            Ok(best.unwrap())
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GaussianJson {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MixtureJson {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub components: Vec<GaussianJson>,
}

impl GaussianJson {
    pub fn from_gaussian<T: Scalar>(g: &Gaussian<T>) -> Self {
        let n = g.dim();
        Self {
            mean: g.mean().iter().map(|v| v.as_f64()).collect(),
            cov: (0..n)
                .map(|i| (0..n).map(|j| g.cov().get(i, j).as_f64()).collect())
                .collect(),
        }
    }

    pub fn to_gaussian<T: Scalar>(&self) -> Result<Gaussian<T>> {
        let rows: Vec<Vec<T>> = self
            .cov
            .iter()
            .map(|r| r.iter().map(|&v| T::lit(v)).collect())
            .collect();
        let cov = SpdMatrix::from_rows(&rows)?;
        Gaussian::new(self.mean.iter().map(|&v| T::lit(v)).collect(), cov)
    }
}

impl MixtureJson {
    pub fn from_mixture<T: Scalar>(m: &GaussianMixture<T>) -> Self {
        Self {
            dim: m.dim(),
            weights: m.weights().iter().map(|w| w.as_f64()).collect(),
            components: m.components().iter().map(GaussianJson::from_gaussian).collect(),
        }
    }

    pub fn to_mixture<T: Scalar>(&self) -> Result<GaussianMixture<T>> {
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let g = c.to_gaussian::<T>().map_err(|e| e.in_component(k))?;
                check_dim("mixture JSON dim", self.dim, g.dim()).map_err(|e| e.in_component(k))?;
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(self.weights.iter().map(|&w| T::lit(w)).collect(), comps)
    }
}

impl<T: Scalar> GaussianMixture<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MixtureJson::from_mixture(self)).expect("mixture serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MixtureJson = serde_json::from_str(s)?;
        m.to_mixture()
    }
}

/// Hard label of the most responsible component for each point.
pub fn hard_labels<T: Scalar>(mix: &GaussianMixture<T>, samples: &[Vec<T>]) -> Vec<usize> {
    samples
        .iter()
        .map(|x| {
            let lj = mix.component_log_joint(x);
            (0..lj.len())
                .max_by(|&a, &b| lj[a].partial_cmp(&lj[b]).unwrap())
                .unwrap()
        })
        .collect()
}

/// Used by tests and diagnostics: `Σ wₖ (x−μₖ)ᵀΣₖ⁻¹[Σⱼ wⱼ Σⱼ⁻¹(x−μⱼ) − Σₖ⁻¹(x−μₖ)]`
/// scaled by `β²/2`, the mixing term written per component.
pub fn mixing_term_componentwise<T: Scalar>(mix: &GaussianMixture<T>, beta: T, x: &[T]) -> T {
    let w = mix.responsibilities(x);
    let a: Vec<Vec<T>> = mix
        .components()
        .iter()
        .map(|c| c.precision().matvec(&sub(x, c.mean())))
        .collect();
    let mut abar = vec![T::zero(); x.len()];
    for (ak, &wk) in a.iter().zip(&w) {
        for (o, &v) in abar.iter_mut().zip(ak) {
            *o += wk * v;
        }
    }
    let mut s = T::zero();
    for (ak, &wk) in a.iter().zip(&w) {
        s += wk * dot(ak, &sub(&abar, ak));
    }
    T::lit(0.5) * beta * beta * s
}
