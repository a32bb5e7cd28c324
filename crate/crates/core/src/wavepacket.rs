//! Wavepacket propagation: a Gaussian mixture bridge where component `k`
//! follows the closed-form quantum bridge from `start[k]` to `end[k]` and the
//! weights are shared by both endpoints.

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{min_cost_assignment, CostMatrix};
use crate::bridge::{BridgeKind, BridgeProblem};
use crate::error::{check_dim, Error, Result};
use crate::gaussian::{standard_normal_vec, Gaussian};
use crate::gmm::{fit_em, EmConfig, EmInit, GaussianJson, GaussianMixture};
use crate::metrics::w2_gaussian;
use crate::scalar::{sub, Scalar};
use crate::spd::Matrix;

/// How the additive noise of the population update is shaped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseConvention {
    /// `√(2β) Σ(t_{i+1})^{1/2} ξ`: keeps every marginal covariance exact.
    #[default]
    #[serde(rename = "covariance")]
    Covariance,
    /// `√(2β) ξ` with unit isotropic noise; exact only when `Σ = I`.
    #[serde(rename = "isotropic")]
    Isotropic,
}

/// Per-step factors of the population update for one Gaussian path.
pub(crate) struct StepFactors<T> {
    pub mean: Vec<T>,
    pub next_mean: Vec<T>,
    /// `Σ_{i+1}^{1/2} Σ_i^{-1/2}`.
    pub transport: Matrix<T>,
    /// `Σ_{i+1}^{1/2}`.
    pub next_root: Matrix<T>,
}

pub(crate) fn check_noise<T: Scalar>(beta: T) -> Result<()> {
    if !(T::lit(2.0) * beta <= T::one()) {
        return Err(Error::NoiseTooLarge { beta: beta.as_f64() });
    }
    Ok(())
}

/// `x_{i+1} = μ_{i+1} + √(1−2β) Σ_{i+1}^{1/2}Σ_i^{-1/2}(x_i − μ_i) + noise`.
pub(crate) fn population_step<T: Scalar>(
    f: &StepFactors<T>,
    beta: T,
    noise: NoiseConvention,
    x: &[T],
    xi: &[T],
) -> Vec<T> {
    let two_beta = T::lit(2.0) * beta;
    let keep = (T::one() - two_beta).sqrt();
    let kick = two_beta.sqrt();
    let drift = f.transport.matvec(&sub(x, &f.mean));
    let shaped = match noise {
        NoiseConvention::Covariance => f.next_root.matvec(xi),
        NoiseConvention::Isotropic => xi.to_vec(),
    };
    f.next_mean
        .iter()
        .zip(drift)
        .zip(shaped)
        .map(|((&m, d), e)| m + keep * d + kick * e)
        .collect()
}

/// Trained mixture bridge.
#[derive(Clone, Debug)]
pub struct CoupledMixtureBridge<T> {
    weights: Vec<T>,
    beta: T,
    component_beta: Vec<T>,
    bridges: Vec<BridgeProblem<T>>,
}

/// Default fraction of `beta_max` used when the requested `β` is infeasible.
pub const DEFAULT_CLAMP_FACTOR: f64 = 0.95;

impl<T: Scalar> CoupledMixtureBridge<T> {
    /// Builds the per-component quantum bridges. A component whose
    /// `beta_max` is below `beta` runs at `clamp_factor · beta_max` instead.
    pub fn new(
        weights: Vec<T>,
        start: Vec<Gaussian<T>>,
        end: Vec<Gaussian<T>>,
        beta: T,
        clamp_factor: T,
    ) -> Result<Self> {
        check_dim("bridge start vs end components", start.len(), end.len())?;
        if !(clamp_factor > T::zero() && clamp_factor < T::one()) {
            return Err(Error::InvalidArgument(format!(
                "clamp factor must lie in (0, 1), got {clamp_factor}"
            )));
        }
        // validates weights and dimensions
        GaussianMixture::new(weights.clone(), start.clone())?;
        GaussianMixture::new(weights.clone(), end.clone())?;
        let mut bridges = Vec::with_capacity(start.len());
        let mut component_beta = Vec::with_capacity(start.len());
        for (k, (s, e)) in start.into_iter().zip(end).enumerate() {
            let bmax = crate::bridge::beta_max(s.cov(), e.cov()).map_err(|err| err.in_component(k))?;
            let bk = if beta <= bmax {
                beta
            } else {
                let b = clamp_factor * bmax;
                info!("component {k}: beta {beta} exceeds beta_max {bmax}, clamped to {b}");
                b
            };
            let p = BridgeProblem::new(s, e, bk, BridgeKind::Quantum).map_err(|err| err.in_component(k))?;
            bridges.push(p);
            component_beta.push(bk);
        }
        Ok(Self {
            weights,
            beta,
            component_beta,
            bridges,
        })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.bridges[0].dim()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Requested diffusion coefficient.
    pub fn beta(&self) -> T {
        self.beta
    }

    /// Diffusion coefficient each component actually runs at.
    pub fn component_beta(&self) -> &[T] {
        &self.component_beta
    }

    pub fn component(&self, k: usize) -> &BridgeProblem<T> {
        &self.bridges[k]
    }

    pub fn start(&self) -> GaussianMixture<T> {
        GaussianMixture::new(
            self.weights.clone(),
            self.bridges.iter().map(|b| b.start().clone()).collect(),
        )
        .expect("validated at construction")
    }

    pub fn end(&self) -> GaussianMixture<T> {
        GaussianMixture::new(
            self.weights.clone(),
            self.bridges.iter().map(|b| b.end().clone()).collect(),
        )
        .expect("validated at construction")
    }

    /// Mixture of the component bridge marginals at time `t`; the endpoints
    /// return the stored parameters unchanged.
    pub fn mixture_marginal(&self, t: T) -> Result<GaussianMixture<T>> {
        if t == T::zero() {
            return Ok(self.start());
        }
        if t == T::one() {
            return Ok(self.end());
        }
        let comps = self
            .bridges
            .iter()
            .enumerate()
            .map(|(k, b)| b.marginal(t).map_err(|e| e.in_component(k)))
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(self.weights.clone(), comps)
    }

    fn step_factors(&self, k: usize, t_grid: &[T]) -> Result<Vec<StepFactors<T>>> {
        let b = &self.bridges[k];
        let covs = t_grid
            .iter()
            .map(|&t| b.covariance(t))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_component(k))?;
        Ok(t_grid
            .windows(2)
            .zip(covs.windows(2))
            .map(|(t, c)| {
                let next_root = c[1].sqrt().as_matrix().clone();
                StepFactors {
                    mean: b.mean(t[0]),
                    next_mean: b.mean(t[1]),
                    transport: &next_root * c[0].inv_sqrt().as_matrix(),
                    next_root,
                }
            })
            .collect())
    }

    /// Moves each sample along the grid inside the component it is assigned
    /// to at `t_grid[0]`. Sample `i` uses its own ChaCha stream `i` of `seed`,
    /// so paths do not depend on how the work is split.
    pub fn propagate_samples(
        &self,
        x0: &[Vec<T>],
        t_grid: &[T],
        seed: u64,
        noise: NoiseConvention,
    ) -> Result<Vec<SamplePath<T>>> {
        if t_grid.is_empty() {
            return Err(Error::InvalidArgument("time grid is empty".into()));
        }
        for w in t_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
            }
        }
        if !(t_grid[0] >= T::zero() && t_grid[t_grid.len() - 1] <= T::one()) {
            return Err(Error::InvalidArgument("time grid must lie in [0, 1]".into()));
        }
        for (k, &b) in self.component_beta.iter().enumerate() {
            check_noise(b).map_err(|e| e.in_component(k))?;
        }
        for x in x0 {
            check_dim("propagated sample", self.dim(), x.len())?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("initial samples must be finite".into()));
            }
        }
        let initial = self.mixture_marginal(t_grid[0])?;
        let factors = (0..self.n_components())
            .map(|k| self.step_factors(k, t_grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(x0
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let w = initial.responsibilities(x);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = w.len() - 1;
                for (j, wj) in w.iter().enumerate() {
                    acc += wj.as_f64();
                    if u < acc {
                        k = j;
                        break;
                    }
                }
                let mut points = Vec::with_capacity(t_grid.len());
                points.push(x.clone());
                for f in &factors[k] {
                    let xi = standard_normal_vec(self.dim(), &mut rng);
                    let next = population_step(f, self.component_beta[k], noise, points.last().unwrap(), &xi);
                    points.push(next);
                }
                SamplePath { component: k, points }
            })
            .collect())
    }

    pub fn to_json_value(&self) -> BridgeJson {
        BridgeJson {
            dim: self.dim(),
            beta: self.beta.as_f64(),
            weights: self.weights.iter().map(|w| w.as_f64()).collect(),
            start: self
                .bridges
                .iter()
                .map(|b| GaussianJson::from_gaussian(b.start()))
                .collect(),
            end: self
                .bridges
                .iter()
                .map(|b| GaussianJson::from_gaussian(b.end()))
                .collect(),
            component_beta: self.component_beta.iter().map(|b| b.as_f64()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("bridge serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: BridgeJson = serde_json::from_str(s)?;
        j.to_bridge()
    }
}

/// One propagated sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath<T> {
    pub component: usize,
    pub points: Vec<Vec<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BridgeJson {
    pub dim: usize,
    pub beta: f64,
    pub weights: Vec<f64>,
    pub start: Vec<GaussianJson>,
    pub end: Vec<GaussianJson>,
    /// Effective per-component `β`; recomputed by clamping when absent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub component_beta: Vec<f64>,
}

impl BridgeJson {
    pub fn to_bridge<T: Scalar>(&self) -> Result<CoupledMixtureBridge<T>> {
        let load = |v: &[GaussianJson]| {
            v.iter()
                .enumerate()
                .map(|(k, g)| {
                    let g = g.to_gaussian::<T>().map_err(|e| e.in_component(k))?;
                    check_dim("bridge JSON dim", self.dim, g.dim()).map_err(|e| e.in_component(k))?;
                    Ok(g)
                })
                .collect::<Result<Vec<_>>>()
        };
        let start = load(&self.start)?;
        let end = load(&self.end)?;
        let weights: Vec<T> = self.weights.iter().map(|&w| T::lit(w)).collect();
        let mut b = CoupledMixtureBridge::new(weights, start, end, T::lit(self.beta), T::lit(DEFAULT_CLAMP_FACTOR))?;
        if !self.component_beta.is_empty() {
            check_dim("component_beta", b.n_components(), self.component_beta.len())?;
            for (k, &bk) in self.component_beta.iter().enumerate() {
                let bk = T::lit(bk);
                if bk != b.component_beta[k] {
                    let p = &b.bridges[k];
                    b.bridges[k] = BridgeProblem::new(p.start().clone(), p.end().clone(), bk, BridgeKind::Quantum)
                        .map_err(|e| e.in_component(k))?;
                    b.component_beta[k] = bk;
                }
            }
        }
        Ok(b)
    }
}

/// Paths as CSV rows `sample_id,t,x0,...,x{n-1}`.
pub fn paths_table<T: Scalar>(paths: &[SamplePath<T>], t_grid: &[T]) -> (Vec<String>, Vec<Vec<String>>) {
    let d = paths.first().map_or(0, |p| p.points[0].len());
    let mut header = vec!["sample_id".to_string(), "t".to_string()];
    header.extend((0..d).map(|i| format!("x{i}")));
    let mut rows = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        for (&t, x) in t_grid.iter().zip(&p.points) {
            let mut r = vec![i.to_string(), crate::io::fmt_float(t)];
            r.extend(x.iter().map(|&v| crate::io::fmt_float(v)));
            rows.push(r);
        }
    }
    (header, rows)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_components: usize,
    pub beta: f64,
    pub em_steps_per_phase: usize,
    pub outer_iters: usize,
    pub batch: usize,
    pub clamp_factor: f64,
    pub seed: u64,
    /// Largest parameter change between outer iterations that counts as converged.
    pub tol: f64,
    /// k-means++ restarts of the initial fits.
    pub init_restarts: usize,
    /// Covariance ridge; `None` scales with the data.
    pub ridge: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_components: 8,
            beta: 0.05,
            em_steps_per_phase: 1,
            outer_iters: 30,
            batch: 1000,
            clamp_factor: DEFAULT_CLAMP_FACTOR,
            seed: 42,
            tol: 1e-4,
            init_restarts: 3,
            ridge: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    #[serde(rename = "start")]
    Start,
    #[serde(rename = "end")]
    End,
}

/// EM trace of one training phase.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub outer: usize,
    pub side: Side,
    /// Negative mean log-likelihood of the phase batch after each EM step.
    pub objective: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub phases: Vec<PhaseReport>,
    pub parameter_change: Vec<f64>,
    pub converged: bool,
    pub clamped_components: Vec<usize>,
}

fn draw_batch<T: Scalar>(samples: &[Vec<T>], batch: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    if batch >= samples.len() {
        return samples.to_vec();
    }
    let idx = rand::seq::index::sample(rng, samples.len(), batch);
    idx.into_iter().map(|i| samples[i].clone()).collect()
}

fn max_change<T: Scalar>(a: &GaussianMixture<T>, b: &GaussianMixture<T>) -> f64 {
    let mut m = 0.0f64;
    for (wa, wb) in a.weights().iter().zip(b.weights()) {
        m = m.max((*wa - *wb).abs().as_f64());
    }
    for (ca, cb) in a.components().iter().zip(b.components()) {
        for (x, y) in ca.mean().iter().zip(cb.mean()) {
            m = m.max((*x - *y).abs().as_f64());
        }
        m = m.max((ca.cov().as_matrix() - cb.cov().as_matrix()).max_abs().as_f64());
    }
    m
}

/// Pairs `end` components with `start` components by minimal total squared
/// Bures–Wasserstein cost; returns end reordered to match start.
fn pair_components<T: Scalar>(start: &GaussianMixture<T>, end: &GaussianMixture<T>) -> Result<Vec<usize>> {
    let k = start.n_components();
    let mut costs = Vec::with_capacity(k * k);
    for a in start.components() {
        for b in end.components() {
            let w = w2_gaussian(a, b)?.as_f64();
            costs.push(w * w);
        }
    }
    Ok(min_cost_assignment(&CostMatrix::new(k, k, costs)).0)
}

/// Alternating warm-started EM on the two endpoint sample sets with shared
/// weights. The initial endpoints come from independent fits, paired by
/// minimal Bures–Wasserstein assignment and given the averaged weights.
pub fn train_bridge<T: Scalar>(
    samples0: &[Vec<T>],
    samples1: &[Vec<T>],
    config: &TrainConfig,
) -> Result<(CoupledMixtureBridge<T>, TrainReport)> {
    if samples0.is_empty() || samples1.is_empty() {
        return Err(Error::InvalidArgument("both sample sets must be nonempty".into()));
    }
    check_dim("endpoint sample dimension", samples0[0].len(), samples1[0].len())?;
    let k = config.n_components;
    if k == 0 || config.batch < k {
        return Err(Error::Config(format!(
            "need 1 <= n_components <= batch, got n_components = {k}, batch = {}",
            config.batch
        )));
    }
    if !(config.clamp_factor > 0.0 && config.clamp_factor < 1.0) {
        return Err(Error::Config(format!(
            "clamp_factor must lie in (0, 1), got {}",
            config.clamp_factor
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ridge = config.ridge.map(T::lit);
    let init_cfg = |seed: u64| EmConfig {
        ridge,
        init: EmInit::KMeansPlusPlus {
            restarts: config.init_restarts.max(1),
        },
        seed,
        ..EmConfig::default()
    };
    let (fit0, _) = fit_em(
        &draw_batch(samples0, config.batch, &mut rng),
        k,
        &init_cfg(rng.random()),
    )?;
    let (fit1, _) = fit_em(
        &draw_batch(samples1, config.batch, &mut rng),
        k,
        &init_cfg(rng.random()),
    )?;
    let pairing = pair_components(&fit0, &fit1)?;
    let half = T::lit(0.5);
    let mut alpha: Vec<T> = (0..k)
        .map(|i| half * (fit0.weights()[i] + fit1.weights()[pairing[i]]))
        .collect();
    let s: T = alpha.iter().copied().sum();
    alpha.iter_mut().for_each(|a| *a /= s);
    let mut start = GaussianMixture::new(alpha.clone(), fit0.components().to_vec())?;
    let mut end = GaussianMixture::new(alpha, pairing.iter().map(|&j| fit1.components()[j].clone()).collect())?;

    let mut phases = Vec::new();
    let mut parameter_change = Vec::new();
    let mut converged = false;
    let phase_cfg = |warm: GaussianMixture<T>, seed: u64| EmConfig {
        max_iters: config.em_steps_per_phase,
        tol: T::lit(1e-12),
        ridge,
        init: EmInit::WarmStart(warm),
        seed,
    };
    for outer in 0..config.outer_iters {
        let batch0 = draw_batch(samples0, config.batch, &mut rng);
        let (new_start, r0) = fit_em(&batch0, k, &phase_cfg(start.clone(), rng.random()))?;
        let shared = GaussianMixture::new(new_start.weights().to_vec(), end.components().to_vec())?;
        let batch1 = draw_batch(samples1, config.batch, &mut rng);
        let (new_end, r1) = fit_em(&batch1, k, &phase_cfg(shared, rng.random()))?;
        let new_start = GaussianMixture::new(new_end.weights().to_vec(), new_start.components().to_vec())?;
        for (side, r) in [(Side::Start, r0), (Side::End, r1)] {
            phases.push(PhaseReport {
                outer,
                side,
                objective: r.log_likelihood.iter().map(|l| -l.as_f64()).collect(),
            });
        }
        let change = max_change(&start, &new_start).max(max_change(&end, &new_end));
        debug!("wavepacket outer iteration {outer}: parameter change {change:e}");
        parameter_change.push(change);
        start = new_start;
        end = new_end;
        if change < config.tol {
            converged = true;
            break;
        }
    }
    let bridge = CoupledMixtureBridge::new(
        start.weights().to_vec(),
        start.components().to_vec(),
        end.components().to_vec(),
        T::lit(config.beta),
        T::lit(config.clamp_factor),
    )?;
    let clamped_components = bridge
        .component_beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != bridge.beta)
        .map(|(k, _)| k)
        .collect();
    Ok((
        bridge,
        TrainReport {
            phases,
            parameter_change,
            converged,
            clamped_components,
        },
    ))
}
