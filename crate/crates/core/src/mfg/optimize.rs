//! Adaptive-moment descent on the discrete Lagrangian `K − U + λ·penalty`.

use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{Point, Scenario};
use super::lagrangian::{
    init_trajectory, kinetic_energy, kinetic_energy_grad, obstacle_penalty_grad, potential_energy,
    potential_energy_grad, propagate_population, standardized_noise, TrajectoryGrad, TrajectoryParams,
};
use super::rrt::{rrt_star, RrtConfig, RrtResult};
use crate::error::{Error, Result};
use crate::gaussian::standard_normal_vec;
use crate::scalar::Scalar;
use crate::wavepacket::{check_noise, NoiseConvention};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MfgConfig {
    pub beta: f64,
    pub lambda_obs: f64,
    pub lr: f64,
    pub iters: usize,
    pub batch: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Keep the endpoint variances at the scenario values.
    pub pin_endpoint_variances: bool,
    /// Samples used to score the initial and final trajectories.
    pub eval_batch: usize,
    pub rrt: RrtConfig,
}

impl Default for MfgConfig {
    fn default() -> Self {
        Self {
            beta: 0.05,
            lambda_obs: 5000.0,
            lr: 1e-3,
            iters: 2000,
            batch: 1000,
            steps: 100,
            seed: 42,
            weight_decay: 0.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            pin_endpoint_variances: false,
            eval_batch: 1000,
            rrt: RrtConfig {
                clearance: 0.5,
                ..RrtConfig::default()
            },
        }
    }
}

/// Obstacle weight that keeps collisions under 1% at desk scale.
pub const DESK_LAMBDA_OBS: f64 = 1e9;

impl MfgConfig {
    /// Desk-scale run: T = 50, batch 300, 2000 iterations, tuned obstacle weight.
    pub fn desk_scale() -> Self {
        Self {
            lambda_obs: DESK_LAMBDA_OBS,
            batch: 300,
            steps: 50,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2.0 * self.beta <= 1.0 && self.beta >= 0.0) {
            return Err(Error::NoiseTooLarge { beta: self.beta });
        }
        if !(self.lambda_obs >= 0.0) {
            return Err(Error::Config("lambda_obs must be nonnegative".into()));
        }
        if !(self.lr > 0.0) || self.steps == 0 || self.batch == 0 {
            return Err(Error::Config("lr, T and batch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossRecord {
    pub iter: usize,
    pub kinetic: f64,
    pub potential: f64,
    pub penalty: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct MfgResult<T> {
    pub rrt: RrtResult<T>,
    pub init: TrajectoryParams<T>,
    pub params: TrajectoryParams<T>,
    /// Training loss before each update, on that iteration's noise.
    pub history: Vec<LossRecord>,
    /// Initial and final trajectories scored on one shared noise batch.
    pub initial_eval: LossRecord,
    pub final_eval: LossRecord,
    /// The optimized trajectory scored worse than the start and was discarded.
    pub reverted: bool,
}

/// Decorrelates per-purpose seeds (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_RRT: u64 = 1;
const TAG_EVAL: u64 = 2;
const TAG_ITER: u64 = 1 << 32;

/// `K − U + λ·penalty` with the penalty on the given standardized noise.
pub fn total_loss<T: Scalar>(
    scenario: &Scenario<T>,
    p: &TrajectoryParams<T>,
    beta: T,
    lambda: T,
    z: &[Vec<Point<T>>],
    iter: usize,
) -> (LossRecord, TrajectoryGrad<T>) {
    let dt = p.dt();
    let k = kinetic_energy(p, dt);
    let u = potential_energy(p, beta);
    let (pen, mut grad) = obstacle_penalty_grad(&scenario.env, p, z);
    grad.mu.iter_mut().chain(grad.log_var.iter_mut()).for_each(|g| {
        g[0] *= lambda;
        g[1] *= lambda;
    });
    grad.axpy(T::one(), &kinetic_energy_grad(p, dt));
    grad.axpy(-T::one(), &potential_energy_grad(p, beta));
    let total = k - u + lambda * pen;
    (
        LossRecord {
            iter,
            kinetic: k.as_f64(),
            potential: u.as_f64(),
            penalty: pen.as_f64(),
            total: total.as_f64(),
        },
        grad,
    )
}

struct AdamW<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> AdamW<T> {
    fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    fn step(&mut self, theta: &mut [&mut T], grad: &[T], cfg: &MfgConfig) {
        self.t += 1;
        let (b1, b2) = (T::lit(cfg.adam_beta1), T::lit(cfg.adam_beta2));
        let lr = T::lit(cfg.lr);
        let wd = T::lit(cfg.weight_decay);
        let eps = T::lit(cfg.adam_eps);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        for (i, th) in theta.iter_mut().enumerate() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            **th = **th - lr * wd * **th - lr * mh / (vh.sqrt() + eps);
        }
    }
}

/// Free coordinates: interior means and every log-variance (interior only
/// when the endpoint variances are pinned).
fn free_slots<T>(p: &mut TrajectoryParams<T>, pin: bool) -> Vec<&mut T> {
    let n = p.mu.len();
    let mut out = Vec::new();
    for m in p.mu[1..n - 1].iter_mut() {
        out.extend(m.iter_mut());
    }
    let range = if pin {
        &mut p.log_var[1..n - 1]
    } else {
        &mut p.log_var[..]
    };
    for l in range.iter_mut() {
        out.extend(l.iter_mut());
    }
    out
}

fn free_grad<T: Scalar>(g: &TrajectoryGrad<T>, pin: bool) -> Vec<T> {
    let n = g.mu.len();
    let mut out = Vec::new();
    for m in &g.mu[1..n - 1] {
        out.extend_from_slice(m);
    }
    let range = if pin { &g.log_var[1..n - 1] } else { &g.log_var[..] };
    for l in range {
        out.extend_from_slice(l);
    }
    out
}

/// RRT* warm start, arc-length initialization, then `iters` AdamW steps with
/// fresh frozen noise every iteration. Endpoint means never move.
pub fn optimize<T: Scalar>(scenario: &Scenario<T>, cfg: &MfgConfig) -> Result<MfgResult<T>> {
    cfg.validate()?;
    let rrt = rrt_star(
        &scenario.env,
        scenario.start.mean,
        scenario.goal.mean,
        &cfg.rrt,
        derive_seed(cfg.seed, TAG_RRT),
    )?;
    let mut path = rrt.path.clone();
    if path.len() == 1 {
        path.push(path[0]);
    }
    let mut init = init_trajectory(&path, cfg.steps, scenario.start.var)?;
    if cfg.pin_endpoint_variances {
        init.log_var[cfg.steps] = [scenario.goal.var[0].ln(), scenario.goal.var[1].ln()];
    }
    optimize_from(scenario, cfg, rrt, init)
}

/// The descent loop from a given initialization.
pub fn optimize_from<T: Scalar>(
    scenario: &Scenario<T>,
    cfg: &MfgConfig,
    rrt: RrtResult<T>,
    init: TrajectoryParams<T>,
) -> Result<MfgResult<T>> {
    cfg.validate()?;
    let beta = T::lit(cfg.beta);
    let lambda = T::lit(cfg.lambda_obs);
    let steps = init.steps();
    let mut params = init.clone();
    let n_free = free_grad(&TrajectoryGrad::<T>::zeros(steps + 1), cfg.pin_endpoint_variances).len();
    let mut adam = AdamW::new(n_free);
    let mut history = Vec::with_capacity(cfg.iters);
    for it in 0..cfg.iters {
        let z = standardized_noise(steps, cfg.batch, beta, derive_seed(cfg.seed, TAG_ITER + it as u64))?;
        let (rec, grad) = total_loss(scenario, &params, beta, lambda, &z, it);
        if !rec.total.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                loss: rec.total,
            });
        }
        if it % 200 == 0 {
            debug!(
                "mfg iter {it}: K {:.4e} U {:.4e} penalty {:.4e} total {:.4e}",
                rec.kinetic, rec.potential, rec.penalty, rec.total
            );
        }
        history.push(rec);
        let g = free_grad(&grad, cfg.pin_endpoint_variances);
        adam.step(&mut free_slots(&mut params, cfg.pin_endpoint_variances), &g, cfg);
    }
    let z_eval = standardized_noise(steps, cfg.eval_batch.max(1), beta, derive_seed(cfg.seed, TAG_EVAL))?;
    let (initial_eval, _) = total_loss(scenario, &init, beta, lambda, &z_eval, 0);
    let (final_eval, _) = total_loss(scenario, &params, beta, lambda, &z_eval, cfg.iters);
    if !final_eval.total.is_finite() {
        return Err(Error::Diverged {
            iteration: cfg.iters,
            loss: final_eval.total,
        });
    }
    let reverted = final_eval.total > initial_eval.total;
    if reverted {
        warn!(
            "optimized loss {} exceeds initial {}; returning the initialization",
            final_eval.total, initial_eval.total
        );
        params = init.clone();
    }
    info!("mfg loss {:.6e} -> {:.6e}", initial_eval.total, final_eval.total);
    Ok(MfgResult {
        rrt,
        init,
        params,
        history,
        initial_eval,
        final_eval: if reverted { initial_eval } else { final_eval },
        reverted,
    })
}

/// Draws `n` start samples from `N(μ₀, Σ₀)` and propagates them.
pub fn sample_paths<T: Scalar>(
    p: &TrajectoryParams<T>,
    n: usize,
    beta: T,
    seed: u64,
    noise: NoiseConvention,
) -> Result<Vec<Vec<Point<T>>>> {
    check_noise(beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = p.sd(0);
    let x0: Vec<Point<T>> = (0..n)
        .map(|_| {
            let z: Vec<T> = standard_normal_vec(2, &mut rng);
            [p.mu[0][0] + sd[0] * z[0], p.mu[0][1] + sd[1] * z[1]]
        })
        .collect();
    propagate_population(p, &x0, beta, derive_seed(seed, 1), noise)
}

/// Rows `i,t,mu_x,mu_y,var_x,var_y`.
pub fn trajectory_table<T: Scalar>(p: &TrajectoryParams<T>) -> (Vec<String>, Vec<Vec<String>>) {
    use crate::io::fmt_float;
    let header = ["i", "t", "mu_x", "mu_y", "var_x", "var_y"].map(String::from).to_vec();
    let rows = (0..=p.steps())
        .map(|i| {
            let v = p.var(i);
            let t = T::from_usize(i).unwrap() * p.dt();
            vec![
                i.to_string(),
                fmt_float(t),
                fmt_float(p.mu[i][0]),
                fmt_float(p.mu[i][1]),
                fmt_float(v[0]),
                fmt_float(v[1]),
            ]
        })
        .collect();
    (header, rows)
}

/// Rows `iter,kinetic,potential,penalty,total`.
pub fn loss_table(history: &[LossRecord]) -> (Vec<String>, Vec<Vec<String>>) {
    use crate::io::fmt_float;
    let header = ["iter", "kinetic", "potential", "penalty", "total"]
        .map(String::from)
        .to_vec();
    let rows = history
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                fmt_float(r.kinetic),
                fmt_float(r.potential),
                fmt_float(r.penalty),
                fmt_float(r.total),
            ]
        })
        .collect();
    (header, rows)
}
