//! Discrete Lagrangian of a diagonal Gaussian population on a uniform grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::env::{Environment, Point};
use crate::error::{Error, Result};
use crate::gaussian::standard_normal_vec;
use crate::scalar::Scalar;
use crate::wavepacket::{check_noise, NoiseConvention};

/// Mean and log per-axis variance at the grid points `tᵢ = i / T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryParams<T> {
    pub mu: Vec<Point<T>>,
    pub log_var: Vec<Point<T>>,
}

impl<T: Scalar> TrajectoryParams<T> {
    pub fn new(mu: Vec<Point<T>>, log_var: Vec<Point<T>>) -> Result<Self> {
        if mu.len() < 2 || mu.len() != log_var.len() {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs matching mean and variance lists of length >= 2, got {} and {}",
                mu.len(),
                log_var.len()
            )));
        }
        Ok(Self { mu, log_var })
    }

    /// Number of steps `T`.
    pub fn steps(&self) -> usize {
        self.mu.len() - 1
    }

    pub fn dt(&self) -> T {
        T::one() / T::from_usize(self.steps()).unwrap()
    }

    pub fn var(&self, i: usize) -> Point<T> {
        [self.log_var[i][0].exp(), self.log_var[i][1].exp()]
    }

    pub fn sd(&self, i: usize) -> Point<T> {
        let h = T::lit(0.5);
        [(h * self.log_var[i][0]).exp(), (h * self.log_var[i][1]).exp()]
    }
}

/// Uniform arc-length resampling of `path` into `T + 1` means, with constant
/// variance `var0`.
pub fn init_trajectory<T: Scalar>(path: &[Point<T>], steps: usize, var0: Point<T>) -> Result<TrajectoryParams<T>> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("trajectory needs at least one step".into()));
    }
    let mut cum = vec![T::zero()];
    for w in path.windows(2) {
        let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        cum.push(*cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let mut mu = Vec::with_capacity(steps + 1);
    let mut seg = 0usize;
    for i in 0..=steps {
        if i == 0 {
            mu.push(path[0]);
            continue;
        }
        if i == steps {
            mu.push(*path.last().unwrap());
            continue;
        }
        let s = total * T::from_usize(i).unwrap() / T::from_usize(steps).unwrap();
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let f = if len > T::zero() {
            (s - cum[seg]) / len
        } else {
            T::zero()
        };
        let (a, b) = (path[seg], path[seg + 1]);
        mu.push([a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]);
    }
    if path.len() == 1 {
        mu.iter_mut().for_each(|m| *m = path[0]);
    }
    let lv = [var0[0].ln(), var0[1].ln()];
    TrajectoryParams::new(mu, vec![lv; steps + 1])
}

/// Forward differences `μ̇ᵢ = (μᵢ₊₁ − μᵢ)/dt` and `Σ̇ᵢ` likewise, `i < T`.
pub fn trajectory_derivatives<T: Scalar>(p: &TrajectoryParams<T>, dt: T) -> (Vec<Point<T>>, Vec<Point<T>>) {
    let n = p.steps();
    let mut md = Vec::with_capacity(n);
    let mut vd = Vec::with_capacity(n);
    for i in 0..n {
        let (v0, v1) = (p.var(i), p.var(i + 1));
        md.push([(p.mu[i + 1][0] - p.mu[i][0]) / dt, (p.mu[i + 1][1] - p.mu[i][1]) / dt]);
        vd.push([(v1[0] - v0[0]) / dt, (v1[1] - v0[1]) / dt]);
    }
    (md, vd)
}

/// Gradient with respect to every mean and log-variance entry.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryGrad<T> {
    pub mu: Vec<Point<T>>,
    pub log_var: Vec<Point<T>>,
}

impl<T: Scalar> TrajectoryGrad<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            mu: vec![[T::zero(); 2]; n],
            log_var: vec![[T::zero(); 2]; n],
        }
    }

    pub fn axpy(&mut self, a: T, other: &Self) {
        for (x, y) in self
            .mu
            .iter_mut()
            .zip(&other.mu)
            .chain(self.log_var.iter_mut().zip(&other.log_var))
        {
            x[0] += a * y[0];
            x[1] += a * y[1];
        }
    }
}

/// `K = Σ_{i<T} ‖μ̇ᵢ‖² + ¼ Σₐ Σ̇ᵢₐ² / Σᵢₐ`.
pub fn kinetic_energy<T: Scalar>(p: &TrajectoryParams<T>, dt: T) -> T {
    let (md, vd) = trajectory_derivatives(p, dt);
    let q = T::lit(0.25);
    (0..p.steps())
        .map(|i| {
            let v = p.var(i);
            md[i][0] * md[i][0] + md[i][1] * md[i][1] + q * (vd[i][0] * vd[i][0] / v[0] + vd[i][1] * vd[i][1] / v[1])
        })
        .sum()
}

pub fn kinetic_energy_grad<T: Scalar>(p: &TrajectoryParams<T>, dt: T) -> TrajectoryGrad<T> {
    let n = p.steps();
    let mut g = TrajectoryGrad::zeros(n + 1);
    let two = T::lit(2.0);
    let dt2 = dt * dt;
    for i in 0..n {
        let (v0, v1) = (p.var(i), p.var(i + 1));
        for a in 0..2 {
            let dm = p.mu[i + 1][a] - p.mu[i][a];
            g.mu[i + 1][a] += two * dm / dt2;
            g.mu[i][a] -= two * dm / dt2;
            let dv = v1[a] - v0[a];
            // term = ¼ dv² / (dt² v0); chain through v = e^ℓ
            let d_v1 = T::lit(0.5) * dv / (dt2 * v0[a]);
            let d_v0 = -d_v1 - T::lit(0.25) * dv * dv / (dt2 * v0[a] * v0[a]);
            g.log_var[i + 1][a] += d_v1 * v1[a];
            g.log_var[i][a] += d_v0 * v0[a];
        }
    }
    g
}

/// `U = β² Σ_{i≤T} Tr Σᵢ⁻¹`.
pub fn potential_energy<T: Scalar>(p: &TrajectoryParams<T>, beta: T) -> T {
    let b2 = beta * beta;
    b2 * p.log_var.iter().map(|l| (-l[0]).exp() + (-l[1]).exp()).sum::<T>()
}

pub fn potential_energy_grad<T: Scalar>(p: &TrajectoryParams<T>, beta: T) -> TrajectoryGrad<T> {
    let b2 = beta * beta;
    let mut g = TrajectoryGrad::zeros(p.mu.len());
    for (o, l) in g.log_var.iter_mut().zip(&p.log_var) {
        *o = [-b2 * (-l[0]).exp(), -b2 * (-l[1]).exp()];
    }
    g
}

/// `s(p) = max(0, 1 − minₒ dₒ(p))²` and its gradient in `p`.
pub fn point_penalty<T: Scalar>(env: &Environment<T>, p: Point<T>) -> (T, Point<T>) {
    let mut best: Option<(T, usize)> = None;
    for (k, o) in env.obstacles.iter().enumerate() {
        let d = o.functional(p);
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, k));
        }
    }
    match best {
        Some((d, k)) if d < T::one() => {
            let h = T::one() - d;
            let g = env.obstacles[k].gradient(p);
            let c = -T::lit(2.0) * h;
            (h * h, [c * g[0], c * g[1]])
        }
        _ => (T::zero(), [T::zero(); 2]),
    }
}

/// Mean of `s` over every (grid point, sample) pair. `paths[s][i]` is sample
/// `s` at grid point `i`.
pub fn obstacle_penalty<T: Scalar>(env: &Environment<T>, paths: &[Vec<Point<T>>]) -> T {
    let mut total = T::zero();
    let mut count = 0usize;
    for path in paths {
        for &p in path {
            total += point_penalty(env, p).0;
            count += 1;
        }
    }
    if count == 0 {
        T::zero()
    } else {
        total / T::from_usize(count).unwrap()
    }
}

/// Fraction of (grid point, sample) pairs inside an obstacle.
pub fn collision_fraction<T: Scalar>(env: &Environment<T>, paths: &[Vec<Point<T>>]) -> f64 {
    let total: usize = paths.iter().map(|p| p.len()).sum();
    if total == 0 {
        return 0.0;
    }
    let hits: usize = paths
        .iter()
        .map(|p| p.iter().filter(|&&x| env.in_obstacle(x)).count())
        .sum();
    hits as f64 / total as f64
}

/// Population update along the grid, one ChaCha stream per sample.
pub fn propagate_population<T: Scalar>(
    p: &TrajectoryParams<T>,
    x0: &[Point<T>],
    beta: T,
    seed: u64,
    noise: NoiseConvention,
) -> Result<Vec<Vec<Point<T>>>> {
    check_noise(beta)?;
    let two_beta = T::lit(2.0) * beta;
    let keep = (T::one() - two_beta).sqrt();
    let kick = two_beta.sqrt();
    let sds: Vec<Point<T>> = (0..=p.steps()).map(|i| p.sd(i)).collect();
    Ok(x0
        .iter()
        .enumerate()
        .map(|(s, &x)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mut path = Vec::with_capacity(p.steps() + 1);
            path.push(x);
            for i in 0..p.steps() {
                let xi: Vec<T> = standard_normal_vec(2, &mut rng);
                let cur = *path.last().unwrap();
                let mut next = [T::zero(); 2];
                for a in 0..2 {
                    let shaped = match noise {
                        NoiseConvention::Covariance => sds[i + 1][a] * xi[a],
                        NoiseConvention::Isotropic => xi[a],
                    };
                    next[a] = p.mu[i + 1][a] + keep * sds[i + 1][a] / sds[i][a] * (cur[a] - p.mu[i][a]) + kick * shaped;
                }
                path.push(next);
            }
            path
        })
        .collect())
}

/// Standardized noise paths `zᵢ` with `z₀ ~ N(0, I)` and
/// `zᵢ₊₁ = √(1−2β) zᵢ + √(2β) ξᵢ`. Under the covariance noise convention the
/// population is exactly `xᵢ = μᵢ + σᵢ zᵢ`, which makes the sample positions
/// differentiable in the parameters with the noise held fixed.
pub fn standardized_noise<T: Scalar>(steps: usize, n: usize, beta: T, seed: u64) -> Result<Vec<Vec<Point<T>>>> {
    check_noise(beta)?;
    let two_beta = T::lit(2.0) * beta;
    let keep = (T::one() - two_beta).sqrt();
    let kick = two_beta.sqrt();
    Ok((0..n)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let z0: Vec<T> = standard_normal_vec(2, &mut rng);
            let mut z = vec![[z0[0], z0[1]]];
            for _ in 0..steps {
                let xi: Vec<T> = standard_normal_vec(2, &mut rng);
                let c = *z.last().unwrap();
                z.push([keep * c[0] + kick * xi[0], keep * c[1] + kick * xi[1]]);
            }
            z
        })
        .collect())
}

pub fn positions_from_noise<T: Scalar>(p: &TrajectoryParams<T>, z: &[Vec<Point<T>>]) -> Vec<Vec<Point<T>>> {
    let sds: Vec<Point<T>> = (0..=p.steps()).map(|i| p.sd(i)).collect();
    z.iter()
        .map(|zs| {
            zs.iter()
                .enumerate()
                .map(|(i, zi)| [p.mu[i][0] + sds[i][0] * zi[0], p.mu[i][1] + sds[i][1] * zi[1]])
                .collect()
        })
        .collect()
}

/// Penalty and its pathwise gradient: `∂xᵢ/∂μᵢ = 1`, `∂xᵢ/∂ℓᵢ = ½ σᵢ zᵢ`.
pub fn obstacle_penalty_grad<T: Scalar>(
    env: &Environment<T>,
    p: &TrajectoryParams<T>,
    z: &[Vec<Point<T>>],
) -> (T, TrajectoryGrad<T>) {
    let n = p.mu.len();
    let mut g = TrajectoryGrad::zeros(n);
    let sds: Vec<Point<T>> = (0..n).map(|i| p.sd(i)).collect();
    let mut total = T::zero();
    let count = T::from_usize(n * z.len()).unwrap();
    let half = T::lit(0.5);
    for zs in z {
        for (i, zi) in zs.iter().enumerate() {
            let x = [p.mu[i][0] + sds[i][0] * zi[0], p.mu[i][1] + sds[i][1] * zi[1]];
            let (s, ds) = point_penalty(env, x);
            if s == T::zero() {
                continue;
            }
            total += s;
            for a in 0..2 {
                g.mu[i][a] += ds[a] / count;
                g.log_var[i][a] += ds[a] * half * sds[i][a] * zi[a] / count;
            }
        }
    }
    (total / count, g)
}

#[cfg(test)]
mod tests {
    use super::super::env::{s_tunnel, Bounds, Ellipse};
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_params(rng: &mut ChaCha8Rng, steps: usize) -> TrajectoryParams<f64> {
        TrajectoryParams::new(
            (0..=steps)
                .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect(),
            (0..=steps)
                .map(|_| [rng.random_range(-1.5..1.0), rng.random_range(-1.5..1.0)])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn init_trajectory_examples() {
        let p = init_trajectory::<f64>(&[[0.0, 0.0], [10.0, 0.0]], 10, [0.5, 0.5]).unwrap();
        for (i, m) in p.mu.iter().enumerate() {
            assert!((m[0] - i as f64).abs() < 1e-12 && m[1] == 0.0);
        }
        assert_eq!(p.log_var[3], [0.5f64.ln(), 0.5f64.ln()]);
        let p = init_trajectory(&[[0.0, 0.0], [3.0, 4.0], [3.0, 9.0]], 1, [1.0, 1.0]).unwrap();
        assert_eq!(p.mu, vec![[0.0, 0.0], [3.0, 9.0]]);
        let path: [[f64; 2]; 5] = [[0.0, 0.0], [1.0, 2.0], [4.0, 2.0], [4.0, -3.0], [0.5, -3.5]];
        let p = init_trajectory(&path, 17, [1.0, 1.0]).unwrap();
        // gaps are equal along the polyline; chords differ only at corners
        let total: f64 = path
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum();
        let gap = total / 17.0;
        let mut arc = 0.0;
        let mut cum = vec![0.0];
        for w in path.windows(2) {
            arc += ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            cum.push(arc);
        }
        for (i, m) in p.mu.iter().enumerate() {
            // locate the arc position of mu[i] on its segment
            let pos = path
                .windows(2)
                .enumerate()
                .find_map(|(k, w)| {
                    let len = cum[k + 1] - cum[k];
                    let f =
                        ((m[0] - w[0][0]) * (w[1][0] - w[0][0]) + (m[1] - w[0][1]) * (w[1][1] - w[0][1])) / (len * len);
                    let q = [w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1])];
                    let off = ((q[0] - m[0]).powi(2) + (q[1] - m[1]).powi(2)).sqrt();
                    ((-1e-12..=1.0 + 1e-12).contains(&f) && off < 1e-9).then_some(cum[k] + f * len)
                })
                .unwrap();
            assert!((pos - gap * i as f64).abs() < 1e-9);
        }
        let same = init_trajectory(&[[2.0, 2.0], [2.0, 2.0]], 4, [1.0, 1.0]).unwrap();
        assert!(same.mu.iter().all(|m| *m == [2.0, 2.0]));
    }

    #[test]
    fn derivatives_examples() {
        let c = TrajectoryParams::<f64>::new(vec![[1.0, 2.0]; 6], vec![[0.3, -0.2]; 6]).unwrap();
        let (md, vd) = trajectory_derivatives(&c, 0.2);
        assert!(md.iter().chain(&vd).all(|v| *v == [0.0, 0.0]));
        assert_eq!(kinetic_energy(&c, 0.2), 0.0);
        let lin = init_trajectory::<f64>(&[[0.0, 0.0], [4.0, -2.0]], 8, [1.0, 1.0]).unwrap();
        let (md, _) = trajectory_derivatives(&lin, lin.dt());
        for m in &md {
            assert!((m[0] - 4.0).abs() < 1e-12 && (m[1] + 2.0).abs() < 1e-12);
        }
        assert!((kinetic_energy(&lin, lin.dt()) - 8.0 * 20.0).abs() < 1e-9);
    }

    #[test]
    fn kinetic_variance_path_summation() {
        // σ(t) = 1 + t on both axes, T = 100
        let steps = 100;
        let dt = 0.01;
        let p = TrajectoryParams::new(
            vec![[0.0, 0.0]; steps + 1],
            (0..=steps)
                .map(|i| {
                    let v: f64 = 1.0 + i as f64 * dt;
                    [v.ln(), v.ln()]
                })
                .collect(),
        )
        .unwrap();
        let mut expect = 0.0;
        for i in 0..steps {
            let v0 = 1.0 + i as f64 * dt;
            let v1 = 1.0 + (i + 1) as f64 * dt;
            expect += 2.0 * 0.25 * ((v1 - v0) / dt).powi(2) / v0;
        }
        assert!((kinetic_energy(&p, dt) - expect).abs() < 1e-10);
    }

    #[test]
    fn potential_examples() {
        let steps = 7;
        let p = TrajectoryParams::<f64>::new(vec![[0.0, 0.0]; steps + 1], vec![[0.0, 0.0]; steps + 1]).unwrap();
        assert!((potential_energy(&p, 0.3) - 0.09 * 2.0 * 8.0).abs() < 1e-14);
        assert_eq!(potential_energy(&p, 0.0), 0.0);
        let doubled = TrajectoryParams::new(p.mu.clone(), vec![[2f64.ln(), 2f64.ln()]; steps + 1]).unwrap();
        assert!((potential_energy(&doubled, 0.3) - 0.5 * potential_energy(&p, 0.3)).abs() < 1e-14);
    }

    fn check_grad(
        f: &dyn Fn(&TrajectoryParams<f64>) -> f64,
        g: &TrajectoryGrad<f64>,
        p: &TrajectoryParams<f64>,
        tol: f64,
    ) {
        let h = 1e-6;
        for i in 0..p.mu.len() {
            for a in 0..2 {
                for which in 0..2 {
                    let mut plus = p.clone();
                    let mut minus = p.clone();
                    let (analytic, x) = if which == 0 {
                        (g.mu[i][a], p.mu[i][a])
                    } else {
                        (g.log_var[i][a], p.log_var[i][a])
                    };
                    let step = h * (1.0 + x.abs());
                    if which == 0 {
                        plus.mu[i][a] += step;
                        minus.mu[i][a] -= step;
                    } else {
                        plus.log_var[i][a] += step;
                        minus.log_var[i][a] -= step;
                    }
                    let fd = (f(&plus) - f(&minus)) / (2.0 * step);
                    let scale = analytic.abs().max(fd.abs()).max(1.0);
                    assert!(
                        (analytic - fd).abs() / scale < tol,
                        "entry {i},{a},{which}: {analytic} vs {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn energy_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let p = random_params(&mut rng, 12);
            let dt = p.dt();
            check_grad(&|q| kinetic_energy(q, dt), &kinetic_energy_grad(&p, dt), &p, 1e-5);
            check_grad(&|q| potential_energy(q, 0.4), &potential_energy_grad(&p, 0.4), &p, 1e-5);
        }
    }

    #[test]
    fn penalty_examples_and_gradient() {
        let s = s_tunnel::<f64>();
        assert_eq!(obstacle_penalty(&s.env, &[vec![[10.0, 0.0], [1.0, 9.0]]]), 0.0);
        assert_eq!(point_penalty(&s.env, [6.0, -4.5]).0, 1.0);
        assert_eq!(point_penalty(&s.env, [8.0, -4.5]).0, 0.0);
        assert_eq!(obstacle_penalty(&s.env, &[vec![[6.0, -4.5], [10.0, 0.0]]]), 0.5);
        let env = Environment::new(
            Bounds::new([-10.0, -10.0], [10.0, 10.0]).unwrap(),
            vec![Ellipse::new([0.5, 0.0], [2.0, 1.0]).unwrap()],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = random_params(&mut rng, 6);
        p.mu.iter_mut().for_each(|m| *m = [m[0] * 0.2, m[1] * 0.2]);
        let z = standardized_noise(6, 50, 0.1, 3).unwrap();
        let (val, g) = obstacle_penalty_grad(&env, &p, &z);
        assert!((val - obstacle_penalty(&env, &positions_from_noise(&p, &z))).abs() < 1e-14);
        assert!(val > 0.0);
        check_grad(&|q| obstacle_penalty_grad(&env, q, &z).0, &g, &p, 1e-4);
    }

    #[test]
    fn population_is_affine_in_standardized_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(&mut rng, 5);
        let beta = 0.2;
        let x0 = vec![[0.1, -0.7], [2.0, 1.0]];
        let direct = propagate_population(&p, &x0, beta, 9, NoiseConvention::Covariance).unwrap();
        let (keep, kick) = ((1.0f64 - 2.0 * beta).sqrt(), (2.0f64 * beta).sqrt());
        for (s, path) in direct.iter().enumerate() {
            let mut stream = ChaCha8Rng::seed_from_u64(9);
            stream.set_stream(s as u64);
            for i in 0..5 {
                let xi: Vec<f64> = standard_normal_vec(2, &mut stream);
                for a in 0..2 {
                    let z0 = (path[i][a] - p.mu[i][a]) / p.sd(i)[a];
                    let z1 = (path[i + 1][a] - p.mu[i + 1][a]) / p.sd(i + 1)[a];
                    assert!((z1 - keep * z0 - kick * xi[a]).abs() < 1e-10);
                }
            }
        }
        assert!(propagate_population(&p, &x0, 0.6, 9, NoiseConvention::Covariance).is_err());
    }

    #[test]
    fn zero_beta_constant_population_is_identity() {
        let p = TrajectoryParams::<f64>::new(vec![[1.0, 1.0]; 4], vec![[0.2, -0.3]; 4]).unwrap();
        let x0: Vec<[f64; 2]> = vec![[0.3, 2.0], [1.5, -1.0]];
        let paths = propagate_population(&p, &x0, 0.0, 1, NoiseConvention::Covariance).unwrap();
        for (path, x) in paths.iter().zip(&x0) {
            for q in path {
                assert!((q[0] - x[0]).abs() < 1e-15 && (q[1] - x[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn population_moments_follow_params() {
        let steps = 20;
        let p = TrajectoryParams::new(
            (0..=steps).map(|i| [i as f64 * 0.5, (i as f64 * 0.3).sin()]).collect(),
            (0..=steps)
                .map(|i| [(0.5 + 0.1 * i as f64).ln(), (2.0 - 0.05 * i as f64).ln()])
                .collect(),
        )
        .unwrap();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sd0 = p.sd(0);
        let x0: Vec<Point<f64>> = (0..n)
            .map(|_| {
                let z: Vec<f64> = standard_normal_vec(2, &mut rng);
                [p.mu[0][0] + sd0[0] * z[0], p.mu[0][1] + sd0[1] * z[1]]
            })
            .collect();
        let paths = propagate_population(&p, &x0, 0.05, 2, NoiseConvention::Covariance).unwrap();
        for i in 0..=steps {
            let v = p.var(i);
            for a in 0..2 {
                let m = paths.iter().map(|q| q[i][a]).sum::<f64>() / n as f64;
                let var = paths.iter().map(|q| (q[i][a] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                assert!((m - p.mu[i][a]).abs() < 4.0 * (v[a] / n as f64).sqrt());
                assert!((var / v[a] - 1.0).abs() < 0.03);
            }
        }
    }
}
