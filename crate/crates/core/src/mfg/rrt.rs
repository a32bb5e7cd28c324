//! RRT* on the plane with fixed rewiring radius.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{Environment, Point};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RrtConfig {
    pub step: f64,
    pub radius: f64,
    pub goal_bias: f64,
    pub max_nodes: usize,
    /// Obstacles are grown by this margin while planning.
    pub clearance: f64,
    /// Greedy shortcutting of the returned polyline.
    pub shortcut: bool,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            step: 0.5,
            radius: 2.0,
            goal_bias: 0.05,
            max_nodes: 5000,
            clearance: 0.0,
            shortcut: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RrtResult<T> {
    pub path: Vec<Point<T>>,
    /// Parent index of every tree node (the root points at itself).
    pub tree: Vec<(Point<T>, usize)>,
}

fn dist<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
}

pub fn path_length<T: Scalar>(path: &[Point<T>]) -> T {
    path.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// Grows a tree of `max_nodes` nodes and returns the cheapest start-to-goal
/// polyline found. Segments are checked at a quarter of the step.
pub fn rrt_star<T: Scalar>(
    env: &Environment<T>,
    start: Point<T>,
    goal: Point<T>,
    cfg: &RrtConfig,
    seed: u64,
) -> Result<RrtResult<T>> {
    if !(cfg.step > 0.0 && cfg.radius > 0.0 && (0.0..=1.0).contains(&cfg.goal_bias) && cfg.clearance >= 0.0) {
        return Err(Error::Config(format!("invalid RRT* parameters {cfg:?}")));
    }
    let plan_env = env.inflated(T::lit(cfg.clearance));
    for (name, p) in [("start", start), ("goal", goal)] {
        if plan_env.collision(p) {
            return Err(Error::InvalidArgument(format!(
                "RRT* {name} ({}, {}) is in collision",
                p[0], p[1]
            )));
        }
    }
    if start == goal {
        return Ok(RrtResult {
            path: vec![start],
            tree: vec![(start, 0)],
        });
    }
    let step = T::lit(cfg.step);
    let radius = T::lit(cfg.radius);
    let res = step / T::lit(4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<Point<T>> = vec![start];
    let mut parent: Vec<usize> = vec![0];
    let mut cost: Vec<T> = vec![T::zero()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut best_goal: Option<(usize, T)> = None;
    let b = plan_env.bounds;
    let max_nodes = cfg.max_nodes.max(2);
    let mut attempts = 0usize;
    while nodes.len() < max_nodes && attempts < 50 * max_nodes {
        attempts += 1;
        let target = if rng.random::<f64>() < cfg.goal_bias {
            goal
        } else {
            [
                b.min[0] + T::lit(rng.random::<f64>()) * (b.max[0] - b.min[0]),
                b.min[1] + T::lit(rng.random::<f64>()) * (b.max[1] - b.min[1]),
            ]
        };
        let nearest = (0..nodes.len())
            .min_by(|&i, &j| dist(nodes[i], target).partial_cmp(&dist(nodes[j], target)).unwrap())
            .unwrap();
        let d = dist(nodes[nearest], target);
        if d == T::zero() {
            continue;
        }
        let new = if d <= step {
            target
        } else {
            let s = step / d;
            [
                nodes[nearest][0] + s * (target[0] - nodes[nearest][0]),
                nodes[nearest][1] + s * (target[1] - nodes[nearest][1]),
            ]
        };
        if !plan_env.segment_free(nodes[nearest], new, res) {
            continue;
        }
        let near: Vec<usize> = (0..nodes.len()).filter(|&i| dist(nodes[i], new) <= radius).collect();
        let mut best_parent = nearest;
        let mut best_cost = cost[nearest] + dist(nodes[nearest], new);
        for &i in &near {
            let c = cost[i] + dist(nodes[i], new);
            if c < best_cost && plan_env.segment_free(nodes[i], new, res) {
                best_parent = i;
                best_cost = c;
            }
        }
        let id = nodes.len();
        nodes.push(new);
        parent.push(best_parent);
        cost.push(best_cost);
        children.push(Vec::new());
        children[best_parent].push(id);
        for &i in &near {
            let c = best_cost + dist(new, nodes[i]);
            if c < cost[i] && plan_env.segment_free(new, nodes[i], res) {
                let old = parent[i];
                children[old].retain(|&x| x != i);
                parent[i] = id;
                children[id].push(i);
                let delta = cost[i] - c;
                let mut stack = vec![i];
                while let Some(n) = stack.pop() {
                    cost[n] -= delta;
                    stack.extend(children[n].iter().copied());
                }
            }
        }
        // goal candidates
        let dg = dist(new, goal);
        if dg <= step && plan_env.segment_free(new, goal, res) {
            let c = best_cost + dg;
            if best_goal.is_none_or(|(_, bc)| c < bc) {
                best_goal = Some((id, c));
            }
        }
        if let Some((g, _)) = best_goal {
            // rewiring may have lowered the cost through the goal parent
            best_goal = Some((g, cost[g] + dist(nodes[g], goal)));
        }
    }
    // the cheapest goal connection among all nodes within one step
    let mut finish: Option<(usize, T)> = None;
    for i in 0..nodes.len() {
        let dg = dist(nodes[i], goal);
        if dg <= step {
            let c = cost[i] + dg;
            if finish.is_none_or(|(_, bc)| c < bc) && plan_env.segment_free(nodes[i], goal, res) {
                finish = Some((i, c));
            }
        }
    }
    let Some((last, _)) = finish.or(best_goal) else {
        return Err(Error::NoPath { tree_size: nodes.len() });
    };
    let mut path = vec![goal];
    let mut n = last;
    loop {
        if nodes[n] != goal {
            path.push(nodes[n]);
        }
        if n == 0 {
            break;
        }
        n = parent[n];
    }
    path.reverse();
    if cfg.shortcut {
        path = shortcut(&plan_env, &path, res);
    }
    Ok(RrtResult {
        path,
        tree: nodes.into_iter().zip(parent).collect(),
    })
}

/// From each kept vertex, jump to the farthest later vertex visible in a straight line.
fn shortcut<T: Scalar>(env: &Environment<T>, path: &[Point<T>], res: T) -> Vec<Point<T>> {
    let mut out = vec![path[0]];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = path.len() - 1;
        while j > i + 1 && !env.segment_free(path[i], path[j], res) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}
