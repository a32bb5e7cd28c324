use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Point<T> = [T; 2];

/// Axis-aligned ellipse `((x−cx)/a)² + ((y−cy)/b)² ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse<T> {
    pub center: Point<T>,
    pub semi_axes: Point<T>,
}

impl<T: Scalar> Ellipse<T> {
    pub fn new(center: Point<T>, semi_axes: Point<T>) -> Result<Self> {
        if !(semi_axes[0] > T::zero() && semi_axes[1] > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "ellipse semi-axes must be positive, got ({}, {})",
                semi_axes[0], semi_axes[1]
            )));
        }
        Ok(Self { center, semi_axes })
    }

    pub fn circle(center: Point<T>, radius: T) -> Result<Self> {
        Self::new(center, [radius, radius])
    }

    /// The level-set functional; below one inside, one on the boundary.
    #[inline]
    pub fn functional(&self, p: Point<T>) -> T {
        let u = (p[0] - self.center[0]) / self.semi_axes[0];
        let v = (p[1] - self.center[1]) / self.semi_axes[1];
        u * u + v * v
    }

    #[inline]
    pub fn gradient(&self, p: Point<T>) -> Point<T> {
        let two = T::lit(2.0);
        [
            two * (p[0] - self.center[0]) / (self.semi_axes[0] * self.semi_axes[0]),
            two * (p[1] - self.center[1]) / (self.semi_axes[1] * self.semi_axes[1]),
        ]
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        self.functional(p) <= T::one()
    }

    /// Same center, both semi-axes grown by `margin`.
    pub fn inflated(&self, margin: T) -> Self {
        Self {
            center: self.center,
            semi_axes: [self.semi_axes[0] + margin, self.semi_axes[1] + margin],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds<T> {
    pub min: Point<T>,
    pub max: Point<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn new(min: Point<T>, max: Point<T>) -> Result<Self> {
        if !(min[0] < max[0] && min[1] < max[1]) {
            return Err(Error::InvalidArgument("bounds must be a nonempty rectangle".into()));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Environment<T> {
    pub bounds: Bounds<T>,
    pub obstacles: Vec<Ellipse<T>>,
}

impl<T: Scalar> Environment<T> {
    pub fn new(bounds: Bounds<T>, obstacles: Vec<Ellipse<T>>) -> Self {
        Self { bounds, obstacles }
    }

    pub fn empty(bounds: Bounds<T>) -> Self {
        Self::new(bounds, Vec::new())
    }

    /// Inside some obstacle or outside the bounds.
    pub fn collision(&self, p: Point<T>) -> bool {
        !self.bounds.contains(p) || self.in_obstacle(p)
    }

    pub fn in_obstacle(&self, p: Point<T>) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Copy with every obstacle grown by `margin`.
    pub fn inflated(&self, margin: T) -> Self {
        Self {
            bounds: self.bounds,
            obstacles: self.obstacles.iter().map(|o| o.inflated(margin)).collect(),
        }
    }

    /// Checks the segment at spacing no larger than `resolution`.
    pub fn segment_free(&self, a: Point<T>, b: Point<T>, resolution: T) -> bool {
        let len = ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).sqrt();
        let n = (len / resolution).ceil().to_usize().unwrap_or(0).max(1);
        (0..=n).all(|i| {
            let s = T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
            !self.collision([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
        })
    }
}

/// Diagonal Gaussian population endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Population<T> {
    pub mean: Point<T>,
    pub var: Point<T>,
}

/// Environment plus start and target populations.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    pub env: Environment<T>,
    pub start: Population<T>,
    pub goal: Population<T>,
}

/// Endpoint variance of the built-in scenarios; the geometry is fixed, the
/// population spread is a free choice.
pub const BUILTIN_ENDPOINT_VAR: f64 = 0.25;

fn builtin<T: Scalar>(obstacles: [(f64, f64, f64, f64); 2], goal: Point<f64>) -> Scenario<T> {
    let lit = |p: Point<f64>| [T::lit(p[0]), T::lit(p[1])];
    let env = Environment::new(
        Bounds::new(lit([0.0, -10.0]), lit([20.0, 10.0])).expect("valid bounds"),
        obstacles
            .iter()
            .map(|&(cx, cy, a, b)| Ellipse::new(lit([cx, cy]), lit([a, b])).expect("valid ellipse"))
            .collect(),
    );
    let var = lit([BUILTIN_ENDPOINT_VAR, BUILTIN_ENDPOINT_VAR]);
    Scenario {
        env,
        start: Population {
            mean: lit([0.0, 0.0]),
            var,
        },
        goal: Population { mean: lit(goal), var },
    }
}

/// Two tall ellipses forcing an S-shaped passage from `(0, 0)` to `(20, 0)`.
pub fn s_tunnel<T: Scalar>() -> Scenario<T> {
    builtin([(6.0, -4.5, 2.0, 10.0), (14.0, 4.0, 2.0, 10.0)], [20.0, 0.0])
}

/// Two discs leaving a narrow gap, from `(0, 0)` to `(20, 4)`.
pub fn u_tunnel<T: Scalar>() -> Scenario<T> {
    builtin([(10.0, 8.0, 5.0, 5.0), (10.0, -4.0, 5.0, 5.0)], [20.0, 4.0])
}

pub fn builtin_scenario<T: Scalar>(name: &str) -> Result<Scenario<T>> {
    match name {
        "s_tunnel" => Ok(s_tunnel()),
        "u_tunnel" => Ok(u_tunnel()),
        other => Err(Error::Config(format!(
            "unknown environment {other:?}; built-ins are s_tunnel and u_tunnel"
        ))),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EllipseJson {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsJson {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PopulationJson {
    pub mean: [f64; 2],
    pub var: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioJson {
    pub bounds: BoundsJson,
    pub obstacles: Vec<EllipseJson>,
    pub start: PopulationJson,
    pub goal: PopulationJson,
}

impl ScenarioJson {
    pub fn from_scenario<T: Scalar>(s: &Scenario<T>) -> Self {
        let f = |p: Point<T>| [p[0].as_f64(), p[1].as_f64()];
        Self {
            bounds: BoundsJson {
                min: f(s.env.bounds.min),
                max: f(s.env.bounds.max),
            },
            obstacles: s
                .env
                .obstacles
                .iter()
                .map(|o| EllipseJson {
                    center: f(o.center),
                    semi_axes: f(o.semi_axes),
                })
                .collect(),
            start: PopulationJson {
                mean: f(s.start.mean),
                var: f(s.start.var),
            },
            goal: PopulationJson {
                mean: f(s.goal.mean),
                var: f(s.goal.var),
            },
        }
    }

    pub fn to_scenario<T: Scalar>(&self) -> Result<Scenario<T>> {
        let lit = |p: [f64; 2]| [T::lit(p[0]), T::lit(p[1])];
        let pop = |p: &PopulationJson| -> Result<Population<T>> {
            if !(p.var[0] > 0.0 && p.var[1] > 0.0) {
                return Err(Error::Config("population variances must be positive".into()));
            }
            Ok(Population {
                mean: lit(p.mean),
                var: lit(p.var),
            })
        };
        let env = Environment::new(
            Bounds::new(lit(self.bounds.min), lit(self.bounds.max))?,
            self.obstacles
                .iter()
                .map(|o| Ellipse::new(lit(o.center), lit(o.semi_axes)))
                .collect::<Result<_>>()?,
        );
        Ok(Scenario {
            env,
            start: pop(&self.start)?,
            goal: pop(&self.goal)?,
        })
    }
}
