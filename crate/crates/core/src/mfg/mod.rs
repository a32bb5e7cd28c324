//! Mean-field-game crowd navigation with a diagonal Gaussian population.

mod env;
mod lagrangian;
mod optimize;
mod rrt;

pub use env::{
    builtin_scenario, s_tunnel, u_tunnel, Bounds, BoundsJson, Ellipse, EllipseJson, Environment, Point, Population,
    PopulationJson, Scenario, ScenarioJson, BUILTIN_ENDPOINT_VAR,
};
pub use lagrangian::{
    collision_fraction, init_trajectory, kinetic_energy, kinetic_energy_grad, obstacle_penalty, obstacle_penalty_grad,
    point_penalty, positions_from_noise, potential_energy, potential_energy_grad, propagate_population,
    standardized_noise, trajectory_derivatives, TrajectoryGrad, TrajectoryParams,
};
pub use optimize::{
    derive_seed, loss_table, optimize, optimize_from, sample_paths, total_loss, trajectory_table, LossRecord,
    MfgConfig, MfgResult, DESK_LAMBDA_OBS,
};
pub use rrt::{path_length, rrt_star, RrtConfig, RrtResult};
