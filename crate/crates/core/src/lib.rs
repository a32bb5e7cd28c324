//! Closed-form quantum Schrödinger bridges between Gaussians, mixture wavepacket bridges,
//! Bohm potentials and a mean-field crowd navigation solver.

// `!(x >= 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod bohm;
pub mod bridge;
pub mod datasets;
pub mod error;
pub mod gaussian;
pub mod gmm;
pub mod io;
pub mod metrics;
pub mod mfg;
pub mod scalar;
pub mod spd;
pub mod wavepacket;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = spd::Matrix<f64>;
pub type Matrix32 = spd::Matrix<f32>;
pub type SymMatrix64 = spd::SymMatrix<f64>;
pub type SymMatrix32 = spd::SymMatrix<f32>;
pub type SpdMatrix64 = spd::SpdMatrix<f64>;
pub type SpdMatrix32 = spd::SpdMatrix<f32>;
pub type Gaussian64 = gaussian::Gaussian<f64>;
pub type Gaussian32 = gaussian::Gaussian<f32>;
pub type GaussianMixture64 = gmm::GaussianMixture<f64>;
pub type GaussianMixture32 = gmm::GaussianMixture<f32>;
pub type BridgeProblem64 = bridge::BridgeProblem<f64>;
pub type BridgeProblem32 = bridge::BridgeProblem<f32>;
pub type CoupledMixtureBridge64 = wavepacket::CoupledMixtureBridge<f64>;
pub type CoupledMixtureBridge32 = wavepacket::CoupledMixtureBridge<f32>;
pub type Scenario64 = mfg::Scenario<f64>;
pub type Scenario32 = mfg::Scenario<f32>;
pub type TrajectoryParams64 = mfg::TrajectoryParams<f64>;
pub type TrajectoryParams32 = mfg::TrajectoryParams<f32>;
