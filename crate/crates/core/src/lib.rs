//! Deterministic quadrotor landing workbench.
//!
//! A point-mass quadrotor is steered onto a moving landing pad either by a
//! TD3 agent trained from scratch or by an EKF-tracking PID pursuit baseline.
//! Everything downstream of a root seed is reproducible bit for bit.
//!
//! Module map:
//! - [`dynamics`]: point-mass drone with a position-setpoint inner loop
//! - [`scenario`]: platform trajectories (SPL/LMPL/CMPL/CTL) and the wind process
//! - [`reward`]: tanh potential-field landing reward and surface export
//! - [`environment`]: episode orchestration, observations, terminals, traces
//! - [`td3`]: MLPs with manual backprop, Adam, replay, TD3 learner, training loop
//! - [`baseline`]: constant-velocity Kalman tracker plus PID pursuit
//! - [`evaluation`]: benchmark runner and report tables
//! - [`config`]: flat `section.key = value` run configuration

pub mod baseline;
pub mod config;
pub mod dynamics;
pub mod environment;
mod error;
pub mod evaluation;
pub mod fmt;
pub mod reward;
pub mod rng;
pub mod scenario;
pub mod td3;

pub use error::{Error, Result};

/// World-frame 3-vector in SI units.
pub type Vec3 = nalgebra::Vector3<f64>;
