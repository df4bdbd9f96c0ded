//! Longitudinal quadrotor simulation in Von Karman turbulence, with EKF, UKF and
//! bootstrap particle filter position estimators and a genetic algorithm that tunes
//! their noise covariances.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: the 6-state longitudinal model, its Jacobian and an RK4 step.
//! - [`turbulence`]: second-order gust shaping filters driven by seeded white noise.
//! - [`filters`]: the three estimators behind one predict/update contract.
//! - [`tuner`]: cost functions and the genetic algorithm.
//! - [`harness`]: scenario configuration, truth simulation, comparison runs and outputs.

pub mod dynamics;
pub mod error;
pub mod filters;
pub mod harness;
pub mod rng;
pub mod tuner;
pub mod turbulence;

pub use error::{Error, Result};
