//! Particle Monte Carlo simulation of Boltzmann-type opinion games in which
//! several leader populations steer a follower population through
//! best-reply controls.
//!
//! The crate is organised bottom-up: interaction kernels, the best-reply
//! linear system, the stochastic binary rules, the particle simulator, and
//! the deterministic references used to validate it (a mean-field moment
//! integrator and the analytic stationary densities).

pub mod best_reply;
pub mod binary;
pub mod error;
pub mod hetero;
pub mod histogram;
pub mod kernels;
pub mod oracle;
pub mod output;
pub mod scenario;
pub mod sim;
pub mod stationary;

pub use error::{Error, Result};
pub use scenario::{load_scenario, preset, ControlVariant, Mode, Scenario};
pub use sim::{run, RunRecord, Simulation};
