//! Path-tracking NMPC for drifting manoeuvres with direct yaw moment and
//! rear-wheel steering, plus the two-track closed-loop test bench.
//!
//! - [`vehicle`]: single-track prediction model and two-track plant.
//! - [`nmpc`]: discretisation, cost, constraints and the SQP solver.
//! - [`allocation`]: wheel-torque allocation, yaw-moment envelope, VSC/ABS.
//! - [`scenario`]: manoeuvres, closed-loop runs, KPIs, trace files and sweeps.

pub mod allocation;
pub mod config;
pub mod dual;
pub mod error;
pub mod nmpc;
pub mod par;
pub mod scenario;
pub mod variant;
pub mod vehicle;

pub use config::{Config, CONFIG_SCHEMA};
pub use error::{Error, Result};
pub use par::Execution;
pub use variant::Variant;
