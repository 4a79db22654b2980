//! Control allocation: axle-level commands to wheel torques, the achievable
//! yaw-moment envelope, and the rule-based stability supervisor with ABS.

mod allocate;
mod vsc;

pub use allocate::{allocate, mz_envelope, ActuatorCommand, Allocation, MzEnvelope, WheelCommand};
pub use vsc::{
    abs_pid, yaw_rate_reference, AbsPid, PidGains, Vsc, VscConfig, VscDecision, VscTrigger,
};
