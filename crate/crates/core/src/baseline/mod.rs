//! EKF-tracking PID pursuit baseline. It commands the same bounded setpoint
//! deltas as the learned agent.

mod ekf;
mod pursuit;

pub use ekf::{EkfConfig, EkfState};
pub use pursuit::{BaselineConfig, EkfPidController, PidController, PursuitGuidance};
