//! Landing-pad trajectories for the four benchmark scenarios, and the
//! stochastic wind force applied to the drone.

mod platform;
mod wind;

pub use platform::{platform_at, PlatformState, ScenarioKind, ScenarioSpec, MAX_PAD_SPEED};
pub use wind::{init_wind, sample_wind_step, WindConfig, WindState};
