use serde::{Deserialize, Serialize};

use crate::dynamics::DroneState;
use crate::scenario::PlatformState;
use crate::Vec3;

pub const OBS_DIM: usize = 15;
pub const ACTION_DIM: usize = 3;

/// Component names in emission order.
pub const OBS_LAYOUT: [&str; OBS_DIM] = [
    "roll", "pitch", "yaw", "vx", "vy", "vz", "wx", "wy", "wz", "rel_px", "rel_py", "rel_pz",
    "rel_vx", "rel_vy", "rel_vz",
];

/// Clip ranges (symmetric, positive) used to normalize each observation group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub attitude: f64,
    pub velocity: Vec3,
    pub angular_velocity: f64,
    pub rel_position: f64,
    pub rel_velocity: Vec3,
}

impl Default for NormBounds {
    fn default() -> Self {
        Self {
            attitude: std::f64::consts::PI,
            velocity: Vec3::new(3.0, 3.0, 2.0),
            angular_velocity: 10.0,
            rel_position: 3.0,
            rel_velocity: Vec3::new(3.5, 3.5, 2.5),
        }
    }
}

impl NormBounds {
    fn per_component(&self) -> [f64; OBS_DIM] {
        let (a, w, p) = (self.attitude, self.angular_velocity, self.rel_position);
        let (v, rv) = (self.velocity, self.rel_velocity);
        [a, a, a, v.x, v.y, v.z, w, w, w, p, p, p, rv.x, rv.y, rv.z]
    }

    pub fn all_positive(&self) -> bool {
        self.per_component().iter().all(|b| b.is_finite() && *b > 0.0)
    }
}

/// Clipped and normalized observation, every component in [-1, 1].
///
/// Layout: attitude (3), linear velocity (3), angular velocity (3), pad minus
/// drone position (3), pad minus drone velocity (3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_f32(&self) -> [f32; OBS_DIM] {
        self.0.map(|c| c as f32)
    }

    pub fn rel_position(&self) -> Vec3 {
        Vec3::new(self.0[9], self.0[10], self.0[11])
    }
}

pub fn build_observation(drone: &DroneState, pad: &PlatformState, bounds: &NormBounds) -> Observation {
    let rel_p = pad.position - drone.position;
    let rel_v = pad.velocity - drone.velocity;
    let raw = [
        drone.attitude.x,
        drone.attitude.y,
        drone.attitude.z,
        drone.velocity.x,
        drone.velocity.y,
        drone.velocity.z,
        drone.angular_velocity.x,
        drone.angular_velocity.y,
        drone.angular_velocity.z,
        rel_p.x,
        rel_p.y,
        rel_p.z,
        rel_v.x,
        rel_v.y,
        rel_v.z,
    ];
    let limits = bounds.per_component();
    let mut out = [0.0; OBS_DIM];
    for i in 0..OBS_DIM {
        // NaN maps to 0 so the box invariant holds even for corrupt input
        let c = if raw[i].is_nan() { 0.0 } else { raw[i] };
        out[i] = c.clamp(-limits[i], limits[i]) / limits[i];
    }
    Observation(out)
}
