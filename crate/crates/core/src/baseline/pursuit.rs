use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ekf::{EkfConfig, EkfState};
use crate::dynamics::{DroneState, MAX_SETPOINT_DELTA};
use crate::rng::{self, StreamRng};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub ekf: EkfConfig,
    pub kp: [f64; 3],
    pub ki: f64,
    pub kd: f64,
    pub integral_clamp: f64,
    /// Bound on each setpoint-delta component, metres.
    pub output_clamp: f64,
    /// Seconds of estimated pad motion to lead the target by.
    pub lookahead: f64,
    /// m/s.
    pub descent_rate: f64,
    /// Lateral error below which the approach height ramps down, metres.
    pub align_radius: f64,
    /// Standard deviation of pad position measurements, metres.
    pub measurement_sigma: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            ekf: EkfConfig::default(),
            kp: [1.2, 1.2, 1.0],
            ki: 0.05,
            kd: 0.3,
            integral_clamp: 0.5,
            output_clamp: MAX_SETPOINT_DELTA,
            lookahead: 0.5,
            descent_rate: 0.3,
            align_radius: 0.1,
            measurement_sigma: 0.001,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.ekf.validate()?;
        let nonneg = [
            ("baseline.kp_x", self.kp[0]),
            ("baseline.kp_y", self.kp[1]),
            ("baseline.kp_z", self.kp[2]),
            ("baseline.ki", self.ki),
            ("baseline.kd", self.kd),
            ("baseline.integral_clamp", self.integral_clamp),
            ("baseline.lookahead", self.lookahead),
            ("baseline.measurement_sigma", self.measurement_sigma),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("baseline.descent_rate", self.descent_rate),
            ("baseline.align_radius", self.align_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.output_clamp > 0.0 && self.output_clamp <= MAX_SETPOINT_DELTA) {
            return Err(Error::param(
                "baseline.output_clamp",
                format!("must be in (0, {MAX_SETPOINT_DELTA}], got {}", self.output_clamp),
            ));
        }
        Ok(())
    }
}

/// Per-axis PID with a clamped integrator and a clamped output.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController {
    pub kp: Vec3,
    pub ki: f64,
    pub kd: f64,
    pub integral_clamp: f64,
    pub output_clamp: f64,
    pub integral: Vec3,
    pub prev_error: Option<Vec3>,
}

impl PidController {
    pub fn new(cfg: &BaselineConfig) -> Self {
        Self {
            kp: Vec3::from(cfg.kp),
            ki: cfg.ki,
            kd: cfg.kd,
            integral_clamp: cfg.integral_clamp,
            output_clamp: cfg.output_clamp,
            integral: Vec3::zeros(),
            prev_error: None,
        }
    }

    /// Output for `error` over an interval `dt`; the derivative term is zero
    /// on the first call.
    pub fn step(&mut self, error: &Vec3, dt: f64) -> Vec3 {
        let c = self.integral_clamp;
        self.integral = (self.integral + error * dt).map(|v| v.clamp(-c, c));
        let derivative = match self.prev_error {
            Some(prev) if dt > 0.0 => (error - prev) / dt,
            _ => Vec3::zeros(),
        };
        self.prev_error = Some(*error);
        let u = self.kp.component_mul(error) + self.integral * self.ki + derivative * self.kd;
        let b = self.output_clamp;
        u.map(|v| v.clamp(-b, b))
    }
}

/// Lead pursuit with a descending approach height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitGuidance {
    pub lookahead: f64,
    pub descent_rate: f64,
    pub align_radius: f64,
    /// Remaining height above the pad; set from the drone on first use.
    pub approach_height: Option<f64>,
}

impl PursuitGuidance {
    pub fn new(cfg: &BaselineConfig) -> Self {
        Self {
            lookahead: cfg.lookahead,
            descent_rate: cfg.descent_rate,
            align_radius: cfg.align_radius,
            approach_height: None,
        }
    }

    /// Aim point for this control period.
    pub fn target(&mut self, est: &EkfState, drone: &DroneState, dt: f64) -> Vec3 {
        let lead = est.position() + est.velocity() * self.lookahead;
        let h = *self
            .approach_height
            .get_or_insert_with(|| (drone.position.z - est.position().z).max(0.0));
        let lateral = (lead.xy() - drone.position.xy()).norm();
        let h = if lateral < self.align_radius {
            (h - self.descent_rate * dt).max(0.0)
        } else {
            h
        };
        self.approach_height = Some(h);
        Vec3::new(lead.x, lead.y, est.position().z + h)
    }
}

/// Setpoint delta toward the guidance target, bounded like an agent action.
pub fn pursuit_command(
    est: &EkfState,
    drone: &DroneState,
    guidance: &mut PursuitGuidance,
    pid: &mut PidController,
    dt: f64,
) -> Vec3 {
    let target = guidance.target(est, drone, dt);
    pid.step(&(target - drone.position), dt)
}

/// Measure, filter, guide, actuate: one baseline control period.
#[derive(Debug, Clone)]
pub struct EkfPidController {
    pub config: BaselineConfig,
    pub ekf: EkfState,
    pub pid: PidController,
    pub guidance: PursuitGuidance,
    noise: Normal<f64>,
    rng: StreamRng,
    action_scale: f64,
}

impl EkfPidController {
    /// `seed` drives measurement noise only. The filter starts at the first
    /// measurement of `pad_position` with zero velocity.
    pub fn new(config: BaselineConfig, pad_position: &Vec3, action_scale: f64, seed: u64) -> Result<Self> {
        config.validate()?;
        if !(action_scale > 0.0) {
            return Err(Error::param("env.action_scale", "must be > 0"));
        }
        let noise = Normal::new(0.0, config.measurement_sigma)
            .map_err(|e| Error::param("baseline.measurement_sigma", e.to_string()))?;
        let mut rng = rng::stream(seed, rng::MEASUREMENT);
        let z = pad_position + Vec3::from_fn(|_, _| noise.sample(&mut rng));
        Ok(Self {
            ekf: EkfState::new(z, Vec3::zeros(), &config.ekf)?,
            pid: PidController::new(&config),
            guidance: PursuitGuidance::new(&config),
            config,
            noise,
            rng,
            action_scale,
        })
    }

    pub fn measure(&mut self, pad_position: &Vec3) -> Vec3 {
        pad_position + Vec3::from_fn(|_, _| self.noise.sample(&mut self.rng))
    }

    /// Normalized action in [-1, 1]^3 for the current drone and true pad position.
    pub fn command(&mut self, drone: &DroneState, pad_position: &Vec3) -> Result<[f64; 3]> {
        let z = self.measure(pad_position);
        self.ekf = self.ekf.predict().update(&z)?;
        let dt = self.config.ekf.dt;
        let delta = pursuit_command(&self.ekf, drone, &mut self.guidance, &mut self.pid, dt);
        let a = delta / self.action_scale;
        Ok([a.x, a.y, a.z].map(|c| c.clamp(-1.0, 1.0)))
    }

    pub fn estimate(&self) -> [f64; 6] {
        self.ekf.as_array()
    }
}
