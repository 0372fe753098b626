//! Point-mass quadrotor with a position-setpoint tracking loop.
//!
//! The agent (and the baseline) never touch rotors: they move the commanded
//! position, and an inner loop turns the setpoint error into a velocity
//! command, tracks it with a first-order lag, and saturates velocity and
//! acceleration at the airframe envelope. Roll and pitch are synthesized from
//! the commanded lateral acceleration so observations carry attitude signals.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Per-axis velocity envelope, m/s.
pub const VELOCITY_LIMIT: [f64; 3] = [3.0, 3.0, 2.0];

/// Largest setpoint increment a single command may carry, m.
pub const MAX_SETPOINT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Roll, pitch, yaw in radians.
    pub attitude: Vec3,
    pub angular_velocity: Vec3,
    /// Currently commanded position.
    pub setpoint: Vec3,
}

impl DroneState {
    /// At rest at `position`, holding it as the setpoint.
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            setpoint: position,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            &self.position,
            &self.velocity,
            &self.attitude,
            &self.angular_velocity,
            &self.setpoint,
        ]
        .iter()
        .all(|v| v.iter().all(|c| c.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneParams {
    /// kg
    pub mass: f64,
    /// Setpoint error to velocity command gain, 1/s.
    pub kp_pos: f64,
    /// Velocity tracking time constant, s.
    pub tau_v: f64,
    /// Tracking acceleration clamp, m/s^2.
    pub a_max: f64,
    pub physics_dt: f64,
    pub gravity: f64,
}

impl Default for DroneParams {
    fn default() -> Self {
        Self {
            mass: 0.027,
            kp_pos: 4.0,
            tau_v: 0.25,
            a_max: 10.0,
            physics_dt: 1.0 / 240.0,
            gravity: 9.81,
        }
    }
}

impl DroneParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dynamics.mass", self.mass),
            ("dynamics.tau_v", self.tau_v),
            ("dynamics.physics_dt", self.physics_dt),
            ("dynamics.gravity", self.gravity),
            ("dynamics.a_max", self.a_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.kp_pos.is_finite() && self.kp_pos >= 0.0) {
            return Err(Error::param("dynamics.kp_pos", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Component-wise clamp to the velocity envelope.
pub fn clamp_envelope(v: Vec3) -> Vec3 {
    Vec3::new(
        v.x.clamp(-VELOCITY_LIMIT[0], VELOCITY_LIMIT[0]),
        v.y.clamp(-VELOCITY_LIMIT[1], VELOCITY_LIMIT[1]),
        v.z.clamp(-VELOCITY_LIMIT[2], VELOCITY_LIMIT[2]),
    )
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w < -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Advances the drone by one physics step of `dt` seconds under `external_force` (N).
pub fn step_drone(
    state: &DroneState,
    params: &DroneParams,
    external_force: &Vec3,
    dt: f64,
) -> Result<DroneState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Contract(format!("dt must be > 0, got {dt}")));
    }
    if !state.is_finite() {
        return Err(Error::StateCorruption(format!("non-finite drone state {state:?}")));
    }
    if !external_force.iter().all(|c| c.is_finite()) {
        return Err(Error::StateCorruption(format!(
            "non-finite external force {external_force:?}"
        )));
    }

    let v_cmd = clamp_envelope((state.setpoint - state.position) * params.kp_pos);
    let mut a_track = (v_cmd - state.velocity) / params.tau_v;
    let norm = a_track.norm();
    if norm > params.a_max {
        a_track *= params.a_max / norm;
    }
    let accel = a_track + external_force / params.mass;

    // semi-implicit Euler: velocity first, then position with the new velocity
    let velocity = clamp_envelope(state.velocity + accel * dt);
    let position = state.position + velocity * dt;

    let attitude = Vec3::new(
        wrap_angle((-a_track.y).atan2(params.gravity)),
        wrap_angle(a_track.x.atan2(params.gravity)),
        0.0,
    );
    let angular_velocity = (attitude - state.attitude) / dt;

    let next = DroneState {
        position,
        velocity,
        attitude,
        angular_velocity,
        setpoint: state.setpoint,
    };
    if !next.is_finite() {
        return Err(Error::StateCorruption(format!("step produced {next:?}")));
    }
    Ok(next)
}

/// Commands `position + delta` as the new setpoint.
pub fn apply_setpoint_delta(state: &DroneState, delta: &Vec3) -> Result<DroneState> {
    if !delta.iter().all(|c| c.is_finite()) {
        return Err(Error::StateCorruption(format!("non-finite setpoint delta {delta:?}")));
    }
    let worst = delta.amax();
    // allow for the rounding of `scale * action` at the bound
    if worst > MAX_SETPOINT_DELTA * (1.0 + 1e-9) {
        return Err(Error::Contract(format!(
            "setpoint delta {worst} exceeds {MAX_SETPOINT_DELTA} m; action was not scaled"
        )));
    }
    Ok(DroneState {
        setpoint: state.position + delta,
        ..*state
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DT: f64 = 1.0 / 240.0;

    #[test]
    fn equilibrium_is_fixed_point() {
        let s = DroneState::at_rest(Vec3::new(0.3, -1.0, 2.0));
        let p = DroneParams::default();
        let mut cur = s;
        for _ in 0..1000 {
            cur = step_drone(&cur, &p, &Vec3::zeros(), DT).unwrap();
        }
        assert_eq!(cur, s);
    }

    #[test]
    fn external_force_integrates_as_f_over_m() {
        let s = DroneState::at_rest(Vec3::zeros());
        let p = DroneParams::default();
        let next = step_drone(&s, &p, &Vec3::new(0.005, 0.0, 0.0), DT).unwrap();
        assert_relative_eq!(next.velocity.x, 0.005 / 0.027 / 240.0, max_relative = 1e-12);
        assert_relative_eq!(next.velocity.x, 7.716e-4, max_relative = 1e-3);
        assert_eq!(next.velocity.y, 0.0);
        assert_eq!(next.attitude, Vec3::zeros());
    }

    #[test]
    fn far_setpoint_respects_envelope() {
        let mut s = DroneState::at_rest(Vec3::zeros());
        s.setpoint = Vec3::new(10.0, 0.0, 0.0);
        for gains in [1.0, 4.0, 50.0] {
            let p = DroneParams {
                kp_pos: gains,
                a_max: 100.0,
                ..DroneParams::default()
            };
            let mut cur = s;
            for _ in 0..1000 {
                cur = step_drone(&cur, &p, &Vec3::zeros(), DT).unwrap();
                assert!(cur.velocity.x <= 3.0);
            }
        }
    }

    #[test]
    fn attitude_follows_commanded_acceleration() {
        let mut s = DroneState::at_rest(Vec3::zeros());
        s.setpoint = Vec3::new(1.0, 0.0, 0.0);
        let next = step_drone(&s, &DroneParams::default(), &Vec3::zeros(), DT).unwrap();
        // +x acceleration pitches forward, no roll
        assert!(next.attitude.y > 0.0);
        assert_eq!(next.attitude.x, 0.0);
        assert_relative_eq!(next.angular_velocity.y, next.attitude.y / DT, max_relative = 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut s = DroneState::at_rest(Vec3::zeros());
        s.velocity.x = f64::NAN;
        let err = step_drone(&s, &DroneParams::default(), &Vec3::zeros(), DT).unwrap_err();
        assert!(matches!(err, Error::StateCorruption(_)));
        let ok = DroneState::at_rest(Vec3::zeros());
        assert!(step_drone(&ok, &DroneParams::default(), &Vec3::new(f64::INFINITY, 0., 0.), DT).is_err());
        assert!(step_drone(&ok, &DroneParams::default(), &Vec3::zeros(), 0.0).is_err());
    }

    #[test]
    fn setpoint_delta() {
        let s = DroneState::at_rest(Vec3::new(1.0, 1.0, 1.0));
        let next = apply_setpoint_delta(&s, &Vec3::new(0.1, -0.1, 0.0)).unwrap();
        assert_relative_eq!(next.setpoint, Vec3::new(1.1, 0.9, 1.0), epsilon = 1e-15);
        assert_eq!(next.position, s.position);
        assert_eq!(next.velocity, s.velocity);

        let hover = apply_setpoint_delta(&s, &Vec3::zeros()).unwrap();
        assert_eq!(hover.setpoint, s.position);

        let err = apply_setpoint_delta(&s, &Vec3::new(0.2, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    fn vec3(bound: f64) -> impl Strategy<Value = Vec3> {
        (-bound..=bound, -bound..=bound, -bound..=bound).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn envelope_and_attitude_hold(
            start in vec3(2.0),
            steps in prop::collection::vec((vec3(0.005), vec3(0.1)), 1..200),
        ) {
            let p = DroneParams::default();
            let mut s = DroneState::at_rest(start);
            for (force, delta) in steps {
                s = apply_setpoint_delta(&s, &delta).unwrap();
                for _ in 0..8 {
                    s = step_drone(&s, &p, &force, DT).unwrap();
                    prop_assert!(s.velocity.x.abs() <= 3.0 && s.velocity.y.abs() <= 3.0);
                    prop_assert!(s.velocity.z.abs() <= 2.0);
                    prop_assert!(s.attitude.x.abs() < std::f64::consts::FRAC_PI_2);
                    prop_assert!(s.attitude.y.abs() < std::f64::consts::FRAC_PI_2);
                    prop_assert!(s.is_finite());
                }
            }
        }

        #[test]
        fn stepping_is_deterministic(start in vec3(2.0), force in vec3(0.005), sp in vec3(3.0)) {
            let p = DroneParams::default();
            let mut s = DroneState::at_rest(start);
            s.setpoint = sp;
            let a = step_drone(&s, &p, &force, DT).unwrap();
            let b = step_drone(&s, &p, &force, DT).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
