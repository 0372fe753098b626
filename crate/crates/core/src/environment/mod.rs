//! Episode orchestration: spawn, setpoint actions, physics substepping,
//! wind resampling, reward and terminal classification.

mod observation;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use observation::{build_observation, NormBounds, Observation, ACTION_DIM, OBS_DIM, OBS_LAYOUT};

use crate::dynamics::{apply_setpoint_delta, step_drone, DroneParams, DroneState};
use crate::reward::{compute_reward, RewardBreakdown, RewardConfig, RewardInput, SafetyGeometry};
use crate::rng::{self, derive_seed, StreamRng};
use crate::scenario::{init_wind, platform_at, sample_wind_step, PlatformState, ScenarioSpec, WindConfig, WindState};
use crate::{Error, Result, Vec3};

/// Slack allowed on action components before they are rejected instead of clipped.
pub const ACTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terminal {
    None,
    Touchdown,
    Crash,
    OutOfBounds,
    Timeout,
}

impl Terminal {
    pub fn is_terminal(self) -> bool {
        self != Terminal::None
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "None",
            Self::Touchdown => "Touchdown",
            Self::Crash => "Crash",
            Self::OutOfBounds => "OutOfBounds",
            Self::Timeout => "Timeout",
        }
    }

    /// Whether the transition ends the task (as opposed to a time-limit cut).
    pub fn ends_task(self) -> bool {
        matches!(self, Self::Touchdown | Self::Crash | Self::OutOfBounds)
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Terminal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::None, Self::Touchdown, Self::Crash, Self::OutOfBounds, Self::Timeout]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown terminal `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchdownThresholds {
    /// Max |rel_x| and |rel_y|, m.
    pub lateral: f64,
    /// Height band above the pad top that counts as contact, m.
    pub vertical: f64,
    /// Max relative speed at contact, m/s.
    pub speed: f64,
}

impl Default for TouchdownThresholds {
    fn default() -> Self {
        Self {
            lateral: 0.25,
            vertical: 0.05,
            speed: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnConfig {
    /// Radius of the spawn hemisphere centred on the pad, m.
    pub radius: f64,
    pub min_altitude: f64,
    pub max_altitude: f64,
}

impl Default for SpawnConfig {
    fn default() -> Self {
        Self {
            radius: 1.5,
            min_altitude: 0.5,
            max_altitude: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Episode length limit, s.
    pub episode_cap: f64,
    pub control_hz: u32,
    pub physics_hz: u32,
    /// Meters of setpoint change per unit action.
    pub action_scale: f64,
    pub norm_bounds: NormBounds,
    pub touchdown: TouchdownThresholds,
    pub out_of_bounds_radius: f64,
    /// Height of the floor, m.
    pub ground_z: f64,
    pub edge_margin: f64,
    pub spawn: SpawnConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            episode_cap: 20.0,
            control_hz: 30,
            physics_hz: 240,
            action_scale: 0.1,
            norm_bounds: NormBounds::default(),
            touchdown: TouchdownThresholds::default(),
            out_of_bounds_radius: 3.0,
            ground_z: 0.0,
            edge_margin: 0.05,
            spawn: SpawnConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.control_hz == 0 || self.physics_hz == 0 || self.physics_hz % self.control_hz != 0 {
            return Err(Error::param(
                "env.physics_hz",
                format!(
                    "must be a positive multiple of control_hz ({} vs {})",
                    self.physics_hz, self.control_hz
                ),
            ));
        }
        if !(self.action_scale > 0.0 && self.action_scale <= crate::dynamics::MAX_SETPOINT_DELTA) {
            return Err(Error::param("env.action_scale", "must lie in (0, 0.1]"));
        }
        if !(self.episode_cap > 0.0 && self.episode_cap.is_finite()) {
            return Err(Error::param("env.episode_cap", "must be > 0"));
        }
        if !self.norm_bounds.all_positive() {
            return Err(Error::param("env.norm_bounds", "all clip bounds must be > 0"));
        }
        let s = &self.spawn;
        if !(s.min_altitude >= 0.0 && s.max_altitude >= s.min_altitude && s.min_altitude < s.radius) {
            return Err(Error::param(
                "env.spawn",
                "need 0 <= min_altitude <= max_altitude and min_altitude < radius",
            ));
        }
        if !(self.out_of_bounds_radius > s.radius) {
            return Err(Error::param("env.out_of_bounds_radius", "must exceed the spawn radius"));
        }
        Ok(())
    }

    pub fn substeps(&self) -> u32 {
        self.physics_hz / self.control_hz
    }

    /// Number of control steps after which an episode times out.
    pub fn cap_steps(&self) -> u64 {
        (self.episode_cap * self.control_hz as f64).round() as u64
    }
}

/// Snapshot of the world after a control step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub time: f64,
    pub step: u64,
    pub drone: DroneState,
    pub pad: PlatformState,
    pub wind_force: Vec3,
    /// Action as applied, after clipping.
    pub action: [f64; ACTION_DIM],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub terminal: Terminal,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
struct Episode {
    scenario: ScenarioSpec,
    drone: DroneState,
    pad: PlatformState,
    wind: WindState,
    wind_rng: StreamRng,
    steps: u64,
    substeps: u64,
    prev_distance: f64,
    terminal: Terminal,
}

/// Single-drone landing environment. One instance runs one episode at a time.
#[derive(Debug, Clone)]
pub struct LandingEnv {
    pub config: EnvConfig,
    pub dynamics: DroneParams,
    pub reward: RewardConfig,
    pub wind: WindConfig,
    /// Scenario template; its seed is replaced by one derived from the reset seed.
    pub scenario: ScenarioSpec,
    episode: Option<Episode>,
}

impl LandingEnv {
    pub fn new(
        config: EnvConfig,
        dynamics: DroneParams,
        reward: RewardConfig,
        wind: WindConfig,
        scenario: ScenarioSpec,
    ) -> Result<Self> {
        config.validate()?;
        dynamics.validate()?;
        reward.validate()?;
        wind.validate()?;
        scenario.validate()?;
        Ok(Self {
            config,
            dynamics,
            reward,
            wind,
            scenario,
            episode: None,
        })
    }

    /// Default configuration on the given scenario.
    pub fn with_scenario(scenario: ScenarioSpec) -> Result<Self> {
        Self::new(
            EnvConfig::default(),
            DroneParams {
                physics_dt: 1.0 / EnvConfig::default().physics_hz as f64,
                ..DroneParams::default()
            },
            RewardConfig::default(),
            WindConfig::default(),
            scenario,
        )
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        let scenario = ScenarioSpec {
            seed: derive_seed(seed, rng::SCENARIO, 0),
            ..self.scenario
        };
        scenario.validate()?;
        let mut wind_rng = rng::stream(seed, rng::WIND);
        let wind = init_wind(&mut wind_rng, &self.wind)?;
        let offset = sample_spawn(&mut rng::stream(seed, rng::SPAWN), &self.config.spawn);

        let pad = platform_at(&scenario, 0.0);
        let drone = DroneState::at_rest(pad.position + offset);
        self.episode = Some(Episode {
            scenario,
            drone,
            pad,
            wind,
            wind_rng,
            steps: 0,
            substeps: 0,
            prev_distance: offset.norm(),
            terminal: Terminal::None,
        });
        Ok(build_observation(&drone, &pad, &self.config.norm_bounds))
    }

    pub fn step(&mut self, action: [f64; ACTION_DIM]) -> Result<StepOutcome> {
        let cfg = self.config;
        let action = validate_action(action)?;
        let ep = self
            .episode
            .as_mut()
            .ok_or_else(|| Error::Contract("step called before reset".into()))?;
        if ep.terminal.is_terminal() {
            return Err(Error::Contract(format!(
                "episode already ended with {}; call reset",
                ep.terminal
            )));
        }

        let delta = Vec3::from(action) * cfg.action_scale;
        ep.drone = apply_setpoint_delta(&ep.drone, &delta)?;
        ep.wind = sample_wind_step(&ep.wind, &mut ep.wind_rng);

        let dt = 1.0 / cfg.physics_hz as f64;
        let mut terminal = Terminal::None;
        for _ in 0..cfg.substeps() {
            ep.drone = step_drone(&ep.drone, &self.dynamics, &ep.wind.force, dt)?;
            ep.substeps += 1;
            ep.pad = platform_at(&ep.scenario, ep.substeps as f64 / cfg.physics_hz as f64);
            if let Some(contact) = classify_contact(&ep.drone, &ep.pad, &cfg) {
                terminal = contact;
                break;
            }
        }
        ep.steps += 1;

        let rel_pos = ep.drone.position - ep.pad.position;
        let distance = rel_pos.norm();
        if terminal == Terminal::None {
            if distance > cfg.out_of_bounds_radius {
                terminal = Terminal::OutOfBounds;
            } else if ep.steps >= cfg.cap_steps() {
                terminal = Terminal::Timeout;
            }
        }

        let geometry = SafetyGeometry {
            half_extent: ep.pad.half_extent,
            edge_margin: cfg.edge_margin,
        };
        let (below_pad, near_edge) = geometry.flags(&rel_pos);
        let reward = compute_reward(
            &RewardInput {
                rel_pos,
                rel_vel: ep.drone.velocity - ep.pad.velocity,
                prev_distance: ep.prev_distance,
                obstacle_distance: None,
                below_pad,
                near_edge,
            },
            &self.reward,
        )?;
        ep.prev_distance = distance;
        ep.terminal = terminal;

        Ok(StepOutcome {
            observation: build_observation(&ep.drone, &ep.pad, &cfg.norm_bounds),
            reward,
            terminal,
            info: StepInfo {
                time: ep.substeps as f64 / cfg.physics_hz as f64,
                step: ep.steps,
                drone: ep.drone,
                pad: ep.pad,
                wind_force: ep.wind.force,
                action,
            },
        })
    }

    pub fn drone(&self) -> Option<&DroneState> {
        self.episode.as_ref().map(|e| &e.drone)
    }

    pub fn pad(&self) -> Option<&PlatformState> {
        self.episode.as_ref().map(|e| &e.pad)
    }

    /// Scenario of the running episode, with its derived seed.
    pub fn episode_scenario(&self) -> Option<&ScenarioSpec> {
        self.episode.as_ref().map(|e| &e.scenario)
    }

    pub fn wind_state(&self) -> Option<&WindState> {
        self.episode.as_ref().map(|e| &e.wind)
    }

    pub fn time(&self) -> f64 {
        self.episode
            .as_ref()
            .map_or(0.0, |e| e.substeps as f64 / self.config.physics_hz as f64)
    }

    pub fn is_terminal(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.terminal.is_terminal())
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / self.config.control_hz as f64
    }
}

fn validate_action(action: [f64; ACTION_DIM]) -> Result<[f64; ACTION_DIM]> {
    let mut out = action;
    for (i, a) in out.iter_mut().enumerate() {
        if !a.is_finite() || a.abs() > 1.0 + ACTION_TOLERANCE {
            return Err(Error::Contract(format!(
                "action[{i}] = {a} outside [-1, 1]"
            )));
        }
        *a = a.clamp(-1.0, 1.0);
    }
    Ok(out)
}

/// Uniform point in the spawn hemisphere with the altitude band applied.
pub fn sample_spawn<R: Rng + ?Sized>(rng: &mut R, spawn: &SpawnConfig) -> Vec3 {
    let r = spawn.radius;
    loop {
        let p = Vec3::new(
            rng.random_range(-r..=r),
            rng.random_range(-r..=r),
            rng.random_range(spawn.min_altitude..=spawn.max_altitude),
        );
        if p.norm() <= r {
            return p;
        }
    }
}

/// Contact classification; at most one cause, touchdown taking priority.
///
/// Touchdown: inside the footprint, within the height band above the pad
/// top, slow enough. Crash: the same band entered too fast, penetration of
/// the pad body from any direction, or reaching the floor.
pub fn classify_contact(drone: &DroneState, pad: &PlatformState, cfg: &EnvConfig) -> Option<Terminal> {
    let rel = drone.position - pad.position;
    let td = &cfg.touchdown;
    let over_pad = rel.x.abs() <= pad.half_extent && rel.y.abs() <= pad.half_extent;
    let within_lateral = rel.x.abs() <= td.lateral && rel.y.abs() <= td.lateral;
    let in_band = (0.0..=td.vertical).contains(&rel.z);
    let rel_speed = (drone.velocity - pad.velocity).norm();

    if over_pad && within_lateral && in_band && rel_speed <= td.speed {
        return Some(Terminal::Touchdown);
    }
    if (over_pad && (in_band || rel.z < 0.0)) || drone.position.z <= cfg.ground_z {
        return Some(Terminal::Crash);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioKind;

    fn spl_env() -> LandingEnv {
        LandingEnv::with_scenario(ScenarioSpec::new(ScenarioKind::Spl, 0)).unwrap()
    }

    #[test]
    fn reset_is_deterministic_and_boxed() {
        let mut env = spl_env();
        let a = env.reset(17).unwrap();
        let b = env.reset(17).unwrap();
        assert_eq!(a, b);
        assert!(a.0.iter().all(|c| (-1.0..=1.0).contains(c)));
        assert_ne!(a, env.reset(18).unwrap());
    }

    #[test]
    fn spawn_inside_shaped_region() {
        let mut env = spl_env();
        for seed in 0..1000 {
            env.reset(seed).unwrap();
            let d = (env.drone().unwrap().position - env.pad().unwrap().position).norm();
            assert!(d < env.reward.far_radius);
            let alt = env.drone().unwrap().position.z - env.pad().unwrap().position.z;
            assert!((0.5..=1.5).contains(&alt));
        }
    }

    #[test]
    fn hover_gives_mid_band_small_reward() {
        let mut env = spl_env();
        env.reset(3).unwrap();
        let out = env.step([0.0; 3]).unwrap();
        assert_eq!(out.terminal, Terminal::None);
        assert_eq!(out.reward.case, crate::reward::RewardCase::Mid);
        assert!(out.reward.total.abs() < 1e-9);
    }

    #[test]
    fn hover_times_out_at_cap() {
        let mut env = spl_env();
        env.reset(5).unwrap();
        let mut steps = 0;
        loop {
            let out = env.step([0.0; 3]).unwrap();
            steps += 1;
            if out.terminal.is_terminal() {
                assert_eq!(out.terminal, Terminal::Timeout);
                assert_eq!(out.info.time, 20.0);
                break;
            }
        }
        assert_eq!(steps, 600);
        assert!(matches!(env.step([0.0; 3]), Err(Error::Contract(_))));
    }

    #[test]
    fn action_bounds() {
        let mut env = spl_env();
        env.reset(1).unwrap();
        assert!(env.step([1.0 + 5e-7, 0.0, -1.0]).is_ok());
        assert!(matches!(env.step([1.1, 0.0, 0.0]), Err(Error::Contract(_))));
        assert!(env.step([f64::NAN, 0.0, 0.0]).is_err());
        let mut fresh = spl_env();
        assert!(fresh.step([0.0; 3]).is_err());
    }

    #[test]
    fn scripted_descent_touches_down() {
        let mut env = spl_env();
        env.reset(9).unwrap();
        let mut last = None;
        for _ in 0..600 {
            let drone = env.drone().unwrap();
            let pad = env.pad().unwrap();
            let rel = pad.position - drone.position;
            // align first, then descend
            let lateral = (rel.x * rel.x + rel.y * rel.y).sqrt();
            let target_z = if lateral > 0.02 { 0.3 } else { 0.0 };
            let cmd = Vec3::new(rel.x, rel.y, rel.z + target_z) / 0.1;
            let a = [cmd.x.clamp(-1.0, 1.0), cmd.y.clamp(-1.0, 1.0), cmd.z.clamp(-0.5, 1.0)];
            let out = env.step(a).unwrap();
            if out.terminal.is_terminal() {
                last = Some(out);
                break;
            }
        }
        let out = last.unwrap();
        assert_eq!(out.terminal, Terminal::Touchdown);
        let rel = out.info.drone.position - out.info.pad.position;
        assert!(rel.xy().norm() < 0.25);
    }

    #[test]
    fn contact_classes_exclusive() {
        let cfg = EnvConfig::default();
        let pad = PlatformState {
            position: Vec3::new(0.0, 0.0, 0.5),
            velocity: Vec3::zeros(),
            half_extent: 0.25,
        };
        let mut d = DroneState::at_rest(Vec3::new(0.1, 0.0, 0.52));
        assert_eq!(classify_contact(&d, &pad, &cfg), Some(Terminal::Touchdown));
        d.velocity = Vec3::new(0.0, 0.0, -0.6);
        assert_eq!(classify_contact(&d, &pad, &cfg), Some(Terminal::Crash));
        d.position = Vec3::new(0.1, 0.0, 0.45);
        d.velocity = Vec3::new(0.0, 0.0, -1.5);
        assert_eq!(classify_contact(&d, &pad, &cfg), Some(Terminal::Crash));
        d.position = Vec3::new(1.0, 0.0, 0.45);
        assert_eq!(classify_contact(&d, &pad, &cfg), None);
        d.position = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(classify_contact(&d, &pad, &cfg), Some(Terminal::Crash));
    }

    #[test]
    fn config_validation() {
        let bad = EnvConfig {
            physics_hz: 100,
            ..EnvConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(EnvConfig::default().cap_steps(), 600);
        assert_eq!(EnvConfig::default().substeps(), 8);
    }
}
