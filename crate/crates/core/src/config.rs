//! Run configuration as flat `section.key = value` text.
//!
//! ```text
//! seed = 7
//! reward.alpha = 5
//! evaluation.scenarios = SPL,LMPL
//! ```
//!
//! `#` starts a comment. Unknown and repeated keys are rejected. [`RunConfig::dump`]
//! writes every key with round-trip float formatting, so a dumped file parses
//! back to an identical configuration.

use std::path::Path;

use crate::baseline::BaselineConfig;
use crate::dynamics::DroneParams;
use crate::environment::EnvConfig;
use crate::evaluation::BenchmarkSetup;
use crate::reward::RewardConfig;
use crate::scenario::{ScenarioKind, ScenarioSpec, WindConfig};
use crate::td3::{Td3Hyperparams, TrainConfig};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub checkpoint_interval: u64,
    /// Scenarios trained in order, `td3.total_steps` each.
    pub curriculum: Vec<ScenarioKind>,
    /// Wind process during training.
    pub wind: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            eval_interval: t.eval_interval,
            eval_episodes: t.eval_episodes,
            checkpoint_interval: t.checkpoint_interval,
            curriculum: vec![ScenarioKind::Spl],
            wind: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSection {
    pub scenarios: Vec<ScenarioKind>,
    pub trials: usize,
    pub wind: bool,
    pub workers: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            scenarios: ScenarioKind::ALL.to_vec(),
            trials: 10,
            wind: false,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: String,
    pub dynamics: DroneParams,
    pub env: EnvConfig,
    pub scenario: ScenarioSpec,
    pub wind: WindConfig,
    pub reward: RewardConfig,
    pub td3: Td3Hyperparams,
    pub train: TrainSection,
    pub baseline: BaselineConfig,
    pub evaluation: EvaluationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: "runs".to_string(),
            dynamics: DroneParams::default(),
            env: EnvConfig::default(),
            scenario: ScenarioSpec::default(),
            wind: WindConfig::default(),
            reward: RewardConfig::default(),
            td3: Td3Hyperparams::default(),
            train: TrainSection::default(),
            baseline: BaselineConfig::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

trait Value: Sized {
    fn render(&self) -> String;
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
}

macro_rules! display_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn render(&self) -> String {
                self.to_string()
            }
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                s.parse::<$t>().map_err(|e| e.to_string())
            }
        }
    )*};
}
display_value!(u32, u64, usize, bool, String);

impl Value for f64 {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{s}` is not a finite number"))
        }
    }
}

impl Value for Option<f64> {
    fn render(&self) -> String {
        self.map_or("none".to_string(), |v| v.to_string())
    }
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("none") {
            Ok(None)
        } else {
            f64::parse_value(s).map(Some)
        }
    }
}

impl Value for ScenarioKind {
    fn render(&self) -> String {
        self.name().to_string()
    }
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        s.parse().map_err(|e: Error| e.to_string())
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

impl<T: Value> Value for Vec<T> {
    fn render(&self) -> String {
        self.iter().map(Value::render).collect::<Vec<_>>().join(",")
    }
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let v = split_list(s).map(T::parse_value).collect::<std::result::Result<Vec<_>, _>>()?;
        if v.is_empty() {
            Err("empty list".to_string())
        } else {
            Ok(v)
        }
    }
}

impl Value for [f64; 3] {
    fn render(&self) -> String {
        self.to_vec().render()
    }
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let v = Vec::<f64>::parse_value(s)?;
        v.try_into().map_err(|v: Vec<f64>| format!("expected 3 components, got {}", v.len()))
    }
}

impl Value for Vec3 {
    fn render(&self) -> String {
        [self.x, self.y, self.z].render()
    }
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        <[f64; 3]>::parse_value(s).map(Vec3::from)
    }
}

struct Field {
    key: &'static str,
    get: fn(&RunConfig) -> String,
    set: fn(&mut RunConfig, &str) -> std::result::Result<(), String>,
}

macro_rules! field {
    ($key:literal => $($path:ident).+ : $t:ty) => {
        Field {
            key: $key,
            get: |c: &RunConfig| Value::render(&c.$($path).+),
            set: |c: &mut RunConfig, s: &str| {
                c.$($path).+ = <$t as Value>::parse_value(s)?;
                Ok(())
            },
        }
    };
}

fn fields() -> Vec<Field> {
    vec![
        field!("seed" => seed: u64),
        field!("output_dir" => output_dir: String),
        field!("dynamics.mass" => dynamics.mass: f64),
        field!("dynamics.kp_pos" => dynamics.kp_pos: f64),
        field!("dynamics.tau_v" => dynamics.tau_v: f64),
        field!("dynamics.a_max" => dynamics.a_max: f64),
        field!("dynamics.gravity" => dynamics.gravity: f64),
        field!("env.episode_cap" => env.episode_cap: f64),
        field!("env.control_hz" => env.control_hz: u32),
        field!("env.physics_hz" => env.physics_hz: u32),
        field!("env.action_scale" => env.action_scale: f64),
        field!("env.out_of_bounds_radius" => env.out_of_bounds_radius: f64),
        field!("env.ground_z" => env.ground_z: f64),
        field!("env.edge_margin" => env.edge_margin: f64),
        field!("env.touchdown_lateral" => env.touchdown.lateral: f64),
        field!("env.touchdown_vertical" => env.touchdown.vertical: f64),
        field!("env.touchdown_speed" => env.touchdown.speed: f64),
        field!("env.spawn_radius" => env.spawn.radius: f64),
        field!("env.spawn_min_altitude" => env.spawn.min_altitude: f64),
        field!("env.spawn_max_altitude" => env.spawn.max_altitude: f64),
        field!("env.norm_attitude" => env.norm_bounds.attitude: f64),
        field!("env.norm_velocity" => env.norm_bounds.velocity: Vec3),
        field!("env.norm_angular_velocity" => env.norm_bounds.angular_velocity: f64),
        field!("env.norm_rel_position" => env.norm_bounds.rel_position: f64),
        field!("env.norm_rel_velocity" => env.norm_bounds.rel_velocity: Vec3),
        field!("scenario.direction_change_period" => scenario.direction_change_period: f64),
        field!("scenario.curve_radius" => scenario.curve_radius: f64),
        field!("scenario.vertical_amplitude" => scenario.vertical_amplitude: f64),
        field!("scenario.vertical_period" => scenario.vertical_period: f64),
        field!("scenario.speed" => scenario.speed: f64),
        field!("scenario.origin" => scenario.origin: Vec3),
        field!("scenario.half_extent" => scenario.half_extent: f64),
        field!("scenario.initial_heading" => scenario.initial_heading: Option<f64>),
        field!("wind.p_episode" => wind.p_episode: f64),
        field!("wind.p_step" => wind.p_step: f64),
        field!("wind.bound" => wind.bound: f64),
        field!("reward.gamma" => reward.gamma: f64),
        field!("reward.alpha" => reward.alpha: f64),
        field!("reward.zeta" => reward.zeta: f64),
        field!("reward.eta" => reward.eta: f64),
        field!("reward.q_max" => reward.q_max: f64),
        field!("reward.beta_below" => reward.beta_below: f64),
        field!("reward.beta_edge" => reward.beta_edge: f64),
        field!("reward.k_delta" => reward.k_delta: f64),
        field!("reward.far_radius" => reward.far_radius: f64),
        field!("reward.near_radius" => reward.near_radius: f64),
        field!("reward.repulsive_enabled" => reward.repulsive_enabled: bool),
        field!("td3.learning_rate" => td3.learning_rate: f64),
        field!("td3.batch_size" => td3.batch_size: usize),
        field!("td3.learning_starts" => td3.learning_starts: u64),
        field!("td3.buffer_size" => td3.buffer_size: usize),
        field!("td3.discount" => td3.discount: f64),
        field!("td3.polyak_tau" => td3.polyak_tau: f64),
        field!("td3.policy_delay" => td3.policy_delay: u64),
        field!("td3.target_noise_sigma" => td3.target_noise_sigma: f64),
        field!("td3.target_noise_clip" => td3.target_noise_clip: f64),
        field!("td3.exploration_noise_sigma" => td3.exploration_noise_sigma: f64),
        field!("td3.total_steps" => td3.total_steps: u64),
        field!("td3.hidden_layers" => td3.hidden_layers: Vec<usize>),
        field!("train.eval_interval" => train.eval_interval: u64),
        field!("train.eval_episodes" => train.eval_episodes: usize),
        field!("train.checkpoint_interval" => train.checkpoint_interval: u64),
        field!("train.curriculum" => train.curriculum: Vec<ScenarioKind>),
        field!("train.wind" => train.wind: bool),
        field!("baseline.kp" => baseline.kp: [f64; 3]),
        field!("baseline.ki" => baseline.ki: f64),
        field!("baseline.kd" => baseline.kd: f64),
        field!("baseline.integral_clamp" => baseline.integral_clamp: f64),
        field!("baseline.output_clamp" => baseline.output_clamp: f64),
        field!("baseline.lookahead" => baseline.lookahead: f64),
        field!("baseline.descent_rate" => baseline.descent_rate: f64),
        field!("baseline.align_radius" => baseline.align_radius: f64),
        field!("baseline.measurement_sigma" => baseline.measurement_sigma: f64),
        field!("baseline.process_noise" => baseline.ekf.process_noise: f64),
        field!("baseline.measurement_noise" => baseline.ekf.measurement_noise: f64),
        field!("baseline.initial_covariance" => baseline.ekf.initial_covariance: f64),
        field!("evaluation.scenarios" => evaluation.scenarios: Vec<ScenarioKind>),
        field!("evaluation.trials" => evaluation.trials: usize),
        field!("evaluation.wind" => evaluation.wind: bool),
        field!("evaluation.workers" => evaluation.workers: usize),
    ]
}

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn keys() -> Vec<&'static str> {
        fields().iter().map(|f| f.key).collect()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fields().iter().find(|f| f.key == key).map(|f| (f.get)(self))
    }

    /// Sets one key without validating the whole configuration.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = fields()
            .into_iter()
            .find(|f| f.key == key)
            .ok_or_else(|| config_error(key, "unknown key"))?;
        (f.set)(self, value.trim()).map_err(|reason| config_error(key, reason))
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(&format!("line {}", i + 1), format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(config_error(key, format!("repeated on line {}", i + 1)));
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for f in fields() {
            out.push_str(f.key);
            out.push_str(" = ");
            out.push_str(&(f.get)(self));
            out.push('\n');
        }
        out
    }

    pub fn drone_params(&self) -> DroneParams {
        DroneParams {
            physics_dt: 1.0 / self.env.physics_hz as f64,
            ..self.dynamics
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        let mut b = self.baseline;
        b.ekf.dt = 1.0 / self.env.control_hz as f64;
        b
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hyperparams: self.td3.clone(),
            seed: self.seed,
            eval_interval: self.train.eval_interval,
            eval_episodes: self.train.eval_episodes,
            checkpoint_interval: self.train.checkpoint_interval,
        }
    }

    pub fn train_wind(&self) -> WindConfig {
        if self.train.wind {
            self.wind
        } else {
            WindConfig::disabled()
        }
    }

    pub fn benchmark_setup(&self) -> BenchmarkSetup {
        BenchmarkSetup {
            env: self.env,
            dynamics: self.drone_params(),
            reward: self.reward,
            scenario: self.scenario,
            wind: self.wind,
            scenarios: self.evaluation.scenarios.clone(),
            trials: self.evaluation.trials,
            wind_enabled: self.evaluation.wind,
            seed: self.seed,
            workers: self.evaluation.workers,
        }
    }

    /// Checks every section; failures name the offending key.
    pub fn validate(&self) -> Result<()> {
        let relabel = |e: Error| match e {
            Error::InvalidParameter { name, reason } => Error::Config { key: name, reason },
            other => other,
        };
        self.drone_params().validate().map_err(relabel)?;
        self.env.validate().map_err(relabel)?;
        for kind in ScenarioKind::ALL {
            ScenarioSpec { kind, ..self.scenario }.validate().map_err(relabel)?;
        }
        self.wind.validate().map_err(relabel)?;
        self.reward.validate().map_err(relabel)?;
        self.train_config().validate().map_err(relabel)?;
        self.baseline_config().validate().map_err(relabel)?;
        if self.evaluation.trials == 0 {
            return Err(config_error("evaluation.trials", "must be >= 1"));
        }
        if self.evaluation.workers == 0 {
            return Err(config_error("evaluation.workers", "must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let mut c = RunConfig::default();
        c.seed = 42;
        c.reward.alpha = 1.0 / 3.0;
        c.td3.hidden_layers = vec![64, 32];
        c.evaluation.scenarios = vec![ScenarioKind::Lmpl, ScenarioKind::Ctl];
        c.scenario.initial_heading = Some(0.25);
        let back = RunConfig::parse(&c.dump()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.dump(), c.dump());
    }

    #[test]
    fn unknown_and_repeated_keys_rejected() {
        let err = RunConfig::parse("reward.alpah = 1").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "reward.alpah"));
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("seed").is_err());
    }

    #[test]
    fn invalid_values_name_the_key() {
        let err = RunConfig::parse("wind.p_episode = 1.5").unwrap_err();
        assert!(err.to_string().contains("wind.p_episode"), "{err}");
        let err = RunConfig::parse("td3.learning_rate = abc").unwrap_err();
        assert!(err.to_string().contains("td3.learning_rate"), "{err}");
        let err = RunConfig::parse("evaluation.scenarios = SPL,XYZ").unwrap_err();
        assert!(err.to_string().contains("valid names"), "{err}");
    }

    #[test]
    fn comments_and_blanks() {
        let c = RunConfig::parse("# header\n\nseed = 9  # trailing\n").unwrap();
        assert_eq!(c.seed, 9);
    }
}
