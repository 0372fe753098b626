use serde::{Deserialize, Serialize};

use super::report::BenchmarkReport;
use super::stats::velocity_correlation;
use crate::baseline::{BaselineConfig, EkfPidController};
use crate::dynamics::DroneParams;
use crate::environment::trace::{Trace, TraceRow};
use crate::environment::{EnvConfig, LandingEnv, Terminal};
use crate::reward::RewardConfig;
use crate::rng::derive_seed;
use crate::scenario::{ScenarioKind, ScenarioSpec, WindConfig};
use crate::td3::Mlp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControllerKind {
    Agent,
    EkfPid,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Agent => "agent",
            ControllerKind::EkfPid => "ekf-pid",
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A controller under test.
#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    Agent(&'a Mlp<f32>),
    Baseline(BaselineConfig),
}

impl Controller<'_> {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Agent(_) => ControllerKind::Agent,
            Controller::Baseline(_) => ControllerKind::EkfPid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSetup {
    pub env: EnvConfig,
    pub dynamics: DroneParams,
    pub reward: RewardConfig,
    /// Trajectory parameters shared by all scenarios; the kind is set per trial.
    pub scenario: ScenarioSpec,
    /// Wind bounds for wind-enabled runs. Such runs force every episode windy.
    pub wind: WindConfig,
    pub scenarios: Vec<ScenarioKind>,
    pub trials: usize,
    pub wind_enabled: bool,
    pub seed: u64,
    pub workers: usize,
}

impl BenchmarkSetup {
    pub fn new(scenarios: Vec<ScenarioKind>, trials: usize, seed: u64) -> Self {
        Self {
            env: EnvConfig::default(),
            dynamics: DroneParams::default(),
            reward: RewardConfig::default(),
            scenario: ScenarioSpec::new(ScenarioKind::Spl, 0),
            wind: WindConfig::default(),
            scenarios,
            trials,
            wind_enabled: false,
            seed,
            workers: 1,
        }
    }

    pub fn effective_wind(&self) -> WindConfig {
        if self.wind_enabled {
            WindConfig {
                p_episode: 1.0,
                ..self.wind
            }
        } else {
            WindConfig::disabled()
        }
    }

    pub fn env_for(&self, kind: ScenarioKind) -> Result<LandingEnv> {
        LandingEnv::new(
            self.env,
            self.dynamics,
            self.reward,
            self.effective_wind(),
            ScenarioSpec {
                kind,
                ..self.scenario
            },
        )
    }

    /// Episode seed for a trial; independent of the controller so runs pair up.
    pub fn trial_seed(&self, kind: ScenarioKind, trial: usize) -> u64 {
        derive_seed(self.seed, &format!("trial/{}", kind.name()), trial as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scenario: ScenarioKind,
    pub controller: ControllerKind,
    pub trial: usize,
    pub seed: u64,
    pub terminal: Terminal,
    /// Horizontal distance from pad center at touchdown.
    pub touchdown_lateral_error: Option<f64>,
    pub duration: f64,
    pub velocity_correlation: Option<f64>,
    pub wind_enabled: bool,
    /// Set when the trial aborted on an error; the trial counts as a failure.
    pub failure: Option<String>,
}

impl TrialResult {
    pub fn success(&self) -> bool {
        self.terminal == Terminal::Touchdown
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub report: BenchmarkReport,
    pub trials: Vec<TrialResult>,
    pub traces: Vec<Trace>,
}

enum Policy<'a> {
    Agent(&'a Mlp<f32>),
    Baseline(EkfPidController),
}

/// Runs one episode; errors mid-episode become a failed trial that keeps its partial trace.
pub fn run_trial(
    setup: &BenchmarkSetup,
    controller: Controller<'_>,
    kind: ScenarioKind,
    trial: usize,
) -> Result<(TrialResult, Trace)> {
    let seed = setup.trial_seed(kind, trial);
    let mut env = setup.env_for(kind)?;
    let mut result = TrialResult {
        scenario: kind,
        controller: controller.kind(),
        trial,
        seed,
        terminal: Terminal::None,
        touchdown_lateral_error: None,
        duration: 0.0,
        velocity_correlation: None,
        wind_enabled: setup.wind_enabled,
        failure: None,
    };
    let mut trace = Trace::default();
    if let Err(e) = drive(&mut env, controller, seed, &mut result, &mut trace) {
        result.failure = Some(e.to_string());
        result.terminal = Terminal::None;
        result.touchdown_lateral_error = None;
    }
    let drone_speeds: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| nalgebra::Vector3::from(r.drone_velocity()).norm())
        .collect();
    let pad_speeds: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| nalgebra::Vector3::from(r.pad_velocity()).norm())
        .collect();
    if drone_speeds.len() >= 2 {
        result.velocity_correlation = velocity_correlation(&drone_speeds, &pad_speeds)?;
    }
    Ok((result, trace))
}

fn drive(
    env: &mut LandingEnv,
    controller: Controller<'_>,
    seed: u64,
    result: &mut TrialResult,
    trace: &mut Trace,
) -> Result<()> {
    let mut obs = env.reset(seed)?;
    let pad0 = env.pad().expect("reset sets the pad").position;
    let mut policy = match controller {
        Controller::Agent(actor) => Policy::Agent(actor),
        Controller::Baseline(cfg) => {
            Policy::Baseline(EkfPidController::new(cfg, &pad0, env.config.action_scale, seed)?)
        }
    };
    loop {
        let action = match &mut policy {
            Policy::Agent(actor) => {
                let a = actor.forward(&obs.as_f32())?;
                [a[0] as f64, a[1] as f64, a[2] as f64]
            }
            Policy::Baseline(ctl) => {
                let drone = *env.drone().expect("episode running");
                let pad = env.pad().expect("episode running").position;
                ctl.command(&drone, &pad)?
            }
        };
        let out = env.step(action)?;
        let estimate = match &policy {
            Policy::Baseline(ctl) => Some(ctl.estimate()),
            Policy::Agent(_) => None,
        };
        trace.rows.push(TraceRow::from_outcome(&out, estimate));
        result.duration = out.info.time;
        result.terminal = out.terminal;
        obs = out.observation;
        if out.terminal.is_terminal() {
            if out.terminal == Terminal::Touchdown {
                let d = out.info.drone.position - out.info.pad.position;
                result.touchdown_lateral_error = Some(d.xy().norm());
            }
            return Ok(());
        }
    }
}

/// Runs every (scenario, trial) pair, in parallel up to `setup.workers`,
/// folding results in scenario-then-trial order.
pub fn run_benchmark(setup: &BenchmarkSetup, controller: Controller<'_>) -> Result<BenchmarkRun> {
    if setup.trials == 0 {
        return Err(Error::param("evaluation.trials", "must be >= 1"));
    }
    if setup.scenarios.is_empty() {
        return Err(Error::param("evaluation.scenarios", "no scenarios selected"));
    }
    let jobs: Vec<(ScenarioKind, usize)> = setup
        .scenarios
        .iter()
        .flat_map(|&k| (0..setup.trials).map(move |t| (k, t)))
        .collect();
    let workers = setup.workers.clamp(1, jobs.len());
    let mut slots: Vec<Option<Result<(TrialResult, Trace)>>> = (0..jobs.len()).map(|_| None).collect();
    if workers == 1 {
        for (slot, &(k, t)) in slots.iter_mut().zip(&jobs) {
            *slot = Some(run_trial(setup, controller, k, t));
        }
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let jobs = &jobs;
                    scope.spawn(move || {
                        (w..jobs.len())
                            .step_by(workers)
                            .map(|i| (i, run_trial(setup, controller, jobs[i].0, jobs[i].1)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("benchmark worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
    }
    let mut trials = Vec::with_capacity(jobs.len());
    let mut traces = Vec::with_capacity(jobs.len());
    for slot in slots {
        let (r, t) = slot.expect("every job ran")?;
        trials.push(r);
        traces.push(t);
    }
    let report = BenchmarkReport::from_trials(setup, &trials);
    Ok(BenchmarkRun { report, trials, traces })
}
