use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::checkpoint;
use super::learner::{Td3Hyperparams, Td3Learner};
use super::replay::{ReplayBuffer, Transition};
use crate::environment::trace::{Trace, TraceRow};
use crate::environment::{LandingEnv, Observation, Terminal, ACTION_DIM, OBS_DIM};
use crate::rng::{self, derive_seed, StreamRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hyperparams: Td3Hyperparams,
    pub seed: u64,
    /// Environment steps between deterministic evaluations; 0 disables.
    pub eval_interval: u64,
    pub eval_episodes: usize,
    /// Environment steps between checkpoints; 0 keeps only the final one.
    pub checkpoint_interval: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hyperparams: Td3Hyperparams::default(),
            seed: 0,
            eval_interval: 5_000,
            eval_episodes: 10,
            checkpoint_interval: 50_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyperparams.validate()?;
        if self.eval_interval > 0 && self.eval_episodes == 0 {
            return Err(Error::param("train.eval_episodes", "must be >= 1 when evaluation is enabled"));
        }
        Ok(())
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub step: u64,
    pub mean_reward: f64,
    pub mean_ep_len: f64,
    pub success_rate: f64,
}

pub const CURVE_HEADER: &str = "step,mean_reward,mean_ep_len,success_rate";

pub fn write_curve_csv<W: std::io::Write>(rows: &[CurveRow], mut w: W) -> std::io::Result<()> {
    use crate::fmt::sig9;
    writeln!(w, "{CURVE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.step,
            sig9(r.mean_reward),
            sig9(r.mean_ep_len),
            sig9(r.success_rate)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub returns: Vec<f64>,
    pub lengths: Vec<u64>,
    pub terminals: Vec<Terminal>,
}

impl EvalSummary {
    pub fn episodes(&self) -> usize {
        self.returns.len()
    }

    pub fn mean_return(&self) -> f64 {
        self.returns.iter().sum::<f64>() / self.episodes().max(1) as f64
    }

    pub fn mean_length(&self) -> f64 {
        self.lengths.iter().sum::<u64>() as f64 / self.episodes().max(1) as f64
    }

    pub fn success_rate(&self) -> f64 {
        let hits = self.terminals.iter().filter(|t| **t == Terminal::Touchdown).count();
        hits as f64 / self.episodes().max(1) as f64
    }
}

fn policy_action(learner: &Td3Learner<f32>, obs: &Observation) -> Result<[f64; ACTION_DIM]> {
    let a = learner.act(&obs.as_f32())?;
    Ok([a[0] as f64, a[1] as f64, a[2] as f64])
}

/// Runs noise-free episodes of the current actor, one per seed.
pub fn evaluate_policy(learner: &Td3Learner<f32>, env: &mut LandingEnv, seeds: &[u64]) -> Result<EvalSummary> {
    let mut summary = EvalSummary {
        returns: Vec::with_capacity(seeds.len()),
        lengths: Vec::with_capacity(seeds.len()),
        terminals: Vec::with_capacity(seeds.len()),
    };
    for &seed in seeds {
        let mut obs = env.reset(seed)?;
        let (mut ret, mut len) = (0.0, 0u64);
        loop {
            let out = env.step(policy_action(learner, &obs)?)?;
            ret += out.reward.total;
            len += 1;
            obs = out.observation;
            if out.terminal.is_terminal() {
                summary.terminals.push(out.terminal);
                break;
            }
        }
        summary.returns.push(ret);
        summary.lengths.push(len);
    }
    Ok(summary)
}

/// Receives learner snapshots during training.
pub trait CheckpointSink {
    fn save(&mut self, step: u64, learner: &Td3Learner<f32>) -> Result<()>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl CheckpointSink for NullSink {
    fn save(&mut self, _step: u64, _learner: &Td3Learner<f32>) -> Result<()> {
        Ok(())
    }
}

/// Writes `step_<n>.ckpt` files into a directory.
#[derive(Debug, Clone)]
pub struct DirectorySink {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl DirectorySink {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        Self {
            dir: dir.as_ref().to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn path_for(&self, step: u64) -> PathBuf {
        self.dir.join(format!("step_{step:09}.ckpt"))
    }
}

impl CheckpointSink for DirectorySink {
    fn save(&mut self, step: u64, learner: &Td3Learner<f32>) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(step);
        checkpoint::save_file(learner, &path)?;
        self.written.push(path);
        Ok(())
    }
}

struct Running {
    obs: Observation,
    trace: Trace,
}

/// Off-policy training loop. The learner and replay buffer survive
/// [`Trainer::set_env`], so a curriculum can continue on a new scenario.
pub struct Trainer {
    pub learner: Td3Learner<f32>,
    pub buffer: ReplayBuffer,
    pub config: TrainConfig,
    env: LandingEnv,
    rng: StreamRng,
    steps: u64,
    episodes: u64,
    running: Option<Running>,
    curve: Vec<CurveRow>,
}

impl Trainer {
    pub fn new(env: LandingEnv, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let learner = Td3Learner::new(config.hyperparams.clone(), OBS_DIM, ACTION_DIM, config.seed)?;
        Ok(Self {
            buffer: ReplayBuffer::new(config.hyperparams.buffer_size)?,
            rng: rng::stream(config.seed, rng::TRAIN),
            learner,
            config,
            env,
            steps: 0,
            episodes: 0,
            running: None,
            curve: Vec::new(),
        })
    }

    /// Swaps the environment; the episode in flight is dropped.
    pub fn set_env(&mut self, env: LandingEnv) {
        self.env = env;
        self.running = None;
    }

    pub fn env(&self) -> &LandingEnv {
        &self.env
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn curve(&self) -> &[CurveRow] {
        &self.curve
    }

    pub fn eval_seeds(&self, count: usize) -> Vec<u64> {
        (0..count as u64)
            .map(|i| derive_seed(self.config.seed, rng::EVAL, i))
            .collect()
    }

    pub fn evaluate(&self, episodes: usize) -> Result<EvalSummary> {
        let mut env = self.env.clone();
        evaluate_policy(&self.learner, &mut env, &self.eval_seeds(episodes))
    }

    fn explore_action(&mut self, obs: &Observation) -> Result<[f64; ACTION_DIM]> {
        let hp = &self.learner.hp;
        if self.steps < hp.learning_starts {
            return Ok(std::array::from_fn(|_| self.rng.random_range(-1.0..=1.0)));
        }
        let sigma = hp.exploration_noise_sigma;
        let mut a = policy_action(&self.learner, obs)?;
        if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::param("td3.exploration_noise_sigma", e.to_string()))?;
            for c in a.iter_mut() {
                *c = (*c + noise.sample(&mut self.rng)).clamp(-1.0, 1.0);
            }
        }
        // f32 round trip keeps stored and executed actions identical
        Ok(a.map(|c| c as f32 as f64))
    }

    /// Runs `steps` more environment steps, updating once per step after
    /// `learning_starts`, evaluating and checkpointing on cadence.
    pub fn run(&mut self, steps: u64, sink: &mut dyn CheckpointSink) -> Result<&[CurveRow]> {
        let end = self.steps + steps;
        while self.steps < end {
            if self.running.is_none() {
                let seed = derive_seed(self.config.seed, "train-episode", self.episodes);
                self.episodes += 1;
                let obs = self.env.reset(seed)?;
                self.running = Some(Running {
                    obs,
                    trace: Trace::default(),
                });
            }
            let obs = self.running.as_ref().map(|r| r.obs).expect("episode running");
            let action = self.explore_action(&obs)?;
            let out = match self.env.step(action) {
                Ok(out) => out,
                Err(e) => {
                    let run = self.running.take().expect("episode running");
                    return Err(Error::EpisodeAborted {
                        step: self.steps,
                        source: Box::new(e),
                        trace: Box::new(run.trace),
                    });
                }
            };
            self.buffer.push(Transition {
                obs: obs.as_f32(),
                action: action.map(|c| c as f32),
                reward: out.reward.total as f32,
                next_obs: out.observation.as_f32(),
                terminal: out.terminal.ends_task(),
            });
            let run = self.running.as_mut().expect("episode running");
            run.trace.rows.push(TraceRow::from_outcome(&out, None));
            run.obs = out.observation;
            if out.terminal.is_terminal() {
                self.running = None;
            }
            self.steps += 1;

            let hp = &self.learner.hp;
            if self.steps > hp.learning_starts && self.buffer.len() >= hp.batch_size {
                let batch = self.buffer.sample(hp.batch_size, &mut self.rng)?;
                self.learner.update(&batch)?;
            }

            if self.config.eval_interval > 0 && self.steps % self.config.eval_interval == 0 {
                let s = self.evaluate(self.config.eval_episodes)?;
                self.curve.push(CurveRow {
                    step: self.steps,
                    mean_reward: s.mean_return(),
                    mean_ep_len: s.mean_length(),
                    success_rate: s.success_rate(),
                });
            }
            if self.config.checkpoint_interval > 0 && self.steps % self.config.checkpoint_interval == 0 {
                sink.save(self.steps, &self.learner)?;
            }
        }
        if self.config.checkpoint_interval == 0 || self.steps % self.config.checkpoint_interval != 0 {
            sink.save(self.steps, &self.learner)?;
        }
        if !self.learner.all_finite() {
            return Err(Error::Diverged(format!(
                "non-finite network parameters after {} steps",
                self.steps
            )));
        }
        Ok(&self.curve)
    }
}
