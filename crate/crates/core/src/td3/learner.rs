use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::linalg::Scalar;
use super::mlp::{Activation, Mlp};
use super::replay::Batch;
use super::HIDDEN_LAYERS;
use crate::rng::{derive_seed, StreamRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Hyperparams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub learning_starts: u64,
    pub buffer_size: usize,
    pub discount: f64,
    pub polyak_tau: f64,
    pub policy_delay: u64,
    pub target_noise_sigma: f64,
    pub target_noise_clip: f64,
    pub exploration_noise_sigma: f64,
    pub total_steps: u64,
    pub hidden_layers: Vec<usize>,
}

impl Default for Td3Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 100,
            learning_starts: 100,
            buffer_size: 1_000_000,
            discount: 0.99,
            polyak_tau: 0.005,
            policy_delay: 2,
            target_noise_sigma: 0.2,
            target_noise_clip: 0.5,
            exploration_noise_sigma: 0.1,
            total_steps: 300_000,
            hidden_layers: HIDDEN_LAYERS.to_vec(),
        }
    }
}

impl Td3Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("td3.learning_rate", self.learning_rate),
            ("td3.polyak_tau", self.polyak_tau),
            ("td3.discount", self.discount),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if self.discount > 1.0 || self.polyak_tau > 1.0 {
            return Err(Error::param("td3.discount", "discount and polyak_tau must be <= 1"));
        }
        for (name, v) in [
            ("td3.target_noise_sigma", self.target_noise_sigma),
            ("td3.target_noise_clip", self.target_noise_clip),
            ("td3.exploration_noise_sigma", self.exploration_noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        if self.policy_delay < 1 {
            return Err(Error::param("td3.policy_delay", "must be >= 1"));
        }
        if self.batch_size == 0 || self.buffer_size == 0 {
            return Err(Error::param("td3.batch_size", "batch and buffer sizes must be >= 1"));
        }
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return Err(Error::param("td3.hidden_layers", "need at least one positive width"));
        }
        Ok(())
    }

    /// Discount 0 is allowed for bandit-style checks.
    pub fn validate_allowing_zero_discount(&self) -> Result<()> {
        if self.discount == 0.0 {
            Self {
                discount: 0.5,
                ..self.clone()
            }
            .validate()
        } else {
            self.validate()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateDiagnostics {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: Option<f64>,
    pub mean_q1: f64,
    pub mean_target: f64,
}

/// TD target `r + discount * (1 - terminal) * min(q1, q2)`, row by row.
pub fn td3_targets<T: Scalar>(rewards: &[T], terminals: &[T], q1: &[T], q2: &[T], discount: T) -> Vec<T> {
    rewards
        .iter()
        .zip(terminals)
        .zip(q1.iter().zip(q2))
        .map(|((&r, &done), (&a, &b))| r + discount * (T::one() - done) * a.min(b))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Td3Learner<T> {
    pub actor: Mlp<T>,
    pub actor_target: Mlp<T>,
    pub critic1: Mlp<T>,
    pub critic2: Mlp<T>,
    pub critic1_target: Mlp<T>,
    pub critic2_target: Mlp<T>,
    pub actor_opt: Adam<T>,
    pub critic1_opt: Adam<T>,
    pub critic2_opt: Adam<T>,
    pub hp: Td3Hyperparams,
    pub updates: u64,
    pub noise_rng: StreamRng,
}

fn convert<T: Scalar>(xs: &[f32]) -> Vec<T> {
    xs.iter().map(|&x| T::from_f64(x as f64)).collect()
}

fn concat_rows<T: Scalar>(a: &[T], a_width: usize, b: &[T], b_width: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    for (ra, rb) in a.chunks_exact(a_width).zip(b.chunks_exact(b_width)) {
        out.extend_from_slice(ra);
        out.extend_from_slice(rb);
    }
    out
}

fn mean<T: Scalar>(xs: &[T]) -> f64 {
    xs.iter().map(|x| x.as_f64()).sum::<f64>() / xs.len().max(1) as f64
}

impl<T: Scalar> Td3Learner<T> {
    pub fn new(hp: Td3Hyperparams, obs_dim: usize, action_dim: usize, seed: u64) -> Result<Self> {
        hp.validate_allowing_zero_discount()?;
        let mut init = StreamRng::seed_from_u64(derive_seed(seed, "init", 0));
        let actor_dims: Vec<usize> = std::iter::once(obs_dim)
            .chain(hp.hidden_layers.iter().copied())
            .chain(std::iter::once(action_dim))
            .collect();
        let critic_dims: Vec<usize> = std::iter::once(obs_dim + action_dim)
            .chain(hp.hidden_layers.iter().copied())
            .chain(std::iter::once(1))
            .collect();
        let actor = Mlp::new(&actor_dims, Activation::Relu, Activation::Tanh, &mut init)?;
        let critic1 = Mlp::new(&critic_dims, Activation::Relu, Activation::Identity, &mut init)?;
        let critic2 = Mlp::new(&critic_dims, Activation::Relu, Activation::Identity, &mut init)?;
        Ok(Self {
            actor_opt: Adam::new(hp.learning_rate, &actor),
            critic1_opt: Adam::new(hp.learning_rate, &critic1),
            critic2_opt: Adam::new(hp.learning_rate, &critic2),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            hp,
            updates: 0,
            noise_rng: StreamRng::seed_from_u64(derive_seed(seed, "target-noise", 0)),
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    /// Deterministic policy action.
    pub fn act(&self, obs: &[T]) -> Result<Vec<T>> {
        self.actor.forward(obs)
    }

    /// Critic estimates `(q1, q2)` for row-major observation/action batches.
    pub fn q_values(&self, obs: &[T], actions: &[T], batch: usize) -> Result<(Vec<T>, Vec<T>)> {
        let input = concat_rows(obs, self.obs_dim(), actions, self.action_dim());
        Ok((
            self.critic1.predict_batch(&input, batch)?,
            self.critic2.predict_batch(&input, batch)?,
        ))
    }

    /// One TD3 step: critic regression, and every `policy_delay` updates an
    /// actor step followed by Polyak averaging of all target networks.
    pub fn update(&mut self, batch: &Batch) -> Result<UpdateDiagnostics> {
        let n = batch.size;
        let (obs_dim, act_dim) = (self.obs_dim(), self.action_dim());
        if n == 0 || batch.obs.len() != n * obs_dim || batch.actions.len() != n * act_dim {
            return Err(Error::Dimension {
                expected: n * obs_dim,
                got: batch.obs.len(),
            });
        }
        let obs: Vec<T> = convert(&batch.obs);
        let actions: Vec<T> = convert(&batch.actions);
        let next_obs: Vec<T> = convert(&batch.next_obs);
        let rewards: Vec<T> = convert(&batch.rewards);
        let terminals: Vec<T> = convert(&batch.terminals);

        // smoothed target action
        let mut next_actions = self.actor_target.predict_batch(&next_obs, n)?;
        if self.hp.target_noise_sigma > 0.0 {
            let noise = Normal::new(0.0, self.hp.target_noise_sigma)
                .map_err(|e| Error::param("td3.target_noise_sigma", e.to_string()))?;
            let clip = self.hp.target_noise_clip;
            for a in next_actions.iter_mut() {
                let eps = noise.sample(&mut self.noise_rng).clamp(-clip, clip);
                *a = *a + T::from_f64(eps);
            }
        }
        next_actions.iter_mut().for_each(|a| *a = a.max(-T::one()).min(T::one()));

        let next_input = concat_rows(&next_obs, obs_dim, &next_actions, act_dim);
        let q1_next = self.critic1_target.predict_batch(&next_input, n)?;
        let q2_next = self.critic2_target.predict_batch(&next_input, n)?;
        let targets = td3_targets(&rewards, &terminals, &q1_next, &q2_next, T::from_f64(self.hp.discount));

        let input = concat_rows(&obs, obs_dim, &actions, act_dim);
        let scale = T::from_f64(2.0 / n as f64);
        let mut losses = [0.0; 2];
        let mut mean_q1 = 0.0;
        for (idx, (critic, opt)) in [
            (&mut self.critic1, &mut self.critic1_opt),
            (&mut self.critic2, &mut self.critic2_opt),
        ]
        .into_iter()
        .enumerate()
        {
            let tape = critic.forward_batch(&input, n)?;
            let q = tape.output();
            if idx == 0 {
                mean_q1 = mean(q);
            }
            let residual: Vec<T> = q.iter().zip(&targets).map(|(&q, &y)| q - y).collect();
            losses[idx] = residual.iter().map(|r| r.as_f64().powi(2)).sum::<f64>() / n as f64;
            let upstream: Vec<T> = residual.iter().map(|&r| r * scale).collect();
            let grads = critic.backward(&tape, &upstream)?;
            opt.apply(critic, &grads)?;
        }
        if !(losses[0].is_finite() && losses[1].is_finite()) {
            return Err(Error::Diverged(format!(
                "critic losses {:?} at update {}; mean target {}, mean reward {}, mean q1 {}",
                losses,
                self.updates + 1,
                mean(&targets),
                mean(&rewards),
                mean_q1
            )));
        }

        self.updates += 1;
        let mut actor_loss = None;
        if self.updates % self.hp.policy_delay == 0 {
            let tape_a = self.actor.forward_batch(&obs, n)?;
            let critic_in = concat_rows(&obs, obs_dim, tape_a.output(), act_dim);
            let tape_q = self.critic1.forward_batch(&critic_in, n)?;
            let loss = -mean(tape_q.output());
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "actor loss {loss} at update {}",
                    self.updates
                )));
            }
            let upstream = vec![T::from_f64(-1.0 / n as f64); n];
            let d_input = self.critic1.input_gradient(&tape_q, &upstream)?;
            let d_action: Vec<T> = d_input
                .chunks_exact(obs_dim + act_dim)
                .flat_map(|row| row[obs_dim..].iter().copied())
                .collect();
            let grads = self.actor.backward(&tape_a, &d_action)?;
            self.actor_opt.apply(&mut self.actor, &grads)?;
            actor_loss = Some(loss);
            self.soft_update_targets();
        }

        Ok(UpdateDiagnostics {
            critic1_loss: losses[0],
            critic2_loss: losses[1],
            actor_loss,
            mean_q1,
            mean_target: mean(&targets),
        })
    }

    pub fn soft_update_targets(&mut self) {
        let tau = T::from_f64(self.hp.polyak_tau);
        self.actor_target.soft_update_from(&self.actor, tau);
        self.critic1_target.soft_update_from(&self.critic1, tau);
        self.critic2_target.soft_update_from(&self.critic2, tau);
    }

    pub fn all_finite(&self) -> bool {
        [
            &self.actor,
            &self.actor_target,
            &self.critic1,
            &self.critic2,
            &self.critic1_target,
            &self.critic2_target,
        ]
        .iter()
        .all(|n| n.all_finite())
    }
}
