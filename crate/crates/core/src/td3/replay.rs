use rand::Rng;

use crate::environment::{ACTION_DIM, OBS_DIM};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: [f32; OBS_DIM],
    pub action: [f32; ACTION_DIM],
    pub reward: f32,
    pub next_obs: [f32; OBS_DIM],
    /// True when the transition ends the task; such transitions never bootstrap.
    /// Time-limit cuts are stored as non-terminal.
    pub terminal: bool,
}

/// Column-major minibatch, rows aligned across fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub size: usize,
    pub obs: Vec<f32>,
    pub actions: Vec<f32>,
    pub rewards: Vec<f32>,
    pub next_obs: Vec<f32>,
    pub terminals: Vec<f32>,
}

impl Batch {
    pub fn from_transitions(ts: &[Transition]) -> Self {
        let mut b = Batch {
            size: ts.len(),
            ..Batch::default()
        };
        for t in ts {
            b.push(t);
        }
        b
    }

    fn push(&mut self, t: &Transition) {
        self.obs.extend_from_slice(&t.obs);
        self.actions.extend_from_slice(&t.action);
        self.rewards.push(t.reward);
        self.next_obs.extend_from_slice(&t.next_obs);
        self.terminals.push(if t.terminal { 1.0 } else { 0.0 });
    }
}

/// Fixed-capacity ring of transitions; the oldest entries are overwritten.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    cursor: usize,
    items: Vec<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::param("td3.buffer_size", "capacity must be >= 1"));
        }
        Ok(Self {
            capacity,
            cursor: 0,
            items: Vec::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Stored transitions from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// Uniform sample with replacement from the filled region.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Batch> {
        if self.items.is_empty() || batch_size == 0 {
            return Err(Error::Contract(format!(
                "cannot sample {batch_size} from a buffer of {}",
                self.items.len()
            )));
        }
        let mut b = Batch {
            size: batch_size,
            obs: Vec::with_capacity(batch_size * OBS_DIM),
            actions: Vec::with_capacity(batch_size * ACTION_DIM),
            rewards: Vec::with_capacity(batch_size),
            next_obs: Vec::with_capacity(batch_size * OBS_DIM),
            terminals: Vec::with_capacity(batch_size),
        };
        for _ in 0..batch_size {
            let idx = rng.random_range(0..self.items.len());
            b.push(&self.items[idx]);
        }
        Ok(b)
    }
}
