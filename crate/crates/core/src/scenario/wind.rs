//! Two-level Bernoulli wind: an episode is windy with probability
//! `p_episode`; inside a windy episode each control step carries a force with
//! probability `p_step`, each world-frame component uniform in ±`bound` N.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindConfig {
    pub p_episode: f64,
    pub p_step: f64,
    /// Per-component force bound, N.
    pub bound: f64,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            p_episode: 0.2,
            p_step: 0.2,
            bound: 0.005,
        }
    }
}

impl WindConfig {
    pub fn disabled() -> Self {
        Self {
            p_episode: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("wind.p_episode", self.p_episode), ("wind.p_step", self.p_step)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, format!("probability must lie in [0, 1], got {p}")));
            }
        }
        if !(self.bound.is_finite() && self.bound >= 0.0) {
            return Err(Error::param("wind.bound", format!("must be >= 0, got {}", self.bound)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindState {
    pub episode_windy: bool,
    /// Force applied during the current control step, N.
    pub force: Vec3,
    pub p_episode: f64,
    pub p_step: f64,
    pub component_bound: f64,
}

impl WindState {
    /// Episode-level decision from a uniform draw `u` in [0, 1).
    pub fn from_episode_draw(u: f64, cfg: &WindConfig) -> Self {
        Self {
            episode_windy: u < cfg.p_episode,
            force: Vec3::zeros(),
            p_episode: cfg.p_episode,
            p_step: cfg.p_step,
            component_bound: cfg.bound,
        }
    }

    /// Whether a step draw `u` activates the force in a windy episode.
    pub fn step_active(&self, u: f64) -> bool {
        self.episode_windy && u < self.p_step
    }
}

pub fn init_wind<R: Rng + ?Sized>(rng: &mut R, cfg: &WindConfig) -> Result<WindState> {
    cfg.validate()?;
    let u: f64 = rng.random();
    Ok(WindState::from_episode_draw(u, cfg))
}

pub fn sample_wind_step<R: Rng + ?Sized>(state: &WindState, rng: &mut R) -> WindState {
    let mut next = WindState {
        force: Vec3::zeros(),
        ..*state
    };
    if !state.episode_windy {
        return next;
    }
    let u: f64 = rng.random();
    if state.step_active(u) && state.component_bound > 0.0 {
        let b = state.component_bound;
        next.force = Vec3::new(
            rng.random_range(-b..=b),
            rng.random_range(-b..=b),
            rng.random_range(-b..=b),
        );
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{indexed_stream, stream};

    #[test]
    fn episode_branch_by_draw() {
        let cfg = WindConfig::default();
        assert!(!WindState::from_episode_draw(0.25, &cfg).episode_windy);
        assert!(WindState::from_episode_draw(0.15, &cfg).episode_windy);
        // threshold is strict
        assert!(!WindState::from_episode_draw(0.2, &cfg).episode_windy);
    }

    #[test]
    fn calm_episode_stays_calm() {
        let cfg = WindConfig::default();
        let calm = WindState::from_episode_draw(0.25, &cfg);
        let mut rng = stream(1, "w");
        let mut s = calm;
        for _ in 0..1000 {
            s = sample_wind_step(&s, &mut rng);
            assert_eq!(s.force, Vec3::zeros());
        }
    }

    #[test]
    fn zero_probability_never_windy() {
        let cfg = WindConfig::disabled();
        for seed in 0..2000 {
            let w = init_wind(&mut indexed_stream(0, "w", seed), &cfg).unwrap();
            assert!(!w.episode_windy);
        }
    }

    #[test]
    fn active_forces_bounded() {
        let cfg = WindConfig::default();
        let mut s = WindState::from_episode_draw(0.1, &cfg);
        let mut rng = stream(3, "w");
        let mut active = 0;
        for _ in 0..20_000 {
            s = sample_wind_step(&s, &mut rng);
            assert!(s.force.amax() <= 0.005);
            active += (s.force != Vec3::zeros()) as usize;
        }
        assert!(active > 3000 && active < 5000);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut rng = stream(0, "w");
        let bad = WindConfig {
            p_episode: 1.5,
            ..WindConfig::default()
        };
        assert!(init_wind(&mut rng, &bad).is_err());
        let bad = WindConfig {
            bound: -1.0,
            ..WindConfig::default()
        };
        assert!(init_wind(&mut rng, &bad).is_err());
    }
}
