//! Piecewise tanh potential-field reward.
//!
//! Three bands on the drone-to-pad distance `d`:
//! - far (`d >= far_radius`): constant `tanh(gamma)`
//! - mid (`near_radius <= d < far_radius`): `tanh(alpha * (prev_distance - d))`,
//!   i.e. the step's progress toward the pad
//! - near (`d < near_radius`): `tanh(-U - beta + delta)` with the attractive
//!   (plus optional repulsive) potential `U`, the safety penalty `beta`, and
//!   the relative-speed term `delta`

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::fmt::sig9;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Far-field value before tanh; negative.
    pub gamma: f64,
    /// Progress scale, 1/m.
    pub alpha: f64,
    /// Attractive strength, 1/m^2.
    pub zeta: f64,
    /// Repulsive strength.
    pub eta: f64,
    /// Repulsive cutoff distance, m.
    pub q_max: f64,
    pub beta_below: f64,
    pub beta_edge: f64,
    /// Speed penalty scale, s/m.
    pub k_delta: f64,
    pub far_radius: f64,
    pub near_radius: f64,
    pub repulsive_enabled: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            gamma: -1.0,
            alpha: 5.0,
            zeta: 0.5,
            eta: 0.1,
            q_max: 0.4,
            beta_below: 0.5,
            beta_edge: 0.25,
            k_delta: 0.3,
            far_radius: 2.0,
            near_radius: 0.1,
            repulsive_enabled: false,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_radius > 0.0 && self.far_radius > self.near_radius) {
            return Err(Error::param(
                "reward.far_radius",
                format!(
                    "need far_radius > near_radius > 0, got {} / {}",
                    self.far_radius, self.near_radius
                ),
            ));
        }
        if !(self.q_max > 0.0) {
            return Err(Error::param("reward.q_max", "must be > 0"));
        }
        let all = [
            self.gamma,
            self.alpha,
            self.zeta,
            self.eta,
            self.beta_below,
            self.beta_edge,
            self.k_delta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("reward", "constants must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardCase {
    Far,
    Mid,
    Near,
}

impl fmt::Display for RewardCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Far => "Far",
            Self::Mid => "Mid",
            Self::Near => "Near",
        })
    }
}

/// Kinematic context for one reward evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInput {
    /// Drone minus pad position.
    pub rel_pos: Vec3,
    /// Drone minus pad velocity; positive z is climbing away from the pad.
    pub rel_vel: Vec3,
    /// Distance to the pad at the previous control step.
    pub prev_distance: f64,
    /// Distance to the nearest obstacle, if any.
    pub obstacle_distance: Option<f64>,
    pub below_pad: bool,
    pub near_edge: bool,
}

/// Reward plus the terms it was assembled from. Terms of inactive bands are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub total: f64,
    pub case: RewardCase,
    pub u_attractive: f64,
    pub u_repulsive: f64,
    pub beta_term: f64,
    pub delta_term: f64,
    /// `prev_distance - d`, m.
    pub progress: f64,
}

/// Repulsive potential at obstacle distance `sigma`.
pub fn repulsive_potential(sigma: f64, cfg: &RewardConfig) -> Result<f64> {
    if !cfg.repulsive_enabled {
        return Ok(0.0);
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Contract(format!("obstacle distance must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Err(Error::Contact(sigma));
    }
    if sigma < cfg.q_max {
        let k = 1.0 / sigma - 1.0 / cfg.q_max;
        Ok(0.5 * cfg.eta * k * k)
    } else {
        Ok(0.0)
    }
}

pub fn attractive_potential(distance: f64, cfg: &RewardConfig) -> f64 {
    0.5 * cfg.zeta * distance * distance
}

/// Largest tanh argument magnitude whose f64 result is still strictly inside (-1, 1).
pub const TANH_ARG_LIMIT: f64 = 18.0;

fn open_tanh(x: f64) -> f64 {
    x.clamp(-TANH_ARG_LIMIT, TANH_ARG_LIMIT).tanh()
}

pub fn compute_reward(input: &RewardInput, cfg: &RewardConfig) -> Result<RewardBreakdown> {
    let finite = input.rel_pos.iter().chain(input.rel_vel.iter()).all(|c| c.is_finite());
    if !finite || !input.prev_distance.is_finite() {
        return Err(Error::Contract("reward inputs must be finite".into()));
    }
    if input.prev_distance < 0.0 {
        return Err(Error::Contract(format!(
            "prev_distance must be >= 0, got {}",
            input.prev_distance
        )));
    }

    let d = input.rel_pos.norm();
    let progress = input.prev_distance - d;
    let mut out = RewardBreakdown {
        total: 0.0,
        case: RewardCase::Mid,
        u_attractive: 0.0,
        u_repulsive: 0.0,
        beta_term: 0.0,
        delta_term: 0.0,
        progress,
    };

    if d >= cfg.far_radius {
        out.case = RewardCase::Far;
        out.total = cfg.gamma.tanh();
    } else if d >= cfg.near_radius {
        out.total = open_tanh(cfg.alpha * progress);
    } else {
        out.case = RewardCase::Near;
        out.u_attractive = attractive_potential(d, cfg);
        out.u_repulsive = match input.obstacle_distance {
            Some(sigma) => repulsive_potential(sigma, cfg)?,
            None => 0.0,
        };
        out.beta_term = cfg.beta_below * f64::from(u8::from(input.below_pad))
            + cfg.beta_edge * f64::from(u8::from(input.near_edge));
        let v = input.rel_vel;
        let lateral = (v.x * v.x + v.y * v.y).sqrt();
        out.delta_term = -cfg.k_delta * (lateral + v.z.max(0.0));
        out.total = open_tanh(-out.u_attractive - out.u_repulsive - out.beta_term + out.delta_term);
    }
    Ok(out)
}

/// Pad geometry used to derive the safety flags from a relative position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyGeometry {
    pub half_extent: f64,
    /// Width of the band inside the pad edge that counts as "near the edge", m.
    pub edge_margin: f64,
}

impl Default for SafetyGeometry {
    fn default() -> Self {
        Self {
            half_extent: 0.25,
            edge_margin: 0.05,
        }
    }
}

impl SafetyGeometry {
    /// `(below_pad, near_edge)` for a drone-minus-pad offset.
    pub fn flags(&self, rel_pos: &Vec3) -> (bool, bool) {
        let below = rel_pos.z < 0.0;
        let lateral = rel_pos.x.abs().max(rel_pos.y.abs());
        (below, lateral >= self.half_extent - self.edge_margin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardCell {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub reward: RewardBreakdown,
}

/// Row-major reward grid; `y` varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardGrid {
    pub resolution: usize,
    pub cells: Vec<RewardCell>,
}

pub const GRID_CSV_HEADER: &str = "x,y,z,total,case,u_att,u_rep,beta,delta";

impl RewardGrid {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{GRID_CSV_HEADER}")?;
        for c in &self.cells {
            let r = &c.reward;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                sig9(c.x),
                sig9(c.y),
                sig9(c.z),
                sig9(r.total),
                r.case,
                sig9(r.u_attractive),
                sig9(r.u_repulsive),
                sig9(r.beta_term),
                sig9(r.delta_term)
            )?;
        }
        Ok(())
    }
}

/// Evaluates the reward on a `resolution x resolution` XY grid spanning
/// `[-xy_range, xy_range]` at relative altitude `z_slice`, with zero
/// velocities and zero progress.
pub fn reward_surface_grid(
    z_slice: f64,
    xy_range: f64,
    resolution: usize,
    cfg: &RewardConfig,
) -> Result<RewardGrid> {
    if resolution < 2 {
        return Err(Error::param("resolution", format!("must be >= 2, got {resolution}")));
    }
    if !(xy_range.is_finite() && xy_range > 0.0 && z_slice.is_finite()) {
        return Err(Error::param("range", "range must be > 0 and z finite"));
    }
    cfg.validate()?;
    let geometry = SafetyGeometry::default();
    let step = 2.0 * xy_range / (resolution - 1) as f64;
    let coord = |i: usize| {
        // exact endpoints and exact mirror symmetry about 0
        let j = i as f64 - (resolution - 1) as f64 / 2.0;
        j * step
    };
    let mut cells = Vec::with_capacity(resolution * resolution);
    for iy in 0..resolution {
        for ix in 0..resolution {
            let rel_pos = Vec3::new(coord(ix), coord(iy), z_slice);
            let (below_pad, near_edge) = geometry.flags(&rel_pos);
            let input = RewardInput {
                rel_pos,
                rel_vel: Vec3::zeros(),
                prev_distance: rel_pos.norm(),
                obstacle_distance: None,
                below_pad,
                near_edge,
            };
            cells.push(RewardCell {
                x: rel_pos.x,
                y: rel_pos.y,
                z: z_slice,
                reward: compute_reward(&input, cfg)?,
            });
        }
    }
    Ok(RewardGrid { resolution, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn at(rel_pos: Vec3, prev: f64) -> RewardInput {
        RewardInput {
            rel_pos,
            rel_vel: Vec3::zeros(),
            prev_distance: prev,
            obstacle_distance: None,
            below_pad: false,
            near_edge: false,
        }
    }

    #[test]
    fn far_branch() {
        let cfg = RewardConfig::default();
        let r = compute_reward(&at(Vec3::new(3.0, 0.0, 0.0), 1.0), &cfg).unwrap();
        assert_eq!(r.case, RewardCase::Far);
        assert_eq!(r.total, (-1.0f64).tanh());
        assert_relative_eq!(r.total, -0.76159, epsilon = 1e-5);
        // boundary belongs to the far band
        let r = compute_reward(&at(Vec3::new(0.0, 2.0, 0.0), 5.0), &cfg).unwrap();
        assert_eq!(r.case, RewardCase::Far);
    }

    #[test]
    fn dead_center_is_zero() {
        let r = compute_reward(&at(Vec3::zeros(), 0.0), &RewardConfig::default()).unwrap();
        assert_eq!(r.case, RewardCase::Near);
        assert_eq!((r.u_attractive, r.u_repulsive, r.beta_term, r.total), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.delta_term, 0.0);
    }

    #[test]
    fn mid_band_rewards_progress() {
        let r = compute_reward(&at(Vec3::new(0.0, 0.0, 1.0), 1.2), &RewardConfig::default()).unwrap();
        assert_eq!(r.case, RewardCase::Mid);
        assert_relative_eq!(r.total, 1.0f64.tanh(), epsilon = 1e-12);
        assert_relative_eq!(r.total, 0.76159, epsilon = 1e-5);
        // the near radius itself is in the mid band
        let r = compute_reward(&at(Vec3::new(0.1, 0.0, 0.0), 0.1), &RewardConfig::default()).unwrap();
        assert_eq!(r.case, RewardCase::Mid);
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn repulsive_hand_case() {
        // 0.5 * 0.1 * (1/0.2 - 1/0.4)^2 = 0.05 * 2.5^2
        let expected = 0.05 * 6.25;
        let cfg = RewardConfig {
            repulsive_enabled: true,
            eta: 0.1,
            q_max: 0.4,
            ..RewardConfig::default()
        };
        assert!((repulsive_potential(0.2, &cfg).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.3125).abs() < 1e-15);
        assert_eq!(repulsive_potential(0.4, &cfg).unwrap(), 0.0);
        assert_eq!(repulsive_potential(0.2, &RewardConfig::default()).unwrap(), 0.0);
        assert!(matches!(repulsive_potential(0.0, &cfg), Err(Error::Contact(_))));

        let mut input = at(Vec3::new(0.0, 0.0, 0.05), 0.05);
        input.obstacle_distance = Some(0.2);
        let r = compute_reward(&input, &cfg).unwrap();
        assert!((r.u_repulsive - 0.3125).abs() < 1e-12);
        input.obstacle_distance = Some(0.0);
        assert!(compute_reward(&input, &cfg).is_err());
    }

    #[test]
    fn repulsion_continuous_at_cutoff() {
        let cfg = RewardConfig {
            repulsive_enabled: true,
            ..RewardConfig::default()
        };
        let mut prev = f64::INFINITY;
        for k in 1..12 {
            let sigma = cfg.q_max - 10f64.powi(-k);
            let u = repulsive_potential(sigma, &cfg).unwrap();
            assert!(u < prev);
            prev = u;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn descent_not_penalized_climb_is() {
        let cfg = RewardConfig::default();
        let mut input = at(Vec3::new(0.0, 0.0, 0.05), 0.05);
        input.rel_vel = Vec3::new(0.0, 0.0, -0.4);
        let down = compute_reward(&input, &cfg).unwrap();
        assert_eq!(down.delta_term, 0.0);
        input.rel_vel = Vec3::new(0.0, 0.0, 0.4);
        let up = compute_reward(&input, &cfg).unwrap();
        assert_relative_eq!(up.delta_term, -0.12, epsilon = 1e-12);
        input.rel_vel = Vec3::new(0.3, 0.4, 0.0);
        let lateral = compute_reward(&input, &cfg).unwrap();
        assert_relative_eq!(lateral.delta_term, -0.15, epsilon = 1e-12);
    }

    #[test]
    fn below_pad_penalized() {
        let cfg = RewardConfig::default();
        let mut input = at(Vec3::new(0.02, 0.0, -0.03), 0.04);
        let above = compute_reward(&input, &cfg).unwrap();
        input.below_pad = true;
        let below = compute_reward(&input, &cfg).unwrap();
        assert!(below.total < above.total);
        assert_eq!(below.beta_term, 0.5);
    }

    #[test]
    fn grid_shape_and_symmetry() {
        let cfg = RewardConfig::default();
        let g = reward_surface_grid(0.05, 3.0, 101, &cfg).unwrap();
        assert_eq!(g.cells.len(), 10_201);
        for c in &g.cells {
            assert!(c.reward.total > -1.0 && c.reward.total < 1.0);
            if (c.x * c.x + c.y * c.y + c.z * c.z).sqrt() >= 2.0 {
                assert_eq!(c.reward.total, (-1.0f64).tanh());
            }
        }
        let n = g.resolution;
        for iy in 0..n {
            for ix in 0..n {
                let a = &g.cells[iy * n + ix];
                let b = &g.cells[iy * n + (n - 1 - ix)];
                assert_eq!(a.x, -b.x);
                assert_eq!(a.reward.total, b.reward.total);
            }
        }
        assert!(reward_surface_grid(0.0, 3.0, 1, &cfg).is_err());
    }

    #[test]
    fn near_band_ray_non_increasing() {
        let cfg = RewardConfig::default();
        let dir = Vec3::new(1.0, 2.0, 2.0).normalize();
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let d = cfg.near_radius * i as f64 / 1000.0;
            let p = dir * d;
            let r = compute_reward(&at(p, d), &cfg).unwrap();
            assert_eq!(r.case, RewardCase::Near);
            assert!(r.total <= prev);
            prev = r.total;
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let g = reward_surface_grid(0.0, 1.0, 3, &RewardConfig::default()).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], GRID_CSV_HEADER);
        assert_eq!(lines.len(), 10);
        assert!(lines[5].starts_with("0,0,0,0,Near,"));
    }

    #[test]
    fn tanh_guard_stays_open() {
        assert!(open_tanh(1e300) < 1.0);
        assert!(open_tanh(-1e300) > -1.0);
        assert_eq!(open_tanh(0.3), 0.3f64.tanh());
    }

    proptest! {
        #[test]
        fn bounded_and_far_constant(
            x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64,
            vx in -4.0..4.0f64, vy in -4.0..4.0f64, vz in -4.0..4.0f64,
            prev in 0.0..6.0f64, below: bool, edge: bool,
        ) {
            let cfg = RewardConfig::default();
            let input = RewardInput {
                rel_pos: Vec3::new(x, y, z),
                rel_vel: Vec3::new(vx, vy, vz),
                prev_distance: prev,
                obstacle_distance: None,
                below_pad: below,
                near_edge: edge,
            };
            let r = compute_reward(&input, &cfg).unwrap();
            prop_assert!(r.total > -1.0 && r.total < 1.0);
            if input.rel_pos.norm() >= cfg.far_radius {
                prop_assert_eq!(r.total, cfg.gamma.tanh());
            }
        }

        #[test]
        fn mid_band_zero_progress_neutral(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
            let p = Vec3::new(x, y, z);
            let d = p.norm();
            prop_assume!(d >= 0.1 && d < 2.0);
            let r = compute_reward(&at(p, d), &RewardConfig::default()).unwrap();
            prop_assert_eq!(r.total, 0.0);
        }
    }
}
