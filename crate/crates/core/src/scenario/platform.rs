use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::hashed_unit;
use crate::{Error, Result, Vec3};

/// Per-component platform speed limit, m/s.
pub const MAX_PAD_SPEED: f64 = 0.46;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Static point landing.
    Spl,
    /// Linear motion with sudden heading changes.
    Lmpl,
    /// Circular arcs whose turn direction flips periodically.
    Cmpl,
    /// Arcs plus vertical oscillation.
    Ctl,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [Self::Spl, Self::Lmpl, Self::Cmpl, Self::Ctl];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spl => "SPL",
            Self::Lmpl => "LMPL",
            Self::Cmpl => "CMPL",
            Self::Ctl => "CTL",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::param(
                    "scenario",
                    format!("unknown scenario `{s}`; valid names: SPL, LMPL, CMPL, CTL"),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformState {
    /// Center of the pad's top surface.
    pub position: Vec3,
    pub velocity: Vec3,
    pub half_extent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    /// Seconds between heading re-draws (LMPL) or turn flips (CMPL/CTL).
    pub direction_change_period: f64,
    pub curve_radius: f64,
    /// CTL only.
    pub vertical_amplitude: f64,
    /// CTL only.
    pub vertical_period: f64,
    pub speed: f64,
    /// Pad top-center at t = 0.
    pub origin: Vec3,
    pub half_extent: f64,
    /// Heading of the first segment; drawn from the seed when `None`.
    pub initial_heading: Option<f64>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::Spl,
            seed: 0,
            direction_change_period: 3.0,
            curve_radius: 0.5,
            vertical_amplitude: 0.2,
            vertical_period: 4.0,
            speed: 0.3,
            origin: Vec3::new(0.0, 0.0, 0.5),
            half_extent: 0.25,
            initial_heading: None,
        }
    }
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            ..Self::default()
        }
    }

    /// Rejects shapes whose analytic velocity could leave the ±0.46 m/s box,
    /// so trajectories never need clamping and stay exact integrals.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_PAD_SPEED).contains(&self.speed) {
            return Err(Error::param(
                "scenario.speed",
                format!("must lie in [0, {MAX_PAD_SPEED}], got {}", self.speed),
            ));
        }
        for (name, v) in [
            ("scenario.direction_change_period", self.direction_change_period),
            ("scenario.curve_radius", self.curve_radius),
            ("scenario.vertical_period", self.vertical_period),
            ("scenario.half_extent", self.half_extent),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.vertical_amplitude.is_finite() && self.vertical_amplitude >= 0.0) {
            return Err(Error::param("scenario.vertical_amplitude", "must be >= 0"));
        }
        let vz_peak = self.vertical_amplitude * TAU / self.vertical_period;
        if vz_peak > MAX_PAD_SPEED {
            return Err(Error::param(
                "scenario.vertical_amplitude",
                format!("peak vertical speed {vz_peak:.4} m/s exceeds {MAX_PAD_SPEED}"),
            ));
        }
        if !self.origin.iter().all(|c| c.is_finite()) {
            return Err(Error::param("scenario.origin", "must be finite"));
        }
        Ok(())
    }

    fn segment_heading(&self, k: u64) -> f64 {
        match (k, self.initial_heading) {
            (0, Some(h)) => h,
            _ => hashed_unit(self.seed, k) * TAU,
        }
    }

    /// Turn direction (+1 counter-clockwise, -1 clockwise) of arc segment `k`.
    fn turn_sign(&self, k: u64) -> f64 {
        let first = if hashed_unit(self.seed, u64::MAX) < 0.5 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            first
        } else {
            -first
        }
    }
}

/// Pad state at time `t` (seconds, clamped to >= 0). Pure in `(spec, t)`.
pub fn platform_at(spec: &ScenarioSpec, t: f64) -> PlatformState {
    let t = t.max(0.0);
    let (xy, vxy) = match spec.kind {
        ScenarioKind::Spl => ((0.0, 0.0), (0.0, 0.0)),
        ScenarioKind::Lmpl => linear_segments(spec, t),
        ScenarioKind::Cmpl | ScenarioKind::Ctl => arc_segments(spec, t),
    };
    let (z, vz) = match spec.kind {
        ScenarioKind::Ctl => {
            let w = TAU / spec.vertical_period;
            (spec.vertical_amplitude * (w * t).sin(), spec.vertical_amplitude * w * (w * t).cos())
        }
        _ => (0.0, 0.0),
    };
    let velocity = Vec3::new(vxy.0, vxy.1, vz);
    debug_assert!(velocity.amax() <= MAX_PAD_SPEED + 1e-12);
    PlatformState {
        position: spec.origin + Vec3::new(xy.0, xy.1, z),
        velocity,
        half_extent: spec.half_extent,
    }
}

fn segment_index(spec: &ScenarioSpec, t: f64) -> (u64, f64) {
    let k = (t / spec.direction_change_period).floor();
    (k as u64, t - k * spec.direction_change_period)
}

type Planar = (f64, f64);

fn linear_segments(spec: &ScenarioSpec, t: f64) -> (Planar, Planar) {
    let (k, tau) = segment_index(spec, t);
    let period = spec.direction_change_period;
    let (mut x, mut y) = (0.0, 0.0);
    for j in 0..k {
        let h = spec.segment_heading(j);
        x += spec.speed * h.cos() * period;
        y += spec.speed * h.sin() * period;
    }
    let h = spec.segment_heading(k);
    let (vx, vy) = (spec.speed * h.cos(), spec.speed * h.sin());
    ((x + vx * tau, y + vy * tau), (vx, vy))
}

/// Advances along an arc of radius `r` turning with sign `s` from heading `h0`
/// for `tau` seconds at angular rate `w`; returns (displacement, end heading).
fn arc(r: f64, s: f64, w: f64, h0: f64, tau: f64) -> (Planar, f64) {
    let h = h0 + s * w * tau;
    ((r * s * (h.sin() - h0.sin()), r * s * (h0.cos() - h.cos())), h)
}

fn arc_segments(spec: &ScenarioSpec, t: f64) -> (Planar, Planar) {
    if spec.speed == 0.0 {
        return ((0.0, 0.0), (0.0, 0.0));
    }
    let (k, tau) = segment_index(spec, t);
    let w = spec.speed / spec.curve_radius;
    let (mut x, mut y) = (0.0, 0.0);
    let mut heading = spec.segment_heading(0);
    for j in 0..k {
        let ((dx, dy), h) = arc(
            spec.curve_radius,
            spec.turn_sign(j),
            w,
            heading,
            spec.direction_change_period,
        );
        x += dx;
        y += dy;
        heading = h;
    }
    let ((dx, dy), h) = arc(spec.curve_radius, spec.turn_sign(k), w, heading, tau);
    ((x + dx, y + dy), (spec.speed * h.cos(), spec.speed * h.sin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn static_pad_never_moves() {
        let spec = ScenarioSpec::new(ScenarioKind::Spl, 9);
        for i in 0..100 {
            let p = platform_at(&spec, i as f64 * 0.37);
            assert_eq!(p.position, spec.origin);
            assert_eq!(p.velocity, Vec3::zeros());
        }
    }

    #[test]
    fn linear_displacement_before_first_change() {
        let spec = ScenarioSpec {
            initial_heading: Some(0.0),
            ..ScenarioSpec::new(ScenarioKind::Lmpl, 1)
        };
        let p = platform_at(&spec, 2.0);
        assert_relative_eq!(p.position - spec.origin, Vec3::new(0.6, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(p.velocity, Vec3::new(0.3, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn linear_heading_changes_are_sudden_but_position_continuous() {
        let spec = ScenarioSpec::new(ScenarioKind::Lmpl, 42);
        let before = platform_at(&spec, 3.0 - 1e-9);
        let after = platform_at(&spec, 3.0);
        assert!((before.position - after.position).norm() < 1e-8);
        assert!((before.velocity - after.velocity).norm() > 1e-3);
        assert_relative_eq!(after.velocity.norm(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn arc_speed_constant_and_on_circle() {
        let spec = ScenarioSpec::new(ScenarioKind::Cmpl, 5);
        let (r, s) = (spec.curve_radius, spec.speed);
        for seg in 0..5u64 {
            let t0 = seg as f64 * spec.direction_change_period;
            let start = platform_at(&spec, t0);
            let h0 = start.velocity.y.atan2(start.velocity.x);
            let sign = spec.turn_sign(seg);
            // center of the turning circle, left of travel for ccw turns
            let center = start.position.xy() + sign * r * nalgebra::Vector2::new(-h0.sin(), h0.cos());
            for i in 0..50 {
                let t = t0 + spec.direction_change_period * i as f64 / 50.0;
                let p = platform_at(&spec, t);
                assert_relative_eq!(p.velocity.norm(), s, epsilon = 1e-12);
                assert!(((p.position.xy() - center).norm() - r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn positions_integrate_velocities() {
        // Simpson quadrature of reported velocity against reported position,
        // one panel per turn period so the turn flips sit on panel edges
        for kind in [ScenarioKind::Cmpl, ScenarioKind::Ctl] {
            let spec = ScenarioSpec::new(kind, 11);
            let period = spec.direction_change_period;
            let n = 2_000;
            let h = period / n as f64;
            let mut integral = Vec3::zeros();
            for k in 0..5 {
                let t0 = k as f64 * period;
                let mut acc = Vec3::zeros();
                for i in 0..=n {
                    let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += platform_at(&spec, t0 + i as f64 * h).velocity * w;
                }
                integral += acc * h / 3.0;
            }
            let t_end = 5.0 * period;
            let disp = platform_at(&spec, t_end).position - platform_at(&spec, 0.0).position;
            assert!((integral - disp).norm() < 1e-9, "{kind}: {}", (integral - disp).norm());
        }
        // piecewise constant velocity: exact with a grid that hits the breakpoints
        let spec = ScenarioSpec::new(ScenarioKind::Lmpl, 3);
        let mut acc = Vec3::zeros();
        let dt = 0.01;
        for i in 0..1500 {
            acc += platform_at(&spec, i as f64 * dt + dt / 2.0).velocity * dt;
        }
        let disp = platform_at(&spec, 15.0).position - spec.origin;
        assert!((acc - disp).norm() < 1e-9);
    }

    #[test]
    fn speed_box_sweep() {
        for kind in ScenarioKind::ALL {
            for seed in 0..20 {
                let spec = ScenarioSpec {
                    speed: MAX_PAD_SPEED,
                    ..ScenarioSpec::new(kind, seed)
                };
                spec.validate().unwrap();
                for i in 0..2000 {
                    let p = platform_at(&spec, i as f64 * 0.01);
                    assert!(p.velocity.amax() <= MAX_PAD_SPEED + 1e-12);
                }
            }
        }
    }

    #[test]
    fn pure_in_spec_and_time() {
        let spec = ScenarioSpec::new(ScenarioKind::Ctl, 77);
        for i in 0..100 {
            let t = i as f64 * 0.173;
            assert_eq!(platform_at(&spec, t), platform_at(&spec, t));
        }
    }

    #[test]
    fn validation() {
        let too_fast = ScenarioSpec {
            speed: 0.5,
            ..ScenarioSpec::default()
        };
        assert!(too_fast.validate().is_err());
        let steep = ScenarioSpec {
            vertical_amplitude: 1.0,
            vertical_period: 1.0,
            ..ScenarioSpec::default()
        };
        assert!(steep.validate().is_err());
        assert!("lmpl".parse::<ScenarioKind>().is_ok());
        let err = "XYZ".parse::<ScenarioKind>().unwrap_err().to_string();
        assert!(err.contains("SPL, LMPL, CMPL, CTL"));
    }
}
