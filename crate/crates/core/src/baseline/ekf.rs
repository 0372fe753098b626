use nalgebra::{Matrix3, Matrix3x6, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Innovation covariance condition number above which an update is refused.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkfConfig {
    /// Prediction interval in seconds (the control period).
    pub dt: f64,
    /// Diagonal of Q.
    pub process_noise: f64,
    /// Diagonal of R.
    pub measurement_noise: f64,
    /// Diagonal of the initial P; large enough that the first fixes dominate
    /// the zero-velocity prior.
    pub initial_covariance: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 30.0,
            process_noise: 1e-4,
            measurement_noise: 1e-6,
            initial_covariance: 1e4,
        }
    }
}

impl EkfConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("baseline.ekf_dt", self.dt),
            ("baseline.measurement_noise", self.measurement_noise),
            ("baseline.initial_covariance", self.initial_covariance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.process_noise.is_finite() && self.process_noise >= 0.0) {
            return Err(Error::param("baseline.process_noise", "must be >= 0"));
        }
        Ok(())
    }
}

/// Constant-velocity pad tracker, state `[x, y, z, vx, vy, vz]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub x: Vector6<f64>,
    pub p: Matrix6<f64>,
    pub q: Matrix6<f64>,
    pub r: Matrix3<f64>,
    pub a: Matrix6<f64>,
    pub h: Matrix3x6<f64>,
}

pub fn transition(dt: f64) -> Matrix6<f64> {
    let mut a = Matrix6::identity();
    for i in 0..3 {
        a[(i, i + 3)] = dt;
    }
    a
}

pub fn observation() -> Matrix3x6<f64> {
    let mut h = Matrix3x6::zeros();
    for i in 0..3 {
        h[(i, i)] = 1.0;
    }
    h
}

fn symmetrize(p: &Matrix6<f64>) -> Matrix6<f64> {
    (p + p.transpose()) * 0.5
}

impl EkfState {
    pub fn new(position: Vec3, velocity: Vec3, cfg: &EkfConfig) -> Result<Self> {
        cfg.validate()?;
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&position);
        x.fixed_rows_mut::<3>(3).copy_from(&velocity);
        Ok(Self {
            x,
            p: Matrix6::identity() * cfg.initial_covariance,
            q: Matrix6::identity() * cfg.process_noise,
            r: Matrix3::identity() * cfg.measurement_noise,
            a: transition(cfg.dt),
            h: observation(),
        })
    }

    pub fn position(&self) -> Vec3 {
        self.x.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vec3 {
        self.x.fixed_rows::<3>(3).into_owned()
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.x.into()
    }

    pub fn predict(&self) -> Self {
        Self {
            x: self.a * self.x,
            p: symmetrize(&(self.a * self.p * self.a.transpose() + self.q)),
            ..self.clone()
        }
    }

    pub fn update(&self, z: &Vec3) -> Result<Self> {
        self.update_with_nis(z).map(|(s, _)| s)
    }

    /// Measurement update, also returning the normalized innovation squared
    /// `yᵀ S⁻¹ y`.
    pub fn update_with_nis(&self, z: &Vec3) -> Result<(Self, f64)> {
        if !z.iter().all(|c| c.is_finite()) {
            return Err(Error::Contract(format!("non-finite measurement {z:?}")));
        }
        let y: Vector3<f64> = z - self.h * self.x;
        let s = self.h * self.p * self.h.transpose() + self.r;
        let eig = s.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > 0.0 && hi.is_finite() && hi / lo <= MAX_INNOVATION_CONDITION) {
            return Err(Error::FilterDivergence(format!(
                "innovation covariance eigenvalues [{lo:e}, {hi:e}] exceed condition limit {MAX_INNOVATION_CONDITION:e}"
            )));
        }
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::FilterDivergence("innovation covariance is singular".into()))?;
        let k = self.p * self.h.transpose() * s_inv;
        let nis = (y.transpose() * s_inv * y)[(0, 0)];
        let p = (Matrix6::identity() - k * self.h) * self.p;
        Ok((
            Self {
                x: self.x + k * y,
                p: symmetrize(&p),
                ..self.clone()
            },
            nis,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(dt: f64) -> EkfConfig {
        EkfConfig {
            dt,
            ..EkfConfig::default()
        }
    }

    #[test]
    fn unit_step_predict() {
        let s = EkfState::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.1, 0.2, 0.3), &cfg(1.0)).unwrap();
        let n = s.predict();
        assert_relative_eq!(n.position(), Vec3::new(1.1, 2.2, 3.3), epsilon = 1e-15);
        assert_eq!(n.velocity(), s.velocity());
    }

    #[test]
    fn static_predict_grows_by_q() {
        let s = EkfState::new(Vec3::new(1.0, 0.0, 0.0), Vec3::zeros(), &cfg(1.0 / 30.0)).unwrap();
        let mut s0 = s.clone();
        s0.p = Matrix6::identity() * 0.0;
        let n = s0.predict();
        assert_eq!(n.position(), s.position());
        assert_relative_eq!(n.p, s.q, epsilon = 1e-18);
    }

    #[test]
    fn zero_innovation_keeps_state_and_shrinks_p() {
        let s = EkfState::new(Vec3::new(0.3, -0.2, 0.5), Vec3::new(0.1, 0.0, 0.0), &EkfConfig::default()).unwrap();
        let u = s.update(&s.position()).unwrap();
        assert_eq!(u.x, s.x);
        assert!(u.p.trace() < s.p.trace());
    }

    #[test]
    fn perfect_measurement_limit() {
        let c = EkfConfig {
            measurement_noise: 1e-12,
            ..EkfConfig::default()
        };
        let s = EkfState::new(Vec3::zeros(), Vec3::zeros(), &c).unwrap().predict();
        let z = Vec3::new(0.7, -1.3, 0.4);
        let u = s.update(&z).unwrap();
        assert!((u.position() - z).amax() < 1e-9);
    }

    #[test]
    fn ill_conditioned_innovation_rejected() {
        let mut s = EkfState::new(Vec3::zeros(), Vec3::zeros(), &EkfConfig::default()).unwrap();
        s.p[(0, 0)] = 1e9;
        s.r = Matrix3::identity() * 1e-9;
        s.p[(1, 1)] = 0.0;
        s.p[(2, 2)] = 0.0;
        let err = s.update(&Vec3::zeros()).unwrap_err();
        assert!(matches!(err, Error::FilterDivergence(_)));
        assert!(s.update(&Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }
}
