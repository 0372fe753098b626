use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pearson correlation of two equal-length series. `None` when either series
/// has zero variance.
pub fn velocity_correlation(drone_speeds: &[f64], pad_speeds: &[f64]) -> Result<Option<f64>> {
    if drone_speeds.len() != pad_speeds.len() {
        return Err(Error::Dimension {
            expected: drone_speeds.len(),
            got: pad_speeds.len(),
        });
    }
    if drone_speeds.len() < 2 {
        return Err(Error::Contract(format!(
            "correlation needs at least 2 samples, got {}",
            drone_speeds.len()
        )));
    }
    let n = drone_speeds.len() as f64;
    let ma = drone_speeds.iter().sum::<f64>() / n;
    let mb = pad_speeds.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in drone_speeds.iter().zip(pad_speeds) {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    // relative floor so rounding noise in a constant series counts as zero variance
    let floor = |m: f64| (1e-12 * m.abs().max(1e-12)).powi(2) * n;
    if saa <= floor(ma) || sbb <= floor(mb) {
        return Ok(None);
    }
    Ok(Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)))
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population standard deviation.
pub fn population_std(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Self> {
        Some(Self {
            count: xs.len(),
            mean: mean(xs)?,
            median: median(xs)?,
            std: population_std(xs)?,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}
