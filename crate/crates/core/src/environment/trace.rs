//! Episode trace CSV, one row per control step.
//!
//! Columns `ax,ay,az` carry the applied action (unitless, in [-1, 1]).
//! Baseline traces append the tracker estimate as `est_*` columns.

use std::io::{BufRead, Write};

use super::{StepOutcome, Terminal};
use crate::fmt::sig9;
use crate::{Error, Result};

pub const TRACE_COLUMNS: [&str; 24] = [
    "t", "px", "py", "pz", "vx", "vy", "vz", "roll", "pitch", "yaw", "ax", "ay", "az", "pad_x",
    "pad_y", "pad_z", "pad_vx", "pad_vy", "pad_vz", "fx", "fy", "fz", "reward", "terminal",
];

pub const ESTIMATE_COLUMNS: [&str; 6] = ["est_x", "est_y", "est_z", "est_vx", "est_vy", "est_vz"];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Every numeric column of [`TRACE_COLUMNS`] except `terminal`, in order.
    pub values: [f64; 23],
    pub terminal: Terminal,
    pub estimate: Option<[f64; 6]>,
}

impl TraceRow {
    pub fn from_outcome(out: &StepOutcome, estimate: Option<[f64; 6]>) -> Self {
        let i = &out.info;
        let (d, p) = (&i.drone, &i.pad);
        let values = [
            i.time,
            d.position.x,
            d.position.y,
            d.position.z,
            d.velocity.x,
            d.velocity.y,
            d.velocity.z,
            d.attitude.x,
            d.attitude.y,
            d.attitude.z,
            i.action[0],
            i.action[1],
            i.action[2],
            p.position.x,
            p.position.y,
            p.position.z,
            p.velocity.x,
            p.velocity.y,
            p.velocity.z,
            i.wind_force.x,
            i.wind_force.y,
            i.wind_force.z,
            out.reward.total,
        ];
        Self {
            values,
            terminal: out.terminal,
            estimate,
        }
    }

    pub fn time(&self) -> f64 {
        self.values[0]
    }

    pub fn drone_position(&self) -> [f64; 3] {
        [self.values[1], self.values[2], self.values[3]]
    }

    pub fn drone_velocity(&self) -> [f64; 3] {
        [self.values[4], self.values[5], self.values[6]]
    }

    pub fn pad_position(&self) -> [f64; 3] {
        [self.values[13], self.values[14], self.values[15]]
    }

    pub fn pad_velocity(&self) -> [f64; 3] {
        [self.values[16], self.values[17], self.values[18]]
    }

    pub fn wind_force(&self) -> [f64; 3] {
        [self.values[19], self.values[20], self.values[21]]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn has_estimates(&self) -> bool {
        self.rows.first().is_some_and(|r| r.estimate.is_some())
    }

    pub fn header(with_estimates: bool) -> String {
        let mut cols: Vec<&str> = TRACE_COLUMNS.to_vec();
        if with_estimates {
            cols.extend(ESTIMATE_COLUMNS);
        }
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let with_est = self.has_estimates();
        writeln!(w, "{}", Self::header(with_est))?;
        for row in &self.rows {
            let mut fields: Vec<String> = row.values.iter().map(|v| sig9(*v)).collect();
            fields.push(row.terminal.to_string());
            if let Some(est) = row.estimate.filter(|_| with_est) {
                fields.extend(est.iter().map(|v| sig9(*v)));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Parses and schema-checks a trace. Errors name the first offending column.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::Schema(format!("unreadable header: {e}")))?,
            None => return Err(Error::Schema("empty file: missing header".into())),
        };
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        let with_est = cols.len() > TRACE_COLUMNS.len();
        let expected: Vec<&str> = if with_est {
            TRACE_COLUMNS.iter().chain(ESTIMATE_COLUMNS.iter()).copied().collect()
        } else {
            TRACE_COLUMNS.to_vec()
        };
        for (i, want) in expected.iter().enumerate() {
            match cols.get(i) {
                Some(got) if got == want => {}
                Some(got) => {
                    return Err(Error::Schema(format!(
                        "column {} is `{got}`, expected `{want}`",
                        i + 1
                    )))
                }
                None => return Err(Error::Schema(format!("missing column `{want}`"))),
            }
        }
        if cols.len() > expected.len() {
            return Err(Error::Schema(format!("unexpected column `{}`", cols[expected.len()])));
        }

        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Schema(format!("read error: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != expected.len() {
                return Err(Error::Schema(format!(
                    "row {}: {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    expected.len()
                )));
            }
            let num = |i: usize| -> Result<f64> {
                fields[i].parse::<f64>().map_err(|_| {
                    Error::Schema(format!(
                        "row {}: column `{}` is not a number: `{}`",
                        lineno + 2,
                        expected[i],
                        fields[i]
                    ))
                })
            };
            let mut values = [0.0; 23];
            for (i, v) in values.iter_mut().enumerate() {
                *v = num(i)?;
            }
            let terminal: Terminal = fields[23].parse().map_err(|_| {
                Error::Schema(format!("row {}: column `terminal` invalid: `{}`", lineno + 2, fields[23]))
            })?;
            let estimate = if with_est {
                let mut e = [0.0; 6];
                for (k, v) in e.iter_mut().enumerate() {
                    *v = num(24 + k)?;
                }
                Some(e)
            } else {
                None
            };
            rows.push(TraceRow {
                values,
                terminal,
                estimate,
            });
        }
        Ok(Self { rows })
    }

    /// Keeps every `factor`-th row counting from the first and always the last.
    pub fn downsample(&self, factor: usize) -> Trace {
        let factor = factor.max(1);
        let n = self.rows.len();
        let mut rows: Vec<TraceRow> = self.rows.iter().step_by(factor).cloned().collect();
        if n > 0 && (n - 1) % factor != 0 {
            // swap the last kept row for the final one; count stays ceil(n / factor)
            if rows.len() > 1 {
                rows.pop();
            }
            rows.push(self.rows[n - 1].clone());
        }
        Trace { rows }
    }
}
