use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::runner::{BenchmarkRun, BenchmarkSetup, ControllerKind, TrialResult};
use super::stats::{mean, population_std, Summary};
use crate::scenario::ScenarioKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub scenario: ScenarioKind,
    pub controller: ControllerKind,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub precision_mean: Option<f64>,
    pub precision_std: Option<f64>,
    /// Over trials with a defined correlation only.
    pub correlation: Option<Summary>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub trials_per_scenario: usize,
    pub wind_enabled: bool,
    pub cells: Vec<ReportCell>,
}

impl BenchmarkReport {
    /// Groups trials by (scenario, controller) in first-seen order.
    pub fn from_trials(setup: &BenchmarkSetup, trials: &[TrialResult]) -> Self {
        Self::aggregate(setup.seed, setup.trials, setup.wind_enabled, trials)
    }

    pub fn aggregate(seed: u64, trials_per_scenario: usize, wind_enabled: bool, trials: &[TrialResult]) -> Self {
        let mut keys: Vec<(ScenarioKind, ControllerKind)> = Vec::new();
        for t in trials {
            if !keys.contains(&(t.scenario, t.controller)) {
                keys.push((t.scenario, t.controller));
            }
        }
        let cells = keys
            .into_iter()
            .map(|(scenario, controller)| {
                let group: Vec<&TrialResult> = trials
                    .iter()
                    .filter(|t| t.scenario == scenario && t.controller == controller)
                    .collect();
                let successes = group.iter().filter(|t| t.success()).count();
                let errors: Vec<f64> = group.iter().filter_map(|t| t.touchdown_lateral_error).collect();
                let corrs: Vec<f64> = group.iter().filter_map(|t| t.velocity_correlation).collect();
                ReportCell {
                    scenario,
                    controller,
                    trials: group.len(),
                    successes,
                    success_rate: successes as f64 / group.len() as f64,
                    precision_mean: mean(&errors),
                    precision_std: population_std(&errors),
                    correlation: Summary::of(&corrs),
                    failures: group.iter().filter(|t| t.failure.is_some()).count(),
                }
            })
            .collect();
        Self {
            seed,
            trials_per_scenario,
            wind_enabled,
            cells,
        }
    }

    pub fn cell(&self, scenario: ScenarioKind, controller: ControllerKind) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.controller == controller)
    }

    /// Aligned text with the three tables: success, precision, correlation.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
        let mut s = String::new();
        let wind = if self.wind_enabled { "on" } else { "off" };
        let _ = writeln!(
            s,
            "seed {}  trials/scenario {}  wind {wind}\n",
            self.seed, self.trials_per_scenario
        );
        let _ = writeln!(s, "Landing success rate");
        let _ = writeln!(s, "{:<9}{:<10}{:>8}{:>11}{:>10}", "scenario", "controller", "trials", "successes", "rate");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<9}{:<10}{:>8}{:>11}{:>9.1}%",
                c.scenario.name(),
                c.controller.name(),
                c.trials,
                c.successes,
                100.0 * c.success_rate
            );
        }
        let _ = writeln!(s, "\nLanding precision (m, successful trials)");
        let _ = writeln!(s, "{:<9}{:<10}{:>10}{:>10}", "scenario", "controller", "mean", "std");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<9}{:<10}{:>10}{:>10}",
                c.scenario.name(),
                c.controller.name(),
                opt(c.precision_mean, 4),
                opt(c.precision_std, 4)
            );
        }
        let _ = writeln!(s, "\nDrone/pad speed correlation");
        let _ = writeln!(
            s,
            "{:<9}{:<10}{:>4}{:>9}{:>9}{:>9}{:>9}{:>9}",
            "scenario", "controller", "n", "mean", "median", "std", "min", "max"
        );
        for c in &self.cells {
            let k = c.correlation;
            let _ = writeln!(
                s,
                "{:<9}{:<10}{:>4}{:>9}{:>9}{:>9}{:>9}{:>9}",
                c.scenario.name(),
                c.controller.name(),
                k.map_or(0, |k| k.count),
                opt(k.map(|k| k.mean), 4),
                opt(k.map(|k| k.median), 4),
                opt(k.map(|k| k.std), 4),
                opt(k.map(|k| k.min), 4),
                opt(k.map(|k| k.max), 4)
            );
        }
        s
    }

    pub const CSV_HEADER: &'static str = "scenario,controller,trials,successes,success_rate,precision_mean,precision_std,corr_count,corr_mean,corr_median,corr_std,corr_min,corr_max,failures";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let f = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for c in &self.cells {
            let k = c.correlation;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.scenario.name(),
                c.controller.name(),
                c.trials,
                c.successes,
                c.success_rate,
                f(c.precision_mean),
                f(c.precision_std),
                k.map_or(0, |k| k.count),
                f(k.map(|k| k.mean)),
                f(k.map(|k| k.median)),
                f(k.map(|k| k.std)),
                f(k.map(|k| k.min)),
                f(k.map(|k| k.max)),
                c.failures
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const TRIALS_HEADER: &str =
    "scenario,controller,trial,seed,terminal,touchdown_lateral_error,duration,velocity_correlation,wind_enabled,failure";

/// Per-trial CSV. Floats use shortest round-trip formatting so aggregates can
/// be recomputed exactly.
pub fn write_trials_csv<W: Write>(trials: &[TrialResult], mut w: W) -> std::io::Result<()> {
    let f = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    writeln!(w, "{TRIALS_HEADER}")?;
    for t in trials {
        let failure = t.failure.as_deref().unwrap_or("").replace([',', '\n', '\r'], ";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            t.scenario.name(),
            t.controller.name(),
            t.trial,
            t.seed,
            t.terminal.name(),
            f(t.touchdown_lateral_error),
            t.duration,
            f(t.velocity_correlation),
            t.wind_enabled,
            failure
        )?;
    }
    Ok(())
}

pub fn read_trials_csv<R: BufRead>(r: R) -> Result<Vec<TrialResult>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema("empty trials file".into()))?
        .map_err(|e| Error::Schema(e.to_string()))?;
    if header.trim_end() != TRIALS_HEADER {
        return Err(Error::Schema(format!("unexpected trials header `{header}`")));
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| Error::Schema(format!("bad number `{s}`: {e}")))
        }
    };
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Schema(e.to_string()))?;
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 10 {
            return Err(Error::Schema(format!("trials row {}: {} fields, expected 10", i + 1, c.len())));
        }
        let schema = |e: String| Error::Schema(format!("trials row {}: {e}", i + 1));
        out.push(TrialResult {
            scenario: c[0].parse().map_err(|e: Error| schema(e.to_string()))?,
            controller: match c[1] {
                "agent" => ControllerKind::Agent,
                "ekf-pid" => ControllerKind::EkfPid,
                other => return Err(schema(format!("unknown controller `{other}`"))),
            },
            trial: c[2].parse().map_err(|e| schema(format!("trial: {e}")))?,
            seed: c[3].parse().map_err(|e| schema(format!("seed: {e}")))?,
            terminal: c[4].parse().map_err(|e: Error| schema(e.to_string()))?,
            touchdown_lateral_error: opt(c[5])?,
            duration: c[6].parse().map_err(|e| schema(format!("duration: {e}")))?,
            velocity_correlation: opt(c[7])?,
            wind_enabled: c[8].parse().map_err(|e| schema(format!("wind_enabled: {e}")))?,
            failure: (!c[9].is_empty()).then(|| c[9].to_string()),
        });
    }
    Ok(out)
}

/// Writes report.txt/csv/json, trials.csv and one trace per trial under `dir`.
pub fn write_run(dir: &Path, run: &BenchmarkRun) -> Result<()> {
    let traces_dir = dir.join("traces");
    std::fs::create_dir_all(&traces_dir).map_err(|e| Error::io(&traces_dir, e))?;
    let put = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    };
    put("report.txt", run.report.to_text().as_bytes())?;
    let mut csv = Vec::new();
    run.report.write_csv(&mut csv).map_err(|e| Error::io(dir, e))?;
    put("report.csv", &csv)?;
    put("report.json", run.report.to_json().as_bytes())?;
    let mut trials = Vec::new();
    write_trials_csv(&run.trials, &mut trials).map_err(|e| Error::io(dir, e))?;
    put("trials.csv", &trials)?;
    for (t, trace) in run.trials.iter().zip(&run.traces) {
        let p = traces_dir.join(trace_file_name(t));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).map_err(|e| Error::io(&p, e))?;
        std::fs::write(&p, buf).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn trace_file_name(t: &TrialResult) -> String {
    format!("{}_{}_{:03}.csv", t.controller.name(), t.scenario.name(), t.trial)
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agent" => Ok(ControllerKind::Agent),
            "ekf-pid" => Ok(ControllerKind::EkfPid),
            other => Err(Error::Schema(format!("unknown controller `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Terminal;

    fn trial(i: usize, terminal: Terminal, err: Option<f64>) -> TrialResult {
        TrialResult {
            scenario: ScenarioKind::Spl,
            controller: ControllerKind::EkfPid,
            trial: i,
            seed: i as u64,
            terminal,
            touchdown_lateral_error: err,
            duration: 3.5,
            velocity_correlation: None,
            wind_enabled: false,
            failure: None,
        }
    }

    #[test]
    fn counts_success_rate() {
        let trials: Vec<TrialResult> = (0..10)
            .map(|i| {
                if i < 8 {
                    trial(i, Terminal::Touchdown, Some(0.05))
                } else {
                    trial(i, Terminal::Crash, None)
                }
            })
            .collect();
        let r = BenchmarkReport::aggregate(1, 10, false, &trials);
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].success_rate, 0.8);
        assert!(r.cells[0].correlation.is_none());
    }

    #[test]
    fn trials_csv_round_trip() {
        let mut t = trial(0, Terminal::Touchdown, Some(0.1 + 0.2));
        t.velocity_correlation = Some(-0.123456789012345);
        t.failure = Some("bad, thing".into());
        let mut buf = Vec::new();
        write_trials_csv(std::slice::from_ref(&t), &mut buf).unwrap();
        let back = read_trials_csv(&buf[..]).unwrap();
        assert_eq!(back[0].touchdown_lateral_error, t.touchdown_lateral_error);
        assert_eq!(back[0].velocity_correlation, t.velocity_correlation);
        assert_eq!(back[0].failure.as_deref(), Some("bad; thing"));
    }
}
