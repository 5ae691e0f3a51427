//! Run configuration: what to run, on which grid, and where to write it.

use std::fmt;
use std::path::PathBuf;

use lzsm::analysis::TfRule;
use lzsm::schedules::{ScheduleConfig, ScheduleParams};
use lzsm::ssh::ChainModel;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Example1,
    Example2,
    Ssh,
    Custom,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Example1 => "example1",
            Experiment::Example2 => "example2",
            Experiment::Ssh => "ssh",
            Experiment::Custom => "custom",
        })
    }
}

/// Failure categories, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit 2.
    Validation(String),
    /// Convergence or detection failure: exit 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lzsm::Error> for CliError {
    fn from(e: lzsm::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// `start:stop:count` inclusive of both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepSpec {
    pub fn parse(axis: &str, range: &str) -> CliResult<Self> {
        let parts: Vec<&str> = range.split(':').collect();
        let bad = || CliError::Validation(format!("sweep range '{range}' is not start:stop:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let stop = parts[1].trim().parse().map_err(|_| bad())?;
        let count = parts[2].trim().parse().map_err(|_| bad())?;
        let spec = Self { axis: axis.to_string(), start, stop, count };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.count == 0 {
            return Err(CliError::Validation("sweep needs at least one value".into()));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::Validation("sweep bounds must be finite".into()));
        }
        if self.count > 1 && self.start == self.stop {
            return Err(CliError::Validation("sweep values must be strictly monotone".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / n
                }
            })
            .collect()
    }
}

/// How finely to integrate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    #[default]
    Default,
    Steps(usize),
    Tol(f64),
}

fn default_spectrum_points() -> usize {
    201
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub out: PathBuf,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub tf_rule: TfRule,
    #[serde(default = "default_spectrum_points")]
    pub spectrum_points: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        match self.experiment {
            Experiment::Ssh => {
                let chain = self
                    .chain
                    .ok_or_else(|| CliError::Validation("ssh run needs chain parameters".into()))?;
                chain.validate()?;
            }
            exp => {
                let sched = self
                    .schedule
                    .as_ref()
                    .ok_or_else(|| CliError::Validation(format!("{exp} run needs a schedule")))?;
                let matches = matches!(
                    (exp, &sched.params),
                    (Experiment::Example1, ScheduleParams::Example1(_))
                        | (Experiment::Example2, ScheduleParams::Example2(_))
                        | (Experiment::Custom, ScheduleParams::Custom(_))
                );
                if !matches {
                    return Err(CliError::Validation(format!("schedule type does not match experiment {exp}")));
                }
                sched.build()?;
            }
        }
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
            if !sweep_axes(self.experiment).contains(&sweep.axis.as_str()) {
                return Err(CliError::Validation(format!(
                    "cannot sweep '{}' for {}; choose one of {:?}",
                    sweep.axis,
                    self.experiment,
                    sweep_axes(self.experiment)
                )));
            }
        }
        match self.resolution {
            Resolution::Steps(0) => return Err(CliError::Validation("--steps must be ≥ 1".into())),
            Resolution::Tol(t) if !(t > 0.0) => {
                return Err(CliError::Validation("--tol must be > 0".into()))
            }
            _ => {}
        }
        if self.threads == Some(0) {
            return Err(CliError::Validation("--threads must be ≥ 1".into()));
        }
        if self.spectrum_points < 2 {
            return Err(CliError::Validation("spectrum needs at least 2 points".into()));
        }
        Ok(())
    }

    /// The schedule config with one swept parameter replaced.
    pub fn schedule_at(&self, axis: &str, value: f64) -> CliResult<ScheduleConfig> {
        let mut cfg = self
            .schedule
            .clone()
            .ok_or_else(|| CliError::Validation("no schedule configured".into()))?;
        match (&mut cfg.params, axis) {
            (_, "T") | (ScheduleParams::Example2(_), "T0") => cfg.total_time = value,
            (_, "tau") => cfg.tau = value,
            (ScheduleParams::Example1(p), "J0") => p.j0 = value,
            (ScheduleParams::Example1(p), "Jx") => p.jx = value,
            (ScheduleParams::Example1(p), "Jy") => p.jy = value,
            (ScheduleParams::Example1(p), "Jz") => p.jz = value,
            (ScheduleParams::Example2(p), "J_theta") => p.j_theta = value,
            (ScheduleParams::Example2(p), "J_r") => p.j_r = value,
            (ScheduleParams::Example2(p), "J_phi") => p.j_phi = value,
            _ => return Err(CliError::Validation(format!("unknown sweep axis '{axis}'"))),
        }
        Ok(cfg)
    }

    /// The value the single-run output reports in its `param` column.
    pub fn default_param(&self) -> f64 {
        match (&self.schedule, self.experiment) {
            (Some(s), Experiment::Example2) => s.tau,
            (Some(s), _) => s.total_time,
            (None, _) => self.chain.map_or(f64::NAN, |c| c.total_time),
        }
    }
}

/// Parameters each experiment can sweep.
pub fn sweep_axes(exp: Experiment) -> &'static [&'static str] {
    match exp {
        Experiment::Example1 => &["T", "tau", "J0", "Jx", "Jy", "Jz"],
        Experiment::Example2 => &["tau", "T0", "J_theta", "J_r", "J_phi"],
        Experiment::Custom => &["tau"],
        Experiment::Ssh => &["T"],
    }
}
