//! Serializable description of one experiment.

use std::path::PathBuf;

use pwlhopf::wayinout::{ConnectionResidual, LeavePolicy, WorkPrecision};
use pwlhopf::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Wayinout,
    DelaySweep,
    Connect,
    Classify,
    PrecisionTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    /// Tube radius.
    pub delta: f64,
    pub event_tol: f64,
    pub residual: ConnectionResidual,
    pub on_leave: LeavePolicy,
    pub time_budget: Option<f64>,
    /// Flatness threshold for plateau detection, relative to the curve range.
    pub plateau_rel: f64,
    pub z_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub precisions: Vec<f64>,
    pub t_max: f64,
    pub dt_sample: f64,
    pub initial: [f64; 3],
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Points with geometrically spaced magnitudes; `lo` and `hi` share a sign.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let sign = lo.signum();
    linear_grid(lo.abs().ln(), hi.abs().ln(), n)
        .into_iter()
        .map(|u| sign * u.exp())
        .collect()
}

impl Default for Options {
    fn default() -> Self {
        Self {
            delta: 1.0,
            event_tol: 1e-12,
            residual: ConnectionResidual::Natural,
            on_leave: LeavePolicy::RecordAtBoundary,
            time_budget: None,
            plateau_rel: 1e-3,
            z_grid: linear_grid(-3.2, -0.2, 50),
            eps_grid: log_grid(1e-2, 1e-5, 13),
            precisions: vec![1e-12, 1e-9, 1e-6],
            t_max: 100.0,
            dt_sample: 0.1,
            initial: [0.0; 3],
        }
    }
}

impl Options {
    pub fn precision(&self) -> WorkPrecision {
        WorkPrecision {
            event_tol: self.event_tol,
            residual: self.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: ModelSpec,
    #[serde(default)]
    pub options: Options,
    pub out_dir: PathBuf,
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let o = &self.options;
        positive("delta", o.delta)?;
        positive("event_tol", o.event_tol)?;
        positive("plateau_rel", o.plateau_rel)?;
        if let Some(b) = o.time_budget {
            positive("time_budget", b)?;
        }
        if let ConnectionResidual::Offset(p) = o.residual {
            if !p.is_finite() {
                return Err(CliError::Config(format!("offset must be finite, got {p}")));
            }
        }
        match self.command {
            Command::Simulate => {
                positive("t_max", o.t_max)?;
                positive("dt_sample", o.dt_sample)?;
            }
            Command::Wayinout if o.z_grid.is_empty() => {
                return Err(CliError::Config("z_grid is empty".into()))
            }
            Command::DelaySweep if o.eps_grid.is_empty() => {
                return Err(CliError::Config("eps_grid is empty".into()))
            }
            Command::PrecisionTable => {
                if o.precisions.is_empty() {
                    return Err(CliError::Config("precisions is empty".into()));
                }
                for &p in &o.precisions {
                    positive("precision", p)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}
