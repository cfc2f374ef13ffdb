//! Command-line flags and their translation into an [`ExperimentConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pwlhopf::connection::{solve_buffer_connection, solve_three_region};
use pwlhopf::wayinout::{ConnectionResidual, LeavePolicy};
use pwlhopf::{BufferModel, DkModel, ModelSpec, ModifiedDkModel, ThreeRegionModel, TwoRegionModel};

use crate::config::{linear_grid, log_grid, Command, ExperimentConfig, Options};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pwlhopf",
    version,
    about = "Delayed loss of stability in piecewise-linear slow-fast systems"
)]
pub struct Cli {
    /// Read the whole experiment from a JSON config; other flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Sub>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub options: OptionArgs,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    Simulate,
    Wayinout,
    DelaySweep,
    Connect,
    Classify,
    PrecisionTable,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::Wayinout => Command::Wayinout,
            Sub::DelaySweep => Command::DelaySweep,
            Sub::Connect => Command::Connect,
            Sub::Classify => Command::Classify,
            Sub::PrecisionTable => Command::PrecisionTable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    TwoRegion,
    ThreeRegion,
    Buffer,
    Dk,
    ModifiedDk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResidualChoice {
    Natural,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long, global = true)]
    pub two_region: bool,
    #[arg(long, global = true)]
    pub three_region: bool,
    #[arg(long, global = true)]
    pub buffer: bool,
    #[arg(long, global = true)]
    pub dk: bool,
    #[arg(long, global = true)]
    pub modified_dk: bool,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Applied current.
    #[arg(long = "I", global = true, allow_hyphen_values = true)]
    pub i_app: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Time-scale override in the modified model's N region.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct OptionArgs {
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub event_tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub residual: Option<ResidualChoice>,
    /// Push the arrival point this far off the repelling ray.
    #[arg(
        long,
        global = true,
        allow_hyphen_values = true,
        conflicts_with = "residual"
    )]
    pub offset: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub on_leave: Option<LeaveChoice>,
    #[arg(long, global = true)]
    pub time_budget: Option<f64>,
    #[arg(long, global = true)]
    pub plateau_rel: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z_max: Option<f64>,
    #[arg(long, global = true)]
    pub z_points: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub z_spacing: Option<Spacing>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub eps_min: Option<f64>,
    #[arg(long, global = true)]
    pub eps_max: Option<f64>,
    #[arg(long, global = true)]
    pub eps_points: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub precisions: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeaveChoice {
    RecordAtBoundary,
    ContinueLocal,
}

impl ModelArgs {
    fn choice(&self) -> Result<Option<ModelChoice>, CliError> {
        let flags = [
            (self.two_region, ModelChoice::TwoRegion),
            (self.three_region, ModelChoice::ThreeRegion),
            (self.buffer, ModelChoice::Buffer),
            (self.dk, ModelChoice::Dk),
            (self.modified_dk, ModelChoice::ModifiedDk),
        ];
        let mut picked: Vec<ModelChoice> = flags
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, c)| *c)
            .collect();
        picked.extend(self.model);
        picked.dedup();
        match picked.as_slice() {
            [] => Ok(None),
            [c] => Ok(Some(*c)),
            _ => Err(CliError::Config("more than one model selected".into())),
        }
    }

    /// Builds the model, falling back to `base` parameters of the same kind and
    /// then to per-model defaults. Omitted slopes are solved for a connection.
    fn resolve(&self, base: Option<&ModelSpec>) -> Result<ModelSpec, CliError> {
        let choice = match (self.choice()?, base) {
            (Some(c), _) => c,
            (None, Some(spec)) => match spec {
                ModelSpec::TwoRegion(_) => ModelChoice::TwoRegion,
                ModelSpec::ThreeRegion(_) => ModelChoice::ThreeRegion,
                ModelSpec::Buffer(_) => ModelChoice::Buffer,
                ModelSpec::Dk(_) => ModelChoice::Dk,
                ModelSpec::ModifiedDk(_) => ModelChoice::ModifiedDk,
            },
            (None, None) => return Err(CliError::Config("no model selected".into())),
        };
        let spec = match (choice, base) {
            (ModelChoice::TwoRegion, b) => {
                let d = match b {
                    Some(ModelSpec::TwoRegion(t)) => *t,
                    _ => TwoRegionModel {
                        m: 1.0,
                        k: 0.1,
                        epsilon: 0.25,
                    },
                };
                ModelSpec::TwoRegion(TwoRegionModel::new(
                    self.m.unwrap_or(d.m),
                    self.k.unwrap_or(d.k),
                    self.eps.unwrap_or(d.epsilon),
                )?)
            }
            (ModelChoice::ThreeRegion, b) => {
                let d = match b {
                    Some(ModelSpec::ThreeRegion(t)) => Some(*t),
                    _ => None,
                };
                let rho = self.rho.or(d.map(|t| t.rho)).unwrap_or(-0.085);
                let mu = self.mu.or(d.map(|t| t.mu)).unwrap_or(0.15);
                let eps = self.eps.or(d.map(|t| t.epsilon)).unwrap_or(0.05);
                let (m, k) = match (self.m.or(d.map(|t| t.m)), self.k.or(d.map(|t| t.k))) {
                    (Some(m), Some(k)) => (m, k),
                    (m, k) => {
                        let sol = solve_three_region(rho, mu, eps)?;
                        (m.unwrap_or(sol.m), k.unwrap_or(sol.k))
                    }
                };
                ModelSpec::ThreeRegion(ThreeRegionModel::new(rho, mu, m, k, eps)?)
            }
            (ModelChoice::Buffer, b) => {
                let d = match b {
                    Some(ModelSpec::Buffer(t)) => Some(*t),
                    _ => None,
                };
                let a = self.a.or(d.map(|t| t.a)).unwrap_or(0.2);
                let eps = self.eps.or(d.map(|t| t.epsilon)).unwrap_or(0.05);
                let (m, k) = match (self.m.or(d.map(|t| t.m)), self.k.or(d.map(|t| t.k))) {
                    (Some(m), Some(k)) => (m, k),
                    (m, k) => {
                        let sol = solve_buffer_connection(a, eps)?;
                        (m.unwrap_or(sol.m), k.unwrap_or(sol.k))
                    }
                };
                ModelSpec::Buffer(BufferModel::new(a, m, k, eps)?)
            }
            (ModelChoice::Dk, b) => {
                let mut d = match b {
                    Some(ModelSpec::Dk(t)) => *t,
                    _ => DkModel::new(2.0, 1e-3)?,
                };
                d.i_app = self.i_app.unwrap_or(d.i_app);
                d.epsilon = self.eps.unwrap_or(d.epsilon);
                d.a = self.a.unwrap_or(d.a);
                d.eta = self.eta.unwrap_or(d.eta);
                d.b = self.b.unwrap_or(d.b);
                d.validate()?;
                ModelSpec::Dk(d)
            }
            (ModelChoice::ModifiedDk, b) => {
                let d = match b {
                    Some(ModelSpec::ModifiedDk(t)) => *t,
                    _ => ModifiedDkModel::new(-1.4, 1e-3, 0.4552, -1.0067, None)?,
                };
                let mut md = ModifiedDkModel::new(
                    self.i_app.unwrap_or(d.i_app),
                    self.eps.unwrap_or(d.epsilon),
                    self.s.unwrap_or(d.s),
                    self.rho.unwrap_or(d.rho),
                    self.eta1.or(d.eta1),
                )?;
                md.a = self.a.unwrap_or(d.a);
                md.eta = self.eta.unwrap_or(d.eta);
                md.b = self.b.unwrap_or(d.b);
                md.validate()?;
                ModelSpec::ModifiedDk(md)
            }
        };
        Ok(spec)
    }

    fn any_set(&self) -> bool {
        self.model.is_some()
            || self.two_region
            || self.three_region
            || self.buffer
            || self.dk
            || self.modified_dk
            || [
                self.m, self.k, self.eps, self.rho, self.mu, self.a, self.i_app, self.eta, self.b,
                self.eta1, self.s,
            ]
            .iter()
            .any(Option::is_some)
    }
}

impl OptionArgs {
    fn apply(&self, o: &mut Options) -> Result<(), CliError> {
        macro_rules! set {
            ($src:ident => $dst:ident) => {
                if let Some(v) = self.$src {
                    o.$dst = v;
                }
            };
        }
        set!(delta => delta);
        set!(event_tol => event_tol);
        set!(plateau_rel => plateau_rel);
        set!(t_max => t_max);
        set!(dt => dt_sample);
        if let Some(r) = self.residual {
            o.residual = match r {
                ResidualChoice::Natural => ConnectionResidual::Natural,
                ResidualChoice::Exact => ConnectionResidual::Exact,
            };
        }
        if let Some(p) = self.offset {
            o.residual = ConnectionResidual::Offset(p);
        }
        if let Some(l) = self.on_leave {
            o.on_leave = match l {
                LeaveChoice::RecordAtBoundary => LeavePolicy::RecordAtBoundary,
                LeaveChoice::ContinueLocal => LeavePolicy::ContinueLocal,
            };
        }
        if self.time_budget.is_some() {
            o.time_budget = self.time_budget;
        }
        if self.z_min.is_some()
            || self.z_max.is_some()
            || self.z_points.is_some()
            || self.z_spacing.is_some()
        {
            let lo = self.z_min.unwrap_or(-3.2);
            let hi = self.z_max.unwrap_or(-0.2);
            let n = self.z_points.unwrap_or(50);
            o.z_grid = match self.z_spacing.unwrap_or(Spacing::Linear) {
                Spacing::Linear => linear_grid(lo, hi, n),
                Spacing::Log => {
                    if lo == 0.0 || hi == 0.0 || lo.signum() != hi.signum() {
                        return Err(CliError::Config(
                            "log z grid needs nonzero ends of one sign".into(),
                        ));
                    }
                    log_grid(lo, hi, n)
                }
            };
        }
        if let Some(g) = &self.eps_grid {
            o.eps_grid = g.clone();
        } else if self.eps_min.is_some() || self.eps_max.is_some() || self.eps_points.is_some() {
            let lo = self.eps_min.unwrap_or(1e-5);
            let hi = self.eps_max.unwrap_or(1e-2);
            if !(lo > 0.0 && hi > 0.0) {
                return Err(CliError::Config(
                    "epsilon grid ends must be positive".into(),
                ));
            }
            o.eps_grid = log_grid(hi, lo, self.eps_points.unwrap_or(13));
        }
        if let Some(p) = &self.precisions {
            o.precisions = p.clone();
        }
        if let Some(x) = &self.x0 {
            o.initial = x.as_slice().try_into().map_err(|_| {
                CliError::Config(format!("--x0 needs 3 components, got {}", x.len()))
            })?;
        }
        Ok(())
    }
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

impl Cli {
    /// Merges a config file (if any) with the flags.
    pub fn into_config(self) -> Result<ExperimentConfig, CliError> {
        let base = self.config.as_ref().map(read_config).transpose()?;
        let command = match (self.command, &base) {
            (Some(s), _) => s.into(),
            (None, Some(b)) => b.command,
            (None, None) => return Err(CliError::Config("no command given".into())),
        };
        let model = match &base {
            Some(b) if !self.model.any_set() => b.model,
            _ => self.model.resolve(base.as_ref().map(|b| &b.model))?,
        };
        let mut options = base.as_ref().map(|b| b.options.clone()).unwrap_or_default();
        self.options.apply(&mut options)?;
        let out_dir = match (self.out, &base) {
            (Some(p), _) => p,
            (None, Some(b)) => b.out_dir.clone(),
            (None, None) => PathBuf::from("out"),
        };
        Ok(ExperimentConfig {
            command,
            model,
            options,
            out_dir,
        })
    }
}
