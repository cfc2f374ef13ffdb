//! Experiment runner behind the `pwlhopf` binary: resolves a model, runs one
//! command and writes CSV/JSON artifacts into an output directory.

pub mod args;
pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pwlhopf::connection::{
    classify_hopf_like, dk_connection_test, modified_dk_shoot, sign_relations,
    solve_buffer_connection, solve_three_region, ConnectionSolution, DkConnectionReport,
    HopfClassification, ShootingSolution, SignReport, ThreeRegionParams,
};
use pwlhopf::eigen::SpectralType;
use pwlhopf::integrate::integrate;
use pwlhopf::manifolds::{canonical_slow_manifolds, Stability};
use pwlhopf::wayinout::{
    asymptote_fit, delay_vs_epsilon, maximal_delay, precision_diagnosis, way_in_way_out,
    AsymptoteFit, DelayEstimate, Passage, PrecisionRow, WayInOutOptions,
};
use pwlhopf::{ModelKind, ModelSpec, StateVec};
use serde::Serialize;
use thiserror::Error;

pub use config::{Command, ExperimentConfig, Options};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] pwlhopf::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Machine-readable category: the library variant name for model errors.
    pub fn kind(&self) -> String {
        match self {
            CliError::Model(e) => {
                let dbg = format!("{e:?}");
                dbg.chars().take_while(|c| c.is_alphanumeric()).collect()
            }
            CliError::Config(_) => "Config".into(),
            CliError::Io { .. } => "Io".into(),
            CliError::Csv(_) => "Csv".into(),
            CliError::Json(_) => "Json".into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
            .to_string()
    }
}

/// Fixed 17-significant-digit rendering used in every CSV.
fn num(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct SimulateReport {
    kind: ModelKind,
    arcs: usize,
    final_state: [f64; 3],
    continuity_defect: f64,
}

#[derive(Serialize)]
struct WayinoutReport {
    kind: ModelKind,
    z_hopf: f64,
    z_direction: f64,
    connection_defect: f64,
    dropped: Vec<f64>,
    fit: Option<AsymptoteFit>,
    fit_error: Option<String>,
    maximal_delay: Option<DelayEstimate>,
}

#[derive(Serialize)]
struct SweepReport {
    kind: ModelKind,
    u1: f64,
    u2: f64,
    relative_residual: f64,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ConnectionReport {
    ThreeRegion {
        solution: ConnectionSolution,
        signs: SignReport,
        hopf: Option<HopfClassification>,
    },
    Buffer {
        solution: ConnectionSolution,
    },
    Dk(DkConnectionReport),
    ModifiedDk {
        solution: ShootingSolution,
    },
}

#[derive(Serialize)]
struct RegionReport {
    id: String,
    lower_x: Option<f64>,
    upper_x: Option<f64>,
    spectral_type: SpectralType,
    lambda_slow: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Serialize)]
struct RayReport {
    region_id: String,
    stability: Stability,
    boundary_points: Vec<[f64; 3]>,
}

#[derive(Serialize)]
struct ClassifyReport {
    kind: ModelKind,
    epsilon: f64,
    continuity_defect: f64,
    regions: Vec<RegionReport>,
    rays: Vec<RayReport>,
    hopf: Option<HopfClassification>,
    dk_connection: Option<DkConnectionReport>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct PrecisionReport {
    kind: ModelKind,
    delta: f64,
    rows: Vec<PrecisionRow>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn hopf_params(model: &ModelSpec) -> Option<ThreeRegionParams> {
    match model {
        ModelSpec::ThreeRegion(m) => Some(m.params()),
        ModelSpec::Buffer(b) => Some(ThreeRegionParams {
            rho: b.rho(),
            mu: b.mu(),
            m: b.m,
            k: b.k,
            l: b.l(),
            n: b.n(),
            epsilon: b.epsilon,
        }),
        _ => None,
    }
}

/// Runs one experiment and returns the paths written, `config.json` first.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = vec![dir.join("config.json")];
    write_json(&written[0], cfg)?;
    let o = &cfg.options;
    let opts = WayInOutOptions {
        time_budget: o.time_budget,
        on_leave: o.on_leave,
    };
    let kind = cfg.model.kind();

    match cfg.command {
        Command::Simulate => {
            let sys = cfg.model.build()?;
            let traj = integrate(&sys, &StateVec::from(o.initial), o.t_max, Some(o.dt_sample))?;
            let path = dir.join("trajectory.csv");
            let rows = traj.samples.iter().map(|s| {
                vec![
                    num(s.t),
                    num(s.state[0]),
                    num(s.state[1]),
                    num(s.state[2]),
                    sys.regions[s.region].id.clone(),
                ]
            });
            write_csv(&path, &["t", "x", "y", "z", "region"], rows)?;
            written.push(path);
            let report = SimulateReport {
                kind,
                arcs: traj.arcs.len(),
                final_state: traj.final_state().into(),
                continuity_defect: sys.continuity_defect(),
            };
            written.push(dir.join("report.json"));
            write_json(written.last().unwrap(), &report)?;
        }
        Command::Wayinout => {
            let passage = Passage::new(&cfg.model)?;
            let curve = way_in_way_out(&passage, o.delta, &o.z_grid, o.precision(), opts)?;
            let path = dir.join("wayinout.csv");
            let rows = curve
                .pairs
                .iter()
                .map(|p| vec![num(p.z_in), num(p.z_out), num(p.t_exit), num(p.residual)]);
            write_csv(&path, &["z_in", "z_out", "t_exit", "residual"], rows)?;
            written.push(path);
            let (fit, fit_error) = match asymptote_fit(&curve, o.plateau_rel) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let report = WayinoutReport {
                kind,
                z_hopf: passage.z_hopf,
                z_direction: passage.z_direction,
                connection_defect: passage.connection_defect.norm(),
                dropped: curve.dropped.clone(),
                fit,
                fit_error,
                maximal_delay: maximal_delay(&passage, o.delta, o.precision(), opts).ok(),
            };
            written.push(dir.join("report.json"));
            write_json(written.last().unwrap(), &report)?;
        }
        Command::DelaySweep => {
            let sweep = delay_vs_epsilon(&cfg.model, &o.eps_grid, o.delta, o.precision(), opts)?;
            let path = dir.join("delay_sweep.csv");
            let rows = sweep.rows.iter().map(|r| {
                vec![
                    num(r.epsilon),
                    num(r.z_d),
                    opt(r.lower),
                    opt(r.upper),
                    num(r.fit),
                ]
            });
            write_csv(&path, &["epsilon", "z_d", "lower", "upper", "fit"], rows)?;
            written.push(path);
            let report = SweepReport {
                kind,
                u1: sweep.u1,
                u2: sweep.u2,
                relative_residual: sweep.relative_residual,
            };
            written.push(dir.join("report.json"));
            write_json(written.last().unwrap(), &report)?;
        }
        Command::Connect => {
            let report = match &cfg.model {
                ModelSpec::TwoRegion(_) => {
                    return Err(CliError::Config(
                        "the two-region system has no connection problem".into(),
                    ))
                }
                ModelSpec::ThreeRegion(m) => {
                    let solution = solve_three_region(m.rho, m.mu, m.epsilon)?;
                    let signs = sign_relations(m.rho, m.mu, m.epsilon)?;
                    let solved = pwlhopf::ThreeRegionModel::new(
                        m.rho, m.mu, solution.m, solution.k, m.epsilon,
                    )?;
                    ConnectionReport::ThreeRegion {
                        solution,
                        signs,
                        hopf: classify_hopf_like(&solved.params()).ok(),
                    }
                }
                ModelSpec::Buffer(b) => ConnectionReport::Buffer {
                    solution: solve_buffer_connection(b.a, b.epsilon)?,
                },
                ModelSpec::Dk(d) => ConnectionReport::Dk(dk_connection_test(d)?),
                ModelSpec::ModifiedDk(m) => ConnectionReport::ModifiedDk {
                    solution: modified_dk_shoot(m)?,
                },
            };
            written.push(dir.join("connection.json"));
            write_json(written.last().unwrap(), &report)?;
        }
        Command::Classify => {
            let sys = cfg.model.build()?;
            let regions = sys
                .regions
                .iter()
                .map(|r| {
                    let e = r.eigen();
                    RegionReport {
                        id: r.id.clone(),
                        lower_x: finite(r.lower_x),
                        upper_x: finite(r.upper_x),
                        spectral_type: e.kind,
                        lambda_slow: e.lambda_slow,
                        alpha: e.alpha,
                        beta: e.beta,
                    }
                })
                .collect();
            let rays = canonical_slow_manifolds(&sys)?
                .iter()
                .map(|r| RayReport {
                    region_id: r.region_id.clone(),
                    stability: r.stability,
                    boundary_points: r.boundary_points().into_iter().map(Into::into).collect(),
                })
                .collect();
            let (dk_connection, warnings) = match &cfg.model {
                ModelSpec::Dk(d) => (dk_connection_test(d).ok(), d.warnings()),
                ModelSpec::ModifiedDk(m) => (None, m.classical().warnings()),
                _ => (None, vec![]),
            };
            let report = ClassifyReport {
                kind,
                epsilon: sys.epsilon,
                continuity_defect: sys.continuity_defect(),
                regions,
                rays,
                hopf: hopf_params(&cfg.model).and_then(|p| classify_hopf_like(&p).ok()),
                dk_connection,
                warnings,
            };
            written.push(dir.join("report.json"));
            write_json(written.last().unwrap(), &report)?;
        }
        Command::PrecisionTable => {
            let passage = Passage::new(&cfg.model)?;
            let rows = precision_diagnosis(&passage, &o.precisions, o.delta)?;
            written.push(dir.join("report.json"));
            write_json(
                written.last().unwrap(),
                &PrecisionReport {
                    kind,
                    delta: o.delta,
                    rows,
                },
            )?;
        }
    }
    Ok(written)
}
