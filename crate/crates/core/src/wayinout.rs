//! Entry/exit bookkeeping against tubes around the slow manifolds: the
//! way-in/way-out map, maximal delays, asymptote fits and epsilon sweeps.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{RegionSpec, StateVec};
use crate::integrate::{advance_to_region, next_exit, sample_step, EventOptions, MAX_EVENTS};
use crate::manifolds::{theta_bracket, SlowManifoldRay};
use crate::models::ModelSpec;
use crate::system::{ModelKind, PwlSystem};

/// How the connection defect is treated when an orbit enters the exit region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum ConnectionResidual {
    /// Leave the orbit untouched.
    Natural,
    /// Remove the defect of the reference connection.
    Exact,
    /// Add an in-plane displacement of this size to every orbit.
    Offset(f64),
}

/// Numerical resolution of a way-in/way-out computation. The closed-form
/// flow has no truncation error, so precision is emulated through the event
/// tolerance and a controlled connection defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkPrecision {
    pub event_tol: f64,
    pub residual: ConnectionResidual,
}

impl Default for WorkPrecision {
    fn default() -> Self {
        Self {
            event_tol: 1e-12,
            residual: ConnectionResidual::Natural,
        }
    }
}

impl WorkPrecision {
    /// Event tolerance and connection defect both set to `p`.
    pub fn at(p: f64) -> Self {
        Self {
            event_tol: p,
            residual: ConnectionResidual::Offset(p),
        }
    }
}

/// Slow passage of a model: the attracting ray feeding in, the repelling
/// ray orbits escape from, and the layer bifurcation between them.
#[derive(Debug, Clone)]
pub struct Passage {
    pub spec: ModelSpec,
    pub system: PwlSystem,
    pub attracting: SlowManifoldRay,
    pub repelling: SlowManifoldRay,
    /// Where the attracting ray leaves its region.
    pub entry_point: StateVec,
    /// Critical-manifold `z` where the layer focus loses stability.
    pub z_hopf: f64,
    /// Sign of `z'` at the bifurcation point.
    pub z_direction: f64,
    /// Displacement from the repelling ray of the orbit through
    /// `entry_point` when it reaches the exit region.
    pub connection_defect: StateVec,
}

/// Fast-subsystem equilibrium of `region` at abscissa `x`.
fn critical_point(region: &RegionSpec, x: f64) -> Option<StateVec> {
    let a = &region.matrix;
    let m = Matrix2::new(a[(0, 1)], a[(0, 2)], a[(1, 1)], a[(1, 2)]);
    let rhs = -Vector2::new(
        a[(0, 0)] * x + region.offset[0],
        a[(1, 0)] * x + region.offset[1],
    );
    let yz = m.try_inverse()? * rhs;
    Some(StateVec::new(x, yz[0], yz[1]))
}

fn fast_trace(region: &RegionSpec) -> f64 {
    region.matrix[(0, 0)] + region.matrix[(1, 1)]
}

impl Passage {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let system = spec.build()?;
        let (entry, exit) = match spec.kind() {
            ModelKind::TwoRegion | ModelKind::Dk => (0, 1),
            ModelKind::ThreeRegion | ModelKind::Buffer | ModelKind::ModifiedDk => (0, 2),
        };
        let ray = |i: usize| {
            SlowManifoldRay::from_region(&system, i).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "region {} has a neutral focus",
                    system.regions[i].id
                ))
            })
        };
        let attracting = ray(entry)?;
        let repelling = ray(exit)?;
        let entry_point = attracting.point_at_x(system.regions[entry].upper_x);

        let switch = (entry + 1..=exit)
            .find(|&i| fast_trace(&system.regions[i]) > 0.0)
            .unwrap_or(exit);
        let x_h = system.regions[switch].lower_x;
        let crit = critical_point(&system.regions[switch], x_h).ok_or_else(|| {
            Error::InvalidParameter("layer problem has no isolated equilibrium".into())
        })?;
        let z_dot = system.regions[switch].field(&crit)[2];

        let probe_budget = 1e6;
        let arrival = advance_to_region(
            &system,
            &entry_point,
            exit,
            probe_budget,
            EventOptions::default(),
        )?;
        let connection_defect = match arrival {
            Some((_, u)) => u - repelling.compare(&u).1,
            None => StateVec::zeros(),
        };
        Ok(Self {
            spec: *spec,
            system,
            attracting,
            repelling,
            entry_point,
            z_hopf: crit[2],
            z_direction: if z_dot < 0.0 { -1.0 } else { 1.0 },
            connection_defect,
        })
    }

    pub fn exit_region(&self) -> &RegionSpec {
        &self.system.regions[self.repelling.region]
    }

    /// Point on the attracting tube of radius `delta` at height `z`.
    pub fn seed(&self, z: f64, delta: f64) -> Result<StateVec> {
        let on = self
            .attracting
            .point_at_z(z)
            .ok_or_else(|| Error::InvalidParameter("attracting ray is horizontal".into()))?;
        Ok(on + self.attracting.offset_direction() * delta)
    }

    /// Signed delay of an exit height relative to the bifurcation.
    pub fn delay_of(&self, z_out: f64) -> f64 {
        (z_out - self.z_hopf) * self.z_direction
    }

    /// Default per-orbit time budget: ten times the sum of the slow transit
    /// to the bifurcation and the escape time from a roundoff-sized offset.
    pub fn default_budget(&self, seed: &StateVec, delta: f64) -> Result<f64> {
        let zdot = self.system.field(&self.entry_point)[2].abs();
        if zdot.is_nan() || zdot <= 0.0 {
            return Err(Error::InvalidParameter(
                "no slow drift at the entry point".into(),
            ));
        }
        let t_in = (seed[2] - self.entry_point[2]).abs() / zdot;
        let alpha = self.exit_region().eigen().alpha;
        let t_esc = 2.0 * (delta / 1e-16).ln().max(1.0) / alpha;
        Ok(10.0 * (t_in + t_esc))
    }
}

/// One orbit's passage through the tubes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WayInOutPair {
    pub z_in: f64,
    /// `z` of the repelling-ray point matching the exit.
    pub z_out: f64,
    /// Time from the entry seed to the exit.
    pub t_exit: f64,
    /// `|d - delta|` at the recorded exit.
    pub residual: f64,
    /// Exit recorded where the orbit left the exit region before reaching
    /// distance `delta`.
    pub left_region: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WayInWayOutCurve {
    /// Sorted by `z_in`.
    pub pairs: Vec<WayInOutPair>,
    pub delta: f64,
    pub model: ModelSpec,
    pub precision: WorkPrecision,
    /// Entry heights whose orbit produced no exit within the time budget.
    pub dropped: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Exit {
    z_out: f64,
    t: f64,
    /// Time spent in the exit region.
    t_escape: f64,
    residual: f64,
    left_region: bool,
}

fn bisect<F: Fn(f64) -> bool>(mut a: f64, mut b: f64, tol: f64, past: F) -> (f64, f64) {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if past(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    (a, b)
}

/// What to do when an orbit leaves the exit region before leaving the tube.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeavePolicy {
    /// Record the exit where the orbit crosses the region boundary.
    #[default]
    RecordAtBoundary,
    /// Keep following the exit region's affine flow past its boundary, the
    /// local picture in which the delay estimates are derived.
    ContinueLocal,
}

/// Follows one orbit to its exit from the repelling tube.
fn follow(
    passage: &Passage,
    seed: &StateVec,
    delta: f64,
    prec: &WorkPrecision,
    budget: f64,
    policy: LeavePolicy,
) -> Result<Option<Exit>> {
    let opts = EventOptions {
        tol: prec.event_tol,
        max_events: MAX_EVENTS,
    };
    let exit_idx = passage.repelling.region;
    let Some((t_in, mut u)) = advance_to_region(&passage.system, seed, exit_idx, budget, opts)?
    else {
        return Ok(None);
    };
    match prec.residual {
        ConnectionResidual::Natural => {}
        ConnectionResidual::Exact => u -= passage.connection_defect,
        ConnectionResidual::Offset(p) => u += passage.repelling.offset_direction() * p,
    }
    let region = passage.exit_region();
    let rep = &passage.repelling;
    let dist = |t: f64| rep.compare(&region.local_flow(&u, t));

    let (d0, hat0) = rep.compare(&u);
    if d0 > delta {
        return Ok(Some(Exit {
            z_out: hat0[2],
            t: t_in,
            t_escape: 0.0,
            residual: d0 - delta,
            left_region: false,
        }));
    }
    let horizon = budget - t_in;
    let leave = match policy {
        LeavePolicy::RecordAtBoundary => {
            next_exit(region, &u, horizon, prec.event_tol).map(|c| c.t)
        }
        LeavePolicy::ContinueLocal => None,
    };
    let h = sample_step(region);
    let mut prev = 0.0;
    let mut i = 1u64;
    loop {
        let t = i as f64 * h;
        if let Some(tl) = leave {
            if t >= tl {
                // Check the stretch up to the boundary before giving up on it.
                let (d_end, _) = dist(tl);
                if d_end <= delta {
                    let (a, _) = bisect(prev, tl, prec.event_tol, |s| {
                        !region.contains_x(region.local_flow(&u, s)[0])
                    });
                    let (d, hat) = dist(a);
                    return Ok(Some(Exit {
                        z_out: hat[2],
                        t: t_in + a,
                        t_escape: a,
                        residual: (d - delta).abs(),
                        left_region: true,
                    }));
                }
            }
        }
        if t > horizon {
            return Ok(None);
        }
        let (d, _) = dist(t);
        if d > delta {
            let (_, b) = bisect(prev, t, prec.event_tol, |s| dist(s).0 > delta);
            let (db, hat) = dist(b);
            return Ok(Some(Exit {
                z_out: hat[2],
                t: t_in + b,
                t_escape: b,
                residual: (db - delta).abs(),
                left_region: false,
            }));
        }
        prev = t;
        i += 1;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WayInOutOptions {
    /// Per-orbit time budget; defaults to [`Passage::default_budget`].
    pub time_budget: Option<f64>,
    pub on_leave: LeavePolicy,
}

/// Way-in/way-out map over `z_grid`, evaluated in parallel and returned in
/// increasing `z_in` order.
pub fn way_in_way_out(
    passage: &Passage,
    delta: f64,
    z_grid: &[f64],
    prec: WorkPrecision,
    opts: WayInOutOptions,
) -> Result<WayInWayOutCurve> {
    if z_grid.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if delta.is_nan() || delta <= 0.0 || prec.event_tol.is_nan() || prec.event_tol <= 0.0 {
        return Err(Error::InvalidParameter(
            "delta and event tolerance must be positive".into(),
        ));
    }
    let mut grid = z_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let results: Vec<(f64, Result<Option<Exit>>)> = grid
        .par_iter()
        .map(|&z| {
            let out = passage.seed(z, delta).and_then(|seed| {
                let budget = match opts.time_budget {
                    Some(b) => b,
                    None => passage.default_budget(&seed, delta)?,
                };
                follow(passage, &seed, delta, &prec, budget, opts.on_leave)
            });
            (z, out)
        })
        .collect();
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    for (z, r) in results {
        match r? {
            Some(e) => pairs.push(WayInOutPair {
                z_in: z,
                z_out: e.z_out,
                t_exit: e.t,
                residual: e.residual,
                left_region: e.left_region,
            }),
            None => dropped.push(z),
        }
    }
    Ok(WayInWayOutCurve {
        pairs,
        delta,
        model: passage.spec,
        precision: prec,
        dropped,
    })
}

/// Delay bounds of the two-region system at timescale `eps`.
pub fn two_region_bounds(m: f64, k: f64, eps: f64) -> (f64, f64) {
    let s = (4.0 - k * k).sqrt();
    let lower = -(2.0 * eps / k) * (2.0 * 2f64.sqrt() * (m + k) * eps / s).ln() + m * eps;
    let upper = -(2.0 * eps / k) * ((m + k) * eps / (2.0 * s)).ln() + m * eps;
    (lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    /// Delay measured from the bifurcation along the slow drift.
    pub z_d: f64,
    /// Raw exit height.
    pub z_exit: f64,
    pub t_exit: f64,
    /// Time from entering the exit region to leaving the tube.
    pub t_escape: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub left_region: bool,
}

/// Delay of the orbit started exactly where the attracting ray leaves its
/// region.
pub fn maximal_delay(
    passage: &Passage,
    delta: f64,
    prec: WorkPrecision,
    opts: WayInOutOptions,
) -> Result<DelayEstimate> {
    let seed = passage.entry_point;
    let budget = match opts.time_budget {
        Some(b) => b,
        None => passage.default_budget(&seed, delta)?,
    };
    let exit = follow(passage, &seed, delta, &prec, budget, opts.on_leave)?.ok_or_else(|| {
        Error::InvalidParameter(
            "orbit did not leave the repelling tube within the time budget".into(),
        )
    })?;
    let (lower, upper) = match passage.spec {
        ModelSpec::TwoRegion(m) => {
            let (lo, up) = two_region_bounds(m.m, m.k, m.epsilon);
            (Some(lo), Some(up))
        }
        _ => (None, None),
    };
    Ok(DelayEstimate {
        z_d: passage.delay_of(exit.z_out),
        z_exit: exit.z_out,
        t_exit: exit.t,
        t_escape: exit.t_escape,
        lower,
        upper,
        left_region: exit.left_region,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteFit {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub plateau: Option<f64>,
    /// Points used in the final line fit.
    pub n_linear: usize,
    pub n_plateau: usize,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Line `z_out = slope |z_in| + intercept` on the pre-plateau segment and
/// the level of the trailing plateau. Successive differences below
/// `plateau_rel` times the curve's range count as flat; the line fit drops
/// points beyond three standard deviations.
pub fn asymptote_fit(curve: &WayInWayOutCurve, plateau_rel: f64) -> Result<AsymptoteFit> {
    if curve.pairs.len() < 10 {
        return Err(Error::TooFewPoints {
            needed: 10,
            got: curve.pairs.len(),
        });
    }
    let mut pts: Vec<(f64, f64)> = curve
        .pairs
        .iter()
        .map(|p| (p.z_in.abs(), p.z_out))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let flat = plateau_rel * (hi - lo);

    let mut start = pts.len() - 1;
    while start > 0 && (ys[start] - ys[start - 1]).abs() <= flat {
        start -= 1;
    }
    let run = pts.len() - start;
    let (plateau, linear_end) = if run >= 3 {
        (Some(ys[start..].iter().sum::<f64>() / run as f64), start)
    } else {
        (None, pts.len())
    };
    if linear_end == 0 {
        return Ok(AsymptoteFit {
            slope: Some(0.0),
            intercept: plateau,
            plateau,
            n_linear: 0,
            n_plateau: run,
        });
    }
    let mut seg: Vec<(f64, f64)> = pts[..linear_end].to_vec();
    if seg.len() < 3 {
        return Ok(AsymptoteFit {
            slope: None,
            intercept: None,
            plateau,
            n_linear: 0,
            n_plateau: run,
        });
    }
    let mut fit = (0.0, 0.0);
    for _ in 0..10 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = seg.iter().copied().unzip();
        fit = least_squares(&xs, &ys);
        let res: Vec<f64> = seg.iter().map(|(x, y)| y - (fit.0 * x + fit.1)).collect();
        let sigma = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
        let kept: Vec<(f64, f64)> = seg
            .iter()
            .zip(&res)
            .filter(|(_, r)| r.abs() <= 3.0 * sigma)
            .map(|(p, _)| *p)
            .collect();
        if kept.len() == seg.len() || kept.len() < 3 {
            break;
        }
        seg = kept;
    }
    Ok(AsymptoteFit {
        slope: Some(fit.0),
        intercept: Some(fit.1),
        plateau,
        n_linear: seg.len(),
        n_plateau: if plateau.is_some() { run } else { 0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub z_d: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Fitted `u1 eps + u2 eps ln eps`.
    pub fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySweep {
    pub rows: Vec<SweepRow>,
    pub u1: f64,
    pub u2: f64,
    /// `||r|| / ||z_d / eps||` of the regression of `z_d / eps` on `ln eps`.
    pub relative_residual: f64,
}

/// Maximal delay across an `eps` grid with the fit `z_d = u1 eps + u2 eps ln eps`,
/// done as a line fit of `z_d / eps` against `ln eps` so every `eps` weighs
/// the same.
pub fn delay_vs_epsilon(
    base: &ModelSpec,
    eps_grid: &[f64],
    delta: f64,
    prec: WorkPrecision,
    opts: WayInOutOptions,
) -> Result<DelaySweep> {
    if eps_grid.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: eps_grid.len(),
        });
    }
    if eps_grid.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(Error::InvalidParameter(
            "epsilon grid must be positive".into(),
        ));
    }
    let delays: Vec<Result<DelayEstimate>> = eps_grid
        .par_iter()
        .map(|&e| {
            Passage::new(&base.with_epsilon(e)).and_then(|p| maximal_delay(&p, delta, prec, opts))
        })
        .collect();
    let delays: Vec<DelayEstimate> = delays.into_iter().collect::<Result<_>>()?;
    let xs: Vec<f64> = eps_grid.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = eps_grid
        .iter()
        .zip(&delays)
        .map(|(e, d)| d.z_d / e)
        .collect();
    let (u2, u1) = least_squares(&xs, &ys);
    let rnorm = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (u1 + u2 * x)).powi(2))
        .sum::<f64>()
        .sqrt();
    let ynorm = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
    let rows = eps_grid
        .iter()
        .zip(&delays)
        .map(|(&e, d)| SweepRow {
            epsilon: e,
            z_d: d.z_d,
            lower: d.lower,
            upper: d.upper,
            fit: u1 * e + u2 * e * e.ln(),
        })
        .collect();
    Ok(DelaySweep {
        rows,
        u1,
        u2,
        relative_residual: rnorm / ynorm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub precision: f64,
    /// Exit height of the orbit from the attracting boundary point, the
    /// level at which the way-in/way-out map saturates.
    pub plateau: Option<f64>,
    /// Time from the exit plane to leaving the tube.
    pub t_exit: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    /// Whether the precision falls within a decade of the bracket.
    pub consistent: bool,
}

/// Amplitude bracket implied by the escape time of the saturating orbit at
/// each working precision. An orbit that never escapes yields an empty row.
pub fn precision_diagnosis(
    passage: &Passage,
    precisions: &[f64],
    delta: f64,
) -> Result<Vec<PrecisionRow>> {
    if passage.spec.kind() != ModelKind::ThreeRegion {
        return Err(Error::InvalidParameter(
            "precision diagnosis needs a three-region system".into(),
        ));
    }
    let k = 2.0 * passage.exit_region().eigen().alpha;
    precisions
        .par_iter()
        .map(|&p| {
            let est = maximal_delay(
                passage,
                delta,
                WorkPrecision::at(p),
                WayInOutOptions::default(),
            )
            .ok();
            let t_exit = est.map(|e| e.t_escape);
            let bracket = t_exit.map(|t| theta_bracket(t, k));
            let consistent = bracket.is_some_and(|(lo, hi)| lo / 10.0 <= p && p <= hi * 10.0);
            Ok(PrecisionRow {
                precision: p,
                plateau: est.map(|e| e.z_exit),
                t_exit,
                theta_min: bracket.map(|b| b.0),
                theta_max: bracket.map(|b| b.1),
                consistent,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DkModel, TwoRegionModel};

    fn two_region(eps: f64) -> Passage {
        Passage::new(&ModelSpec::TwoRegion(
            TwoRegionModel::new(1.0, 0.1, eps).unwrap(),
        ))
        .unwrap()
    }

    #[test]
    fn two_region_reference_values() {
        let p = two_region(0.25);
        assert_eq!(p.z_hopf, 0.0);
        assert_eq!(p.z_direction, 1.0);
        assert!((p.entry_point - StateVec::new(0.0, -0.25, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn dk_reference_is_layer_bifurcation() {
        let p = Passage::new(&ModelSpec::Dk(DkModel::new(2.0, 1e-3).unwrap())).unwrap();
        assert!((p.z_hopf - (-1.0 + 1.0 / 0.8 + 2.0)).abs() < 1e-14);
        assert_eq!(p.z_direction, -1.0);
    }

    #[test]
    fn seeds_sit_on_the_tube() {
        let p = two_region(0.25);
        for z in [-3.0, -1.0, -0.5] {
            let s = p.seed(z, 1.0).unwrap();
            let (d, hat) = p.attracting.compare(&s);
            assert!((d - 1.0).abs() < 1e-9);
            assert!((hat[2] - z).abs() < 1e-15);
        }
    }

    #[test]
    fn entry_at_boundary_point_gives_maximal_delay() {
        let p = two_region(0.1);
        let opts = WayInOutOptions {
            on_leave: LeavePolicy::ContinueLocal,
            ..Default::default()
        };
        let md = maximal_delay(&p, 1.0, WorkPrecision::default(), opts).unwrap();
        let (lo, up) = (md.lower.unwrap(), md.upper.unwrap());
        assert!(lo < md.z_d && md.z_d < up, "{lo} < {} < {up}", md.z_d);
    }

    #[test]
    fn constant_curve_fit() {
        let pairs = (0..12)
            .map(|i| WayInOutPair {
                z_in: -(i as f64),
                z_out: 2.5,
                t_exit: 1.0,
                residual: 0.0,
                left_region: false,
            })
            .collect();
        let curve = WayInWayOutCurve {
            pairs,
            delta: 1.0,
            model: ModelSpec::TwoRegion(TwoRegionModel::new(1.0, 0.1, 0.1).unwrap()),
            precision: WorkPrecision::default(),
            dropped: vec![],
        };
        let fit = asymptote_fit(&curve, 1e-3).unwrap();
        assert_eq!(fit.slope, Some(0.0));
        assert_eq!(fit.plateau, Some(2.5));
    }

    #[test]
    fn line_then_plateau_fit() {
        let pairs = (0..30)
            .map(|i| {
                let x = 0.1 * i as f64;
                let y = if x < 2.0 { 3.0 * x + 0.5 } else { 6.5 };
                WayInOutPair {
                    z_in: -x,
                    z_out: y,
                    t_exit: 1.0,
                    residual: 0.0,
                    left_region: false,
                }
            })
            .collect();
        let curve = WayInWayOutCurve {
            pairs,
            delta: 1.0,
            model: ModelSpec::TwoRegion(TwoRegionModel::new(1.0, 0.1, 0.1).unwrap()),
            precision: WorkPrecision::default(),
            dropped: vec![],
        };
        let fit = asymptote_fit(&curve, 1e-3).unwrap();
        assert!((fit.slope.unwrap() - 3.0).abs() < 1e-12);
        assert!((fit.intercept.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(fit.plateau, Some(6.5));
    }

    #[test]
    fn empty_grid_rejected() {
        let p = two_region(0.25);
        let err = way_in_way_out(
            &p,
            1.0,
            &[],
            WorkPrecision::default(),
            WayInOutOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { .. }));
    }

    #[test]
    fn sweep_needs_three_points() {
        let spec = ModelSpec::TwoRegion(TwoRegionModel::new(1.0, 0.1, 0.1).unwrap());
        assert!(delay_vs_epsilon(
            &spec,
            &[0.1, 0.05],
            1.0,
            WorkPrecision::default(),
            WayInOutOptions::default()
        )
        .is_err());
    }
}
