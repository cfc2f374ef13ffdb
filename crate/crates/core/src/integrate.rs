//! Hybrid integration: closed-form arcs joined at switching-plane events.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{ArcCoeffs, RegionSpec, StateVec};
use crate::system::PwlSystem;

pub const DEFAULT_EVENT_TOL: f64 = 1e-12;
pub const MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lower,
    Upper,
}

/// First crossing of a slab boundary. `state` is taken at the end of the
/// final bisection bracket, so it lies just outside the slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub state: StateVec,
    pub side: Side,
}

/// Scan step: at most a quarter of the half-period of the in-plane rotation.
pub fn sample_step(region: &RegionSpec) -> f64 {
    0.01f64.min(PI / (4.0 * region.omega()))
}

fn outside(region: &RegionSpec, x: f64) -> Option<Side> {
    if x < region.lower_x {
        Some(Side::Lower)
    } else if x > region.upper_x {
        Some(Side::Upper)
    } else {
        None
    }
}

/// Smallest positive time at which the local solution from `p` leaves the
/// region, searched up to `horizon` and refined by bisection to `tol`.
pub fn next_exit(region: &RegionSpec, p: &StateVec, horizon: f64, tol: f64) -> Option<Crossing> {
    let h = sample_step(region);
    let mut prev = 0.0;
    let mut i = 1u64;
    loop {
        let t = (i as f64 * h).min(horizon);
        if let Some(side) = outside(region, region.local_flow(p, t)[0]) {
            let (mut a, mut b) = (prev, t);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if outside(region, region.local_flow(p, mid)[0]) == Some(side) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Some(Crossing {
                t: b,
                state: region.local_flow(p, b),
                side,
            });
        }
        if t >= horizon {
            return None;
        }
        prev = t;
        i += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryArc {
    pub region: usize,
    pub region_id: String,
    pub t_entry: f64,
    pub t_exit: f64,
    pub state_entry: [f64; 3],
    pub state_exit: [f64; 3],
    pub coeffs: ArcCoeffs,
    /// False for the final arc when no switching event ended it.
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: [f64; 3],
    pub region: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub arcs: Vec<TrajectoryArc>,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn final_state(&self) -> StateVec {
        self.arcs
            .last()
            .map(|a| StateVec::from(a.state_exit))
            .unwrap_or_default()
    }

    /// Exact state at time `t` reconstructed from the arc containing it.
    pub fn state_at(&self, system: &PwlSystem, t: f64) -> Option<StateVec> {
        let arc = self.arcs.iter().find(|a| a.t_entry <= t && t <= a.t_exit)?;
        let p = StateVec::from(arc.state_entry);
        Some(system.regions[arc.region].local_flow(&p, t - arc.t_entry))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOptions {
    pub tol: f64,
    pub max_events: usize,
}

impl Default for EventOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_EVENT_TOL,
            max_events: MAX_EVENTS,
        }
    }
}

/// Integrates from `p0` over `[0, t_max]`, optionally sampling every `dt_sample`.
pub fn integrate(
    system: &PwlSystem,
    p0: &StateVec,
    t_max: f64,
    dt_sample: Option<f64>,
) -> Result<Trajectory> {
    integrate_with(system, p0, t_max, dt_sample, EventOptions::default())
}

pub fn integrate_with(
    system: &PwlSystem,
    p0: &StateVec,
    t_max: f64,
    dt_sample: Option<f64>,
    opts: EventOptions,
) -> Result<Trajectory> {
    if p0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "initial state must be finite".into(),
        ));
    }
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "t_max = {t_max} must be positive and finite"
        )));
    }
    if let Some(dt) = dt_sample {
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "dt_sample = {dt} must be positive"
            )));
        }
    }

    let mut arcs = Vec::new();
    let mut t = 0.0;
    let mut p = *p0;
    let mut idx = system.locate(&p);
    loop {
        let region = &system.regions[idx];
        let coeffs = region.coeffs(&p);
        match next_exit(region, &p, t_max - t, opts.tol) {
            Some(c) if t + c.t < t_max => {
                arcs.push(TrajectoryArc {
                    region: idx,
                    region_id: region.id.clone(),
                    t_entry: t,
                    t_exit: t + c.t,
                    state_entry: p.into(),
                    state_exit: c.state.into(),
                    coeffs,
                    closed: true,
                });
                if arcs.len() >= opts.max_events {
                    return Err(Error::EventBudgetExceeded);
                }
                t += c.t;
                p = c.state;
                idx = system.locate(&p);
            }
            _ => {
                arcs.push(TrajectoryArc {
                    region: idx,
                    region_id: region.id.clone(),
                    t_entry: t,
                    t_exit: t_max,
                    state_entry: p.into(),
                    state_exit: region.local_flow(&p, t_max - t).into(),
                    coeffs,
                    closed: false,
                });
                break;
            }
        }
    }

    let samples = match dt_sample {
        Some(dt) => sample_arcs(system, &arcs, dt, t_max),
        None => Vec::new(),
    };
    Ok(Trajectory { arcs, samples })
}

fn sample_arcs(system: &PwlSystem, arcs: &[TrajectoryArc], dt: f64, t_max: f64) -> Vec<Sample> {
    let n = (t_max / dt).floor() as u64;
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut arc = 0;
    for i in 0..=n {
        let t = i as f64 * dt;
        while arc + 1 < arcs.len() && t >= arcs[arc].t_exit {
            arc += 1;
        }
        let a = &arcs[arc];
        let p = StateVec::from(a.state_entry);
        let u = system.regions[a.region].local_flow(&p, t - a.t_entry);
        out.push(Sample {
            t,
            state: u.into(),
            region: a.region,
        });
    }
    out
}

/// Follows the hybrid flow from `p0` until it first enters region `target`.
/// Returns the elapsed time and entry state, or `None` if `horizon` runs out.
pub fn advance_to_region(
    system: &PwlSystem,
    p0: &StateVec,
    target: usize,
    horizon: f64,
    opts: EventOptions,
) -> Result<Option<(f64, StateVec)>> {
    let mut t = 0.0;
    let mut p = *p0;
    let mut idx = system.locate(&p);
    let mut events = 0usize;
    while idx != target {
        match next_exit(&system.regions[idx], &p, horizon - t, opts.tol) {
            Some(c) => {
                t += c.t;
                p = c.state;
                idx = system.locate(&p);
                events += 1;
                if events >= opts.max_events {
                    return Err(Error::EventBudgetExceeded);
                }
            }
            None => return Ok(None),
        }
    }
    Ok(Some((t, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TwoRegionModel;
    use nalgebra::Vector3;

    #[test]
    fn attracting_ray_reaches_boundary_point() {
        let (m, k, eps) = (1.0, 0.1, 0.25);
        let sys = TwoRegionModel::new(m, k, eps).unwrap().build().unwrap();
        // Point on the attracting ray with x = -2.
        let x0 = -2.0;
        let p0 = Vector3::new(x0, -m * x0 - eps, x0 + m * eps);
        let traj = integrate(&sys, &p0, 20.0, Some(0.05)).unwrap();
        let first = &traj.arcs[0];
        assert!(first.closed);
        let pa = Vector3::new(0.0, -eps, m * eps);
        assert!((StateVec::from(first.state_exit) - pa).norm() < 1e-9);
        for s in traj.samples.iter().filter(|s| s.t < first.t_exit) {
            let u = StateVec::from(s.state);
            let on = Vector3::new(u[0], -m * u[0] - eps, u[0] + m * eps);
            assert!((u - on).norm() < 2.0 * eps);
        }
    }

    #[test]
    fn equilibrium_is_stationary_without_drift() {
        let m = 1.0;
        let sys = TwoRegionModel::new(m, 0.1, 0.0).unwrap().build().unwrap();
        let z0 = -0.7;
        let p0 = Vector3::new(z0, -m * z0, z0);
        let traj = integrate(&sys, &p0, 50.0, Some(1.0)).unwrap();
        assert_eq!(traj.arcs.len(), 1);
        assert!(!traj.arcs[0].closed);
        for s in &traj.samples {
            assert!((StateVec::from(s.state) - p0).norm() < 1e-14);
        }
    }

    #[test]
    fn arcs_are_contiguous_and_end_on_planes() {
        let sys = TwoRegionModel::new(1.0, 0.1, 0.1).unwrap().build().unwrap();
        let p0 = Vector3::new(-0.5, 1.0, -1.0);
        let traj = integrate(&sys, &p0, 60.0, None).unwrap();
        assert!(traj.arcs.len() >= 2);
        for w in traj.arcs.windows(2) {
            assert_eq!(w[0].state_exit, w[1].state_entry);
            assert_eq!(w[0].t_exit, w[1].t_entry);
            assert!(w[0].t_entry < w[0].t_exit);
            assert!(w[0].state_exit[0].abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_horizon() {
        let sys = TwoRegionModel::new(1.0, 0.1, 0.1).unwrap().build().unwrap();
        assert!(integrate(&sys, &Vector3::zeros(), 0.0, None).is_err());
        assert!(integrate(&sys, &Vector3::new(f64::NAN, 0.0, 0.0), 1.0, None).is_err());
    }
}
