//! Canonical slow manifolds (invariant rays) and in-plane distances to them.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::StateVec;
use crate::system::{ModelKind, PwlSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Attracting,
    Repelling,
}

/// Plane through a ray point in which distances to the ray are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparisonPlane {
    /// `{z = const}`; used where `z` is a pure clock.
    ZLevel,
    /// Plane spanned by the focus eigenvectors.
    Eigen([Vector3<f64>; 2]),
}

/// Invariant line `base + (x - base.x) dir` restricted to its region's slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowManifoldRay {
    pub base: StateVec,
    /// Direction normalized to `dir.x = 1`.
    pub dir: StateVec,
    /// Admissible `x` range.
    pub param_range: (f64, f64),
    pub stability: Stability,
    pub region: usize,
    pub region_id: String,
    pub plane: ComparisonPlane,
}

/// Distance from a flowed point to a ray, measured in the comparison plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubularCoords {
    pub distance: f64,
    /// `z` of the ray point sharing the comparison plane.
    pub z_at: f64,
    pub t: f64,
}

impl SlowManifoldRay {
    /// Ray of region `idx`, or `None` when the focus is neutral (`alpha = 0`)
    /// or the slow direction lies inside a switching plane.
    pub fn from_region(system: &PwlSystem, idx: usize) -> Option<Self> {
        let region = &system.regions[idx];
        let es = region.eigen();
        let stability = if es.alpha < -1e-12 {
            Stability::Attracting
        } else if es.alpha > 1e-12 {
            Stability::Repelling
        } else {
            return None;
        };
        let (base, dir) = region.slow_line()?;
        let plane = if region.is_drift() {
            ComparisonPlane::ZLevel
        } else {
            ComparisonPlane::Eigen(es.plane_basis)
        };
        Some(Self {
            base,
            dir,
            param_range: (region.lower_x, region.upper_x),
            stability,
            region: idx,
            region_id: region.id.clone(),
            plane,
        })
    }

    pub fn point_at_x(&self, x: f64) -> StateVec {
        self.base + self.dir * (x - self.base[0])
    }

    /// Ray point at height `z`, if the ray is not horizontal.
    pub fn point_at_z(&self, z: f64) -> Option<StateVec> {
        (self.dir[2] != 0.0)
            .then(|| self.point_at_x(self.base[0] + (z - self.base[2]) / self.dir[2]))
    }

    /// Intersections with the finite ends of the slab.
    pub fn boundary_points(&self) -> Vec<StateVec> {
        [self.param_range.0, self.param_range.1]
            .into_iter()
            .filter(|x| x.is_finite())
            .map(|x| self.point_at_x(x))
            .collect()
    }

    /// In-plane distance from `u` to the ray and the matching ray point.
    pub fn compare(&self, u: &StateVec) -> (f64, StateVec) {
        match self.plane {
            ComparisonPlane::ZLevel => {
                let hat = self
                    .point_at_z(u[2])
                    .expect("z-level rays are never horizontal");
                ((u - hat).norm(), hat)
            }
            ComparisonPlane::Eigen([w1, w2]) => {
                let m = Matrix3::from_columns(&[self.dir, -w1, -w2]);
                let sol = m
                    .lu()
                    .solve(&(u - self.base))
                    .expect("ray transverse to focus plane");
                let hat = self.base + self.dir * sol[0];
                ((w1 * sol[1] + w2 * sol[2]).norm(), hat)
            }
        }
    }

    /// Unit vector in the comparison plane closest to `e_y`.
    pub fn offset_direction(&self) -> StateVec {
        let ey = Vector3::y();
        match self.plane {
            ComparisonPlane::ZLevel => ey,
            ComparisonPlane::Eigen([w1, w2]) => {
                let e1 = w1.normalize();
                let e2 = (w2 - e1 * e1.dot(&w2)).normalize();
                (e1 * e1.dot(&ey) + e2 * e2.dot(&ey)).normalize()
            }
        }
    }
}

/// Attracting and repelling rays of every region with a non-neutral focus.
pub fn canonical_slow_manifolds(system: &PwlSystem) -> Result<Vec<SlowManifoldRay>> {
    if matches!(system.kind, ModelKind::Dk | ModelKind::ModifiedDk) {
        let m = &system.regions[0].matrix;
        // eta a = -A[1][1], eps b = -A[2][2].
        if (m[(1, 1)] - m[(2, 2)]).abs() < 1e-14 {
            return Err(Error::InvalidParameter(
                "eta a = eps b leaves the slow direction undefined".into(),
            ));
        }
    }
    Ok((0..system.regions.len())
        .filter_map(|i| SlowManifoldRay::from_region(system, i))
        .collect())
}

/// Flows `p` for time `t` inside the ray's region and measures the distance
/// to the ray in the comparison plane.
pub fn distance_along_plane(
    system: &PwlSystem,
    ray: &SlowManifoldRay,
    p: &StateVec,
    t: f64,
) -> Result<TubularCoords> {
    let region = &system.regions[ray.region];
    let u = region.local_flow(p, t);
    let slack = 1e-12 * (1.0 + u[0].abs());
    if u[0] < region.lower_x - slack || u[0] > region.upper_x + slack {
        return Err(Error::OutOfRegion {
            x: u[0],
            lower: region.lower_x,
            upper: region.upper_x,
        });
    }
    let (distance, hat) = ray.compare(&u);
    Ok(TubularCoords {
        distance,
        z_at: hat[2],
        t,
    })
}

/// Amplitude of the rotation about the repelling ray of the two-region
/// system for a point on `{x = 0}`.
pub fn theta_amplitude(p: &StateVec, k: f64, eps: f64) -> Result<f64> {
    let (y0, z0) = (p[1], p[2]);
    let rad = 4.0 / (4.0 - k * k) * ((y0 + eps).powi(2) + (z0 + k * eps) * (z0 - k * y0));
    if rad < -1e-14 {
        return Err(Error::NegativeRadicand(rad));
    }
    Ok(rad.max(0.0).sqrt())
}

/// Exit time bracket `-(2/k) ln(sqrt(2) theta) < t < -(2/k) ln(theta / 4)`
/// for leaving a unit tube around the repelling ray.
pub fn exit_time_bounds(theta: f64, k: f64) -> (f64, f64) {
    (
        -(2.0 / k) * (2f64.sqrt() * theta).ln(),
        -(2.0 / k) * (theta / 4.0).ln(),
    )
}

/// Inverse of [`exit_time_bounds`]: `sqrt(1/(2 e^{kt})) < theta < sqrt(16/e^{kt})`.
pub fn theta_bracket(t: f64, k: f64) -> (f64, f64) {
    let g = (k * t).exp();
    ((1.0 / (2.0 * g)).sqrt(), (16.0 / g).sqrt())
}
