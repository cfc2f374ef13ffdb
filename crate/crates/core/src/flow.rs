//! Affine regions and their exact local solutions.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::eigen::{eigenstructure, EigenStructure};
use crate::error::{Error, Result};

pub type StateVec = Vector3<f64>;

/// Closed-form constants of a local solution through a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ArcCoeffs {
    /// `x = z + s eps + xi`, `y = s (z + s eps) + n - eps + eta`, `z = z0 + eps t`,
    /// where `(xi, eta)` rotate with `exp(growth t)` at frequency `omega`.
    Drift {
        z0: f64,
        xi0: f64,
        eta0: f64,
        growth: f64,
        omega: f64,
    },
    /// Eigen-coordinates `(w1, q1, q2)` at `t = 0`; `w1` relaxes with `lambda`,
    /// `(q1, q2)` spiral about their fixed point with `alpha +- i beta`.
    Affine {
        w1: f64,
        q1: f64,
        q2: f64,
        lambda: f64,
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Propagator {
    Drift {
        s: f64,
        n: f64,
        eps: f64,
        omega: f64,
    },
    Affine {
        p: Matrix3<f64>,
        p_inv: Matrix3<f64>,
        /// Offset in eigen-coordinates.
        d: Vector3<f64>,
        /// Fixed point of the focus coordinates.
        q_star: Vector2<f64>,
        lambda: f64,
        alpha: f64,
        beta: f64,
    },
}

/// One affine subsystem `u' = A u + b` on the slab `lower_x <= x <= upper_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub id: String,
    pub matrix: Matrix3<f64>,
    pub offset: Vector3<f64>,
    pub lower_x: f64,
    pub upper_x: f64,
    eigen: EigenStructure,
    prop: Propagator,
}

/// Recognizes `[[s,-1,0],[1,0,-1],[0,0,0]]` with offset `(n, 0, eps)`.
fn drift_form(a: &Matrix3<f64>, b: &Vector3<f64>) -> Option<(f64, f64, f64)> {
    let template = Matrix3::new(a[(0, 0)], -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0);
    (*a == template && b[1] == 0.0).then_some((a[(0, 0)], b[0], b[2]))
}

impl RegionSpec {
    pub fn new(
        id: impl Into<String>,
        matrix: Matrix3<f64>,
        offset: Vector3<f64>,
        lower_x: f64,
        upper_x: f64,
    ) -> Result<Self> {
        let id = id.into();
        if lower_x.is_nan() || upper_x.is_nan() || lower_x >= upper_x {
            return Err(Error::InvalidRegion(format!(
                "{id}: lower_x = {lower_x} must be below upper_x = {upper_x}"
            )));
        }
        if matrix.iter().chain(offset.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRegion(format!(
                "{id}: non-finite coefficients"
            )));
        }
        let prop = match drift_form(&matrix, &offset) {
            Some((s, n, eps)) => {
                let gap = 4.0 - s * s;
                if gap.abs() < 1e-12 {
                    return Err(Error::StabilityBoundarySlope(gap.abs()));
                }
                if gap < 0.0 {
                    return Err(Error::InvalidRegion(format!(
                        "{id}: |slope| = {} exceeds 2",
                        s.abs()
                    )));
                }
                Propagator::Drift {
                    s,
                    n,
                    eps,
                    omega: gap.sqrt() / 2.0,
                }
            }
            None => Self::affine_propagator(&matrix, &offset)?,
        };
        let eigen = eigenstructure(&matrix)?;
        Ok(Self {
            id,
            matrix,
            offset,
            lower_x,
            upper_x,
            eigen,
            prop,
        })
    }

    fn affine_propagator(a: &Matrix3<f64>, b: &Vector3<f64>) -> Result<Propagator> {
        let es = eigenstructure(a)?;
        let p = es.basis();
        let p_inv = p
            .try_inverse()
            .ok_or_else(|| Error::InvalidRegion("eigenbasis is singular".into()))?;
        let d = p_inv * b;
        let block = Matrix2::new(es.alpha, es.beta, -es.beta, es.alpha);
        // beta > 0 makes the focus block invertible.
        let q_star =
            -(block.try_inverse().expect("focus block is invertible") * Vector2::new(d[1], d[2]));
        Ok(Propagator::Affine {
            p,
            p_inv,
            d,
            q_star,
            lambda: es.lambda_slow,
            alpha: es.alpha,
            beta: es.beta,
        })
    }

    pub fn eigen(&self) -> &EigenStructure {
        &self.eigen
    }

    /// True when the region uses the specialized drift closed form.
    pub fn is_drift(&self) -> bool {
        matches!(self.prop, Propagator::Drift { .. })
    }

    /// Angular frequency of the in-plane rotation.
    pub fn omega(&self) -> f64 {
        match self.prop {
            Propagator::Drift { omega, .. } => omega,
            Propagator::Affine { beta, .. } => beta,
        }
    }

    pub fn field(&self, p: &StateVec) -> StateVec {
        self.matrix * p + self.offset
    }

    pub fn contains_x(&self, x: f64) -> bool {
        self.lower_x <= x && x <= self.upper_x
    }

    /// Invariant line of the region as `(base, dir)` with `dir.x = 1`.
    pub fn slow_line(&self) -> Option<(StateVec, StateVec)> {
        match self.prop {
            Propagator::Drift { s, n, eps, .. } => Some((
                Vector3::new(0.0, n - eps, -s * eps),
                Vector3::new(1.0, s, 1.0),
            )),
            Propagator::Affine { p, q_star, .. } => {
                let v = p.column(0).into_owned();
                if v[0].abs() < 1e-14 {
                    return None;
                }
                let base = p * Vector3::new(0.0, q_star[0], q_star[1]);
                let dir = v / v[0];
                Some((base - dir * base[0], dir))
            }
        }
    }

    /// Constants of the local solution through `p`.
    pub fn coeffs(&self, p: &StateVec) -> ArcCoeffs {
        match self.prop {
            Propagator::Drift { s, n, eps, omega } => {
                let z0 = p[2];
                let xr = z0 + s * eps;
                ArcCoeffs::Drift {
                    z0,
                    xi0: p[0] - xr,
                    eta0: p[1] - (s * xr + n - eps),
                    growth: s / 2.0,
                    omega,
                }
            }
            Propagator::Affine {
                p_inv,
                lambda,
                alpha,
                beta,
                ..
            } => {
                let c = p_inv * p;
                ArcCoeffs::Affine {
                    w1: c[0],
                    q1: c[1],
                    q2: c[2],
                    lambda,
                    alpha,
                    beta,
                }
            }
        }
    }

    /// Exact solution at time `t` of the local ODE started from `p`.
    pub fn local_flow(&self, p: &StateVec, t: f64) -> StateVec {
        match self.prop {
            Propagator::Drift { s, n, eps, omega } => {
                let z0 = p[2];
                let xr0 = z0 + s * eps;
                let xi0 = p[0] - xr0;
                let eta0 = p[1] - (s * xr0 + n - eps);
                let (sn, cs) = (omega * t).sin_cos();
                let g = (s * t / 2.0).exp();
                let k = sn / omega;
                // exp(Mt) = e^{st/2} [cos I + sin/omega (M - s/2 I)], M = [[s,-1],[1,0]].
                let xi = g * (cs * xi0 + k * (s / 2.0 * xi0 - eta0));
                let eta = g * (cs * eta0 + k * (xi0 - s / 2.0 * eta0));
                let z = z0 + eps * t;
                let xr = z + s * eps;
                Vector3::new(xr + xi, s * xr + n - eps + eta, z)
            }
            Propagator::Affine {
                p: basis,
                p_inv,
                d,
                q_star,
                lambda,
                alpha,
                beta,
            } => {
                let c = p_inv * p;
                let phi = if lambda == 0.0 {
                    t
                } else {
                    (lambda * t).exp_m1() / lambda
                };
                let w1 = (lambda * t).exp() * c[0] + d[0] * phi;
                let (sn, cs) = (beta * t).sin_cos();
                let g = (alpha * t).exp();
                let r = Vector2::new(c[1] - q_star[0], c[2] - q_star[1]);
                let q = Vector2::new(cs * r[0] + sn * r[1], -sn * r[0] + cs * r[1]) * g + q_star;
                basis * Vector3::new(w1, q[0], q[1])
            }
        }
    }
}

/// Free-function form of [`RegionSpec::local_flow`].
pub fn local_flow(region: &RegionSpec, p: &StateVec, t: f64) -> StateVec {
    region.local_flow(p, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drift(s: f64, n: f64, eps: f64) -> RegionSpec {
        RegionSpec::new(
            "d",
            Matrix3::new(s, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0),
            Vector3::new(n, 0.0, eps),
            f64::NEG_INFINITY,
            f64::INFINITY,
        )
        .unwrap()
    }

    /// Same region routed through the eigen-coordinate form.
    fn as_affine(r: &RegionSpec) -> Propagator {
        RegionSpec::affine_propagator(&r.matrix, &r.offset).unwrap()
    }

    fn residual(r: &RegionSpec, p: &StateVec, t: f64) -> f64 {
        let h = 1e-6;
        let du = (r.local_flow(p, t + h) - r.local_flow(p, t - h)) / (2.0 * h);
        let u = r.local_flow(p, t);
        (du - r.field(&u)).norm() / (1.0 + u.norm())
    }

    #[test]
    fn identity_at_zero_time() {
        let r = drift(0.3, 0.1, 0.05);
        let p = Vector3::new(0.2, -0.4, 1.1);
        assert!((r.local_flow(&p, 0.0) - p).norm() < 1e-15);
    }

    #[test]
    fn drift_and_eigen_forms_agree() {
        let r = drift(-0.7, 0.2, 0.05);
        let mut alt = r.clone();
        alt.prop = as_affine(&r);
        let p = Vector3::new(0.3, -0.2, -0.5);
        for t in [0.1, 1.0, 7.5, 20.0] {
            let a = r.local_flow(&p, t);
            let b = alt.local_flow(&p, t);
            assert!((a - b).norm() < 1e-12, "t = {t}: {a} vs {b}");
        }
    }

    #[test]
    fn left_block_spirals_in_at_half_rate() {
        // eps = 0, m = 1: deviation from the fast equilibrium decays like e^{-t/2}.
        let r = drift(-1.0, 0.0, 0.0);
        let z0 = -0.4;
        let eq = Vector3::new(z0, -z0, z0);
        let p = eq + Vector3::new(0.3, 0.0, 0.0);
        let es = r.eigen();
        assert!((es.alpha + 0.5).abs() < 1e-14);
        assert!((es.beta - 3f64.sqrt() / 2.0).abs() < 1e-14);
        let ArcCoeffs::Drift { xi0, eta0, .. } = r.coeffs(&p) else {
            panic!()
        };
        // xi^2 - s xi eta + eta^2 is preserved by the rotation part of the block.
        let amp0 = (xi0 * xi0 + xi0 * eta0 + eta0 * eta0).sqrt();
        for t in [1.0, 4.0, 9.0] {
            let u = r.local_flow(&p, t);
            let ArcCoeffs::Drift {
                xi0: xi, eta0: eta, ..
            } = r.coeffs(&u)
            else {
                panic!()
            };
            let amp = (xi * xi + xi * eta + eta * eta).sqrt();
            assert!((amp / amp0 - (-t / 2.0f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn flow_satisfies_ode() {
        let r = drift(0.4, -0.1, 0.05);
        let p = Vector3::new(0.1, 0.2, -0.3);
        for t in [0.5, 3.0, 10.0] {
            assert!(residual(&r, &p, t) < 1e-9);
        }
        let eps = 0.05;
        let buf = RegionSpec::new(
            "c",
            Matrix3::new(-eps, -1.0, 0.0, 1.0, 0.0, -1.0, -eps, 0.0, 0.0),
            Vector3::new(0.01, 0.0, eps * 0.2),
            f64::NEG_INFINITY,
            f64::INFINITY,
        )
        .unwrap();
        assert!(!buf.is_drift());
        for t in [0.5, 3.0, 10.0] {
            assert!(residual(&buf, &p, t) < 1e-9);
        }
    }

    #[test]
    fn slow_line_is_invariant() {
        let eps = 0.05;
        let r = RegionSpec::new(
            "r",
            Matrix3::new(0.39, -1.0, 0.0, 1.0, 0.0, -1.0, -eps, 0.0, 0.0),
            Vector3::new(0.0, 0.0, eps * 0.2),
            f64::NEG_INFINITY,
            f64::INFINITY,
        )
        .unwrap();
        let (base, dir) = r.slow_line().unwrap();
        let p = base + dir * 0.1;
        let u = r.local_flow(&p, 3.0);
        let on = base + dir * (u[0] - base[0]);
        assert!((u - on).norm() < 1e-12);
    }

    #[test]
    fn stability_boundary_slope_rejected() {
        let err = RegionSpec::new(
            "x",
            Matrix3::new(2.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 0.1),
            0.0,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::StabilityBoundarySlope(_)));
    }

    #[test]
    fn empty_slab_rejected() {
        let err =
            RegionSpec::new("x", Matrix3::identity(), Vector3::zeros(), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidRegion(_)));
    }
}
