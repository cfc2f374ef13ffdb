//! Parameter conditions under which the attracting and repelling slow
//! manifolds connect, and the criticality of the layer Hopf-like bifurcation.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::StateVec;
use crate::integrate::next_exit;
use crate::manifolds::SlowManifoldRay;
pub use crate::models::ThreeRegionParams;
use crate::models::{BufferModel, DkModel, ModifiedDkModel, ThreeRegionModel};
use crate::newton::{self, NewtonOptions};

/// Admissibility margin for strict inequalities.
const MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSolution {
    pub m: f64,
    pub k: f64,
    /// Flight time across the central region.
    pub t_hat: f64,
    /// Norm of `u_C(t_hat; p_a) - p_r`.
    pub residual: f64,
    pub rho: f64,
    pub mu: f64,
    pub l: f64,
    pub epsilon: f64,
}

/// Closed-form slopes that connect the lateral slow manifolds of the
/// three-region system across `rho < x < mu`, verified by flowing the
/// central region.
pub fn solve_three_region(rho: f64, mu: f64, eps: f64) -> Result<ConnectionSolution> {
    if !(rho < 0.0 && mu > 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need rho < 0 < mu and eps > 0, got ({rho}, {mu}, {eps})"
        )));
    }
    let lg = (rho / mu).abs().ln();
    let root = (lg * lg + PI * PI).sqrt();
    let width = mu - rho;
    let k = -(2.0 * lg * (rho - mu) / root + rho / eps * (width - eps * root)) / width;
    let m = width / eps - k - root;
    let inside = |v: f64| v > MARGIN && v < 2.0 - MARGIN;
    if !(inside(m) && inside(k)) {
        return Err(Error::SlopesOutOfRange { m, k });
    }
    let t_hat = width / eps - (k + m);

    let model = ThreeRegionModel::new(rho, mu, m, k, eps)?;
    let sys = model.build()?;
    let central = &sys.regions[1];
    let pa = model.attracting_point();
    let pr = model.repelling_point();
    let residual = (central.local_flow(&pa, t_hat) - pr).norm();
    if residual > 1e-8 {
        return Err(Error::VerificationFailed(residual));
    }
    // The central passage must be monotone in x.
    let n = 2000;
    let mut prev = pa[0];
    for i in 1..=n {
        let x = central.local_flow(&pa, t_hat * i as f64 / n as f64)[0];
        if x < prev - 1e-12 {
            return Err(Error::VerificationFailed(prev - x));
        }
        prev = x;
    }
    Ok(ConnectionSolution {
        m,
        k,
        t_hat,
        residual,
        rho,
        mu,
        l: model.l(),
        epsilon: eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignCase {
    /// `mu < -rho`: expect `l > 0`, `k > m`.
    NarrowRight,
    /// `mu > -rho`: expect `l < 0`, `k < m`.
    WideRight,
    /// `mu = -rho`: expect `l = 0`, `k = m`.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub case: SignCase,
    pub m: f64,
    pub k: f64,
    pub l: f64,
    /// Whether the expected orderings hold for the solved slopes.
    pub holds: bool,
}

/// Orders `l`, `k`, `m` of the connected system according to the
/// asymmetry of the central slab.
pub fn sign_relations(rho: f64, mu: f64, eps: f64) -> Result<SignReport> {
    let sol = solve_three_region(rho, mu, eps)?;
    let (m, k, l) = (sol.m, sol.k, sol.l);
    let tol = 1e-12 * (1.0 + m.abs().max(k.abs()));
    let case = if (mu + rho).abs() <= 1e-12 * (mu - rho) {
        SignCase::Centered
    } else if mu < -rho {
        SignCase::NarrowRight
    } else {
        SignCase::WideRight
    };
    let holds = match case {
        SignCase::NarrowRight => l > 0.0 && k > m,
        SignCase::WideRight => l < 0.0 && k < m,
        SignCase::Centered => l.abs() <= tol && (k - m).abs() <= tol,
    };
    Ok(SignReport {
        case,
        m,
        k,
        l,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criticality {
    Supercritical,
    Subcritical,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfClassification {
    /// `z` of the bifurcation (`rho` or `mu`); `None` when `l = 0`.
    pub location: Option<f64>,
    pub criticality: Criticality,
    /// The quantity whose sign decides criticality: `l - m` when `l > 0`,
    /// `l + k` when `l < 0`.
    pub sign_value: f64,
    pub rationale: String,
}

/// Hopf-like bifurcation of the layer problem of the three-region system.
///
/// Convention: with `l > 0` the bifurcation sits at `z = rho` and is
/// subcritical iff `l - m > 0`; with `l < 0` it sits at `z = mu` and is
/// subcritical iff `l + k > 0`. This agrees with the focus-switching rule
/// (supercritical when the expanding slope is weaker than the contracting
/// one across the line).
pub fn classify_hopf_like(p: &ThreeRegionParams) -> Result<HopfClassification> {
    let tol = MARGIN * (1.0 + p.m.abs());
    if p.l.abs() <= tol {
        return Ok(HopfClassification {
            location: None,
            criticality: Criticality::None,
            sign_value: 0.0,
            rationale: "l = 0: no Hopf-like bifurcation is guaranteed".into(),
        });
    }
    if (p.l - p.m).abs() <= tol {
        return Err(Error::InvalidParameter("no criterion: l = m".into()));
    }
    let (location, sign_value, branch) = if p.l > 0.0 {
        (
            p.rho,
            p.l - p.m,
            "l > 0: bifurcation at z = rho, sign of l - m",
        )
    } else {
        (
            p.mu,
            p.l + p.k,
            "l < 0: bifurcation at z = mu, sign of l + k",
        )
    };
    let criticality = if sign_value > 0.0 {
        Criticality::Subcritical
    } else {
        Criticality::Supercritical
    };
    Ok(HopfClassification {
        location: Some(location),
        criticality,
        sign_value,
        rationale: branch.into(),
    })
}

/// Scaled connection defect `(u_C(tau; p_a) - p_r) / eps` of the buffer
/// system at unknowns `(m, k, tau)`.
pub fn buffer_residual(a: f64, eps: f64, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    let (gap, _) = buffer_defect(a, eps, x)?;
    Ok(gap / eps)
}

fn buffer_defect(a: f64, eps: f64, x: &Vector3<f64>) -> Result<(Vector3<f64>, BufferModel)> {
    let model = BufferModel::new(a, x[0], x[1], eps)?;
    let sys = model.build()?;
    let att = SlowManifoldRay::from_region(&sys, 0)
        .ok_or_else(|| Error::InvalidParameter("left region has no attracting ray".into()))?;
    let rep = SlowManifoldRay::from_region(&sys, 2)
        .ok_or_else(|| Error::InvalidParameter("right region has no repelling ray".into()))?;
    let pa = att.point_at_x(model.rho());
    let pr = rep.point_at_x(model.mu());
    Ok((sys.regions[1].local_flow(&pa, x[2]) - pr, model))
}

/// Finite-difference Jacobian of [`buffer_residual`] in `(m, k, tau)`.
pub fn buffer_jacobian(a: f64, eps: f64, x: &Vector3<f64>, rel_step: f64) -> Result<Matrix3<f64>> {
    newton::fd_jacobian(&|v: &Vector3<f64>| buffer_residual(a, eps, v), x, rel_step)
}

/// `eps = 0` root `(m, k, tau) = (a pi / (2 (1 - a)), same, pi)`.
pub fn buffer_seed(a: f64) -> Vector3<f64> {
    let s = a * PI / (2.0 * (1.0 - a));
    Vector3::new(s, s, PI)
}

/// Connects the buffer system's slow manifolds by Newton continuation in
/// `eps` from the `eps = 0` root, ten equal steps up to the target.
pub fn solve_buffer_connection(a: f64, eps: f64) -> Result<ConnectionSolution> {
    if a == 0.0 || a == 1.0 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need a not in {{0, 1}} and eps > 0, got a = {a}, eps = {eps}"
        )));
    }
    let steps = 10;
    let mut x = buffer_seed(a);
    let mut residual = f64::NAN;
    for i in 1..=steps {
        let e = eps * i as f64 / steps as f64;
        let out = newton::solve(|v| buffer_residual(a, e, v), x, NewtonOptions::default())
            .map_err(|err| match err {
                Error::SingularJacobian(d) => Error::SingularJacobian(d),
                _ => Error::ContinuationStalled {
                    eps: e,
                    residual: f64::NAN,
                },
            })?;
        if !out.converged && out.residual * e > 1e-10 {
            return Err(Error::ContinuationStalled {
                eps: e,
                residual: out.residual * e,
            });
        }
        x = out.x;
        residual = out.residual * e;
    }
    let (gap, model) = buffer_defect(a, eps, &x)?;
    let direct = gap.norm();
    if direct > 1e-10 {
        return Err(Error::ContinuationStalled {
            eps,
            residual: direct,
        });
    }
    debug_assert!(residual.is_finite());
    Ok(ConnectionSolution {
        m: x[0],
        k: x[1],
        t_hat: x[2],
        residual: direct,
        rho: model.rho(),
        mu: model.mu(),
        l: model.l(),
        epsilon: eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkConnectionReport {
    pub equilibrium: [f64; 3],
    pub connect: bool,
    /// Distance between the left and middle rays on `{x = -1}`.
    pub gap: f64,
    pub attracting_point: [f64; 3],
    pub repelling_point: [f64; 3],
}

/// The left attracting and middle repelling rays of the DK model meet on
/// `{x = -1}` exactly when the equilibrium lies on that plane.
pub fn dk_connection_test(dk: &DkModel) -> Result<DkConnectionReport> {
    let e = dk.equilibrium()?;
    if (dk.eta * dk.a - dk.epsilon * dk.b).abs() < 1e-14 {
        return Err(Error::InvalidParameter("eta a = eps b".into()));
    }
    let sys = dk.build()?;
    let left = SlowManifoldRay::from_region(&sys, 0)
        .ok_or_else(|| Error::InvalidParameter("left region has a neutral focus".into()))?;
    let middle = SlowManifoldRay::from_region(&sys, 1)
        .ok_or_else(|| Error::InvalidParameter("middle region has a neutral focus".into()))?;
    let pa = left.point_at_x(-1.0);
    let pr = middle.point_at_x(-1.0);
    Ok(DkConnectionReport {
        equilibrium: e.into(),
        connect: (e[0] + 1.0).abs() < 1e-12,
        gap: (pa - pr).norm(),
        attracting_point: pa.into(),
        repelling_point: pr.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingSolution {
    pub s: f64,
    pub rho: f64,
    pub mu: f64,
    /// Flight time across the new slab.
    pub t: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn modified_defect(base: &ModifiedDkModel, x: &Vector3<f64>) -> Result<(Vector3<f64>, StateVec)> {
    let model = ModifiedDkModel {
        s: x[1],
        rho: x[2],
        ..*base
    };
    let sys = model.build()?;
    let left = SlowManifoldRay::from_region(&sys, 0)
        .ok_or_else(|| Error::InvalidParameter("left region has a neutral focus".into()))?;
    let mid = SlowManifoldRay::from_region(&sys, 2)
        .ok_or_else(|| Error::InvalidParameter("middle region has a neutral focus".into()))?;
    let pa = left.point_at_x(model.rho);
    let pr = mid.point_at_x(model.mu());
    Ok((sys.regions[1].local_flow(&pa, x[0]) - pr, pa))
}

/// First arrival time of the new-slab flow from the attracting point at `x = mu`.
fn first_crossing_time(base: &ModifiedDkModel) -> Result<f64> {
    let sys = base.build()?;
    let left = SlowManifoldRay::from_region(&sys, 0)
        .ok_or_else(|| Error::InvalidParameter("left region has a neutral focus".into()))?;
    let pa = left.point_at_x(base.rho);
    let slab = &sys.regions[1];
    match next_exit(slab, &pa, 1e4, 1e-12) {
        Some(c) if c.state[0] > base.mu() - 1e-9 => Ok(c.t),
        _ => Err(Error::RegionOrdering(
            "attracting point never reaches mu through the new slab".into(),
        )),
    }
}

/// Shooting for `(t, s, rho)` such that the new-slab orbit from the left
/// attracting ray at `x = rho` lands on the middle repelling ray at `x = mu`.
/// `model.s` and `model.rho` are the initial guess.
pub fn modified_dk_shoot(model: &ModifiedDkModel) -> Result<ShootingSolution> {
    model.validate()?;
    let t0 = first_crossing_time(model)?;
    let x0 = Vector3::new(t0, model.s, model.rho);
    let opts = NewtonOptions {
        max_iter: 60,
        f_tol: 1e-13,
        fd_step: 1e-7,
    };
    let out = newton::solve(|v| modified_defect(model, v).map(|(g, _)| g), x0, opts)?;
    let (t, s, rho) = (out.x[0], out.x[1], out.x[2]);
    let diverged = Error::ShootingDiverged {
        t,
        s,
        rho,
        residual: out.residual,
    };
    if out.residual >= 1e-9 || t <= 0.0 {
        return Err(diverged);
    }
    // The connecting orbit must stay inside the new slab.
    let solved = ModifiedDkModel { s, rho, ..*model };
    let mu = solved.mu();
    if !(rho < mu && mu < 1.0) {
        return Err(Error::RegionOrdering(format!(
            "converged rho = {rho}, mu = {mu}"
        )));
    }
    let sys = solved.build()?;
    let (_, pa) = modified_defect(model, &out.x)?;
    let n = 4000;
    for i in 1..n {
        let x = sys.regions[1].local_flow(&pa, t * i as f64 / n as f64)[0];
        if x < rho - 1e-9 || x > mu + 1e-9 {
            return Err(diverged);
        }
    }
    Ok(ShootingSolution {
        s,
        rho,
        mu,
        t,
        residual: out.residual,
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_three_region_slopes() {
        let sol = solve_three_region(-0.085, 0.15, 0.05).unwrap();
        assert!((sol.m - 1.318).abs() < 5e-4);
        assert!((sol.k - 0.189).abs() < 5e-4);
        assert!((sol.l + 0.356).abs() < 5e-4);
        assert!(sol.residual < 1e-9);
    }

    #[test]
    fn centered_slab_gives_equal_slopes() {
        let (mu, eps) = (0.1, 0.05);
        let sol = solve_three_region(-mu, mu, eps).unwrap();
        let expect = mu / eps - PI / 2.0;
        assert!((sol.m - expect).abs() < 1e-12 && (sol.k - expect).abs() < 1e-12);
        assert!(sol.l.abs() < 1e-12);
        // Admissible iff (pi/2) eps < mu < ((pi + 4)/2) eps.
        assert!(solve_three_region(-0.07, 0.07, eps).is_err());
        assert!(solve_three_region(-0.18, 0.18, eps).is_err());
    }

    #[test]
    fn reference_sign_relations_and_hopf() {
        let rep = sign_relations(-0.085, 0.15, 0.05).unwrap();
        assert_eq!(rep.case, SignCase::WideRight);
        assert!(rep.holds);
        let model = ThreeRegionModel::new(-0.085, 0.15, rep.m, rep.k, 0.05).unwrap();
        let hc = classify_hopf_like(&model.params()).unwrap();
        assert_eq!(hc.location, Some(0.15));
        assert!(hc.sign_value < 0.0);
        assert_eq!(hc.criticality, Criticality::Supercritical);
    }

    #[test]
    fn hopf_branches() {
        let base = ThreeRegionParams {
            rho: -0.1,
            mu: 0.05,
            m: 0.2,
            k: 1.0,
            l: 0.5,
            n: 0.0,
            epsilon: 0.05,
        };
        let hc = classify_hopf_like(&base).unwrap();
        assert_eq!(hc.location, Some(-0.1));
        assert_eq!(hc.criticality, Criticality::Subcritical);
        let flat = ThreeRegionParams { l: 0.0, ..base };
        assert_eq!(
            classify_hopf_like(&flat).unwrap().criticality,
            Criticality::None
        );
        let tie = ThreeRegionParams { l: 0.2, ..base };
        assert!(classify_hopf_like(&tie).is_err());
    }

    #[test]
    fn dk_equilibrium_on_plane_connects() {
        let on = dk_connection_test(&DkModel::new(-2.25, 1e-3).unwrap()).unwrap();
        assert!(on.connect);
        assert!(on.gap < 1e-9);
        let off = dk_connection_test(&DkModel::new(2.0, 1e-3).unwrap()).unwrap();
        assert!(!off.connect && off.gap > 0.0);
        let zero = dk_connection_test(&DkModel::new(0.0, 1e-3).unwrap()).unwrap();
        assert!(!zero.connect);
        assert_eq!(zero.equilibrium, [0.0, 0.0, 0.0]);
    }
}
