//! Damped Newton iteration for three equations in three unknowns.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Stop once the residual norm falls below this.
    pub f_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            f_tol: 1e-13,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOutcome {
    pub x: Vector3<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference Jacobian.
pub fn fd_jacobian<F>(f: &F, x: &Vector3<f64>, rel_step: f64) -> Result<Matrix3<f64>>
where
    F: Fn(&Vector3<f64>) -> Result<Vector3<f64>>,
{
    let mut jac = Matrix3::zeros();
    for j in 0..3 {
        let h = rel_step * x[j].abs().max(1.0);
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let col = (f(&xp)? - f(&xm)?) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Newton with backtracking: halves the step until the residual decreases.
/// Evaluation errors at trial points count as a failed decrease.
pub fn solve<F>(f: F, x0: Vector3<f64>, opts: NewtonOptions) -> Result<NewtonOutcome>
where
    F: Fn(&Vector3<f64>) -> Result<Vector3<f64>>,
{
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut res = fx.norm();
    for it in 0..opts.max_iter {
        if res < opts.f_tol {
            return Ok(NewtonOutcome {
                x,
                residual: res,
                iterations: it,
                converged: true,
            });
        }
        let jac = fd_jacobian(&f, &x, opts.fd_step)?;
        let det = jac.determinant();
        let scale = jac.abs().max().powi(3);
        if det.abs() <= 1e-10 * scale || !det.is_finite() {
            return Err(Error::SingularJacobian(det));
        }
        let step = jac.lu().solve(&fx).ok_or(Error::SingularJacobian(det))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = x - step * lambda;
            if let Ok(ft) = f(&trial) {
                let rt = ft.norm();
                if rt.is_finite() && rt < res {
                    x = trial;
                    fx = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Ok(NewtonOutcome {
                x,
                residual: res,
                iterations: it,
                converged: res < opts.f_tol,
            });
        }
    }
    Ok(NewtonOutcome {
        x,
        residual: res,
        iterations: opts.max_iter,
        converged: res < opts.f_tol,
    })
}
