//! Closed-form eigenstructure of 3x3 matrices with one real eigenvalue and a
//! complex-conjugate pair.

use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral configuration of a region matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralType {
    /// Real eigenvalue and focus real part have opposite signs.
    SaddleFocus,
    /// Real eigenvalue and focus real part share a sign.
    NodeFocus,
    /// The focus pair is purely imaginary.
    SaddleCenter,
    /// The real eigenvalue is zero (slow variable is a pure drift).
    ZeroSlow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenStructure {
    pub lambda_slow: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Unit eigenvector of `lambda_slow`.
    pub v_slow: Vector3<f64>,
    /// Real and imaginary parts of the eigenvector of `alpha + i beta`.
    pub plane_basis: [Vector3<f64>; 2],
    pub kind: SpectralType,
    /// Coefficients `(c2, c1, c0)` of the monic characteristic polynomial
    /// `l^3 + c2 l^2 + c1 l + c0`.
    pub charpoly: [f64; 3],
}

impl EigenStructure {
    /// Absolute residuals `|p(lambda)|` and `|p(alpha + i beta)|` of the
    /// characteristic polynomial.
    pub fn residuals(&self) -> (f64, f64) {
        let [c2, c1, c0] = self.charpoly;
        let real = ((self.lambda_slow + c2) * self.lambda_slow + c1) * self.lambda_slow + c0;
        let z = Complex::new(self.alpha, self.beta);
        let cplx = ((z + c2) * z + c1) * z + c0;
        (real.abs(), cplx.norm())
    }

    /// Columns `[v_slow, Re w, Im w]`.
    pub fn basis(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.v_slow, self.plane_basis[0], self.plane_basis[1]])
    }
}

fn charpoly(a: &Matrix3<f64>) -> [f64; 3] {
    let tr = a.trace();
    let minors = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
        - a[(0, 2)] * a[(2, 0)]
        + a[(1, 1)] * a[(2, 2)]
        - a[(1, 2)] * a[(2, 1)];
    [-tr, minors, -a.determinant()]
}

enum CubicRoots {
    /// One real root and a complex pair.
    OneReal(f64),
    /// Three real roots.
    ThreeReal([f64; 3]),
}

fn polish(c: [f64; 3], mut x: f64) -> f64 {
    let [a, b, c0] = c;
    for _ in 0..2 {
        let f = ((x + a) * x + b) * x + c0;
        let df = (3.0 * x + 2.0 * a) * x + b;
        if df != 0.0 {
            x -= f / df;
        }
    }
    x
}

fn cubic_roots(c: [f64; 3]) -> CubicRoots {
    let [a, b, c0] = c;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc >= 0.0 {
        // Cube root of larger magnitude avoids cancellation.
        let u = (-q / 2.0 - q.signum() * disc.sqrt()).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        CubicRoots::OneReal(polish(c, t - a / 3.0))
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0).acos();
        let root = |j: f64| {
            polish(
                c,
                2.0 * r * ((phi - 2.0 * std::f64::consts::PI * j) / 3.0).cos() - a / 3.0,
            )
        };
        CubicRoots::ThreeReal([root(0.0), root(1.0), root(2.0)])
    }
}

fn null_vector_real(m: &Matrix3<f64>) -> Vector3<f64> {
    let rows = [
        m.row(0).transpose(),
        m.row(1).transpose(),
        m.row(2).transpose(),
    ];
    let mut best = Vector3::zeros();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = rows[i].cross(&rows[j]);
        if c.norm() > best.norm() {
            best = c;
        }
    }
    best.normalize()
}

fn null_vector_complex(m: &Matrix3<Complex<f64>>) -> Vector3<Complex<f64>> {
    let row = |i: usize| Vector3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)]);
    let cross = |u: Vector3<Complex<f64>>, v: Vector3<Complex<f64>>| {
        Vector3::new(
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        )
    };
    let norm = |v: &Vector3<Complex<f64>>| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut best = Vector3::zeros();
    let mut best_norm = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(row(i), row(j));
        let n = norm(&c);
        if n > best_norm {
            best = c;
            best_norm = n;
        }
    }
    best / Complex::new(best_norm, 0.0)
}

/// Eigenstructure of a matrix with one real eigenvalue and a focus pair.
pub fn eigenstructure(a: &Matrix3<f64>) -> Result<EigenStructure> {
    let c = charpoly(a);
    let scale = 1.0 + a.abs().max();
    let lambda = match cubic_roots(c) {
        CubicRoots::OneReal(l) => l,
        CubicRoots::ThreeReal(r) => {
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-10 * scale;
            if close(r[0], r[1]) || close(r[0], r[2]) || close(r[1], r[2]) {
                return Err(Error::DegenerateSpectrum);
            }
            return Err(Error::NoFocusBlock);
        }
    };
    // Deflate: p(x) = (x - lambda)(x^2 + e1 x + e0).
    let e1 = c[0] + lambda;
    let e0 = c[1] + e1 * lambda;
    let alpha = -e1 / 2.0;
    let beta2 = e0 - alpha * alpha;
    if beta2 <= (1e-10 * scale).powi(2) {
        return Err(Error::DegenerateSpectrum);
    }
    let beta = beta2.sqrt();

    let v_slow = null_vector_real(&(a - Matrix3::identity() * lambda));
    let mu = Complex::new(alpha, beta);
    let shifted = a.map(|x| Complex::new(x, 0.0)) - Matrix3::identity() * mu;
    let w = null_vector_complex(&shifted);
    let plane_basis = [w.map(|c| c.re), w.map(|c| c.im)];

    let tol = 1e-12 * scale;
    let kind = if lambda.abs() <= tol {
        SpectralType::ZeroSlow
    } else if alpha.abs() <= tol {
        SpectralType::SaddleCenter
    } else if lambda * alpha < 0.0 {
        SpectralType::SaddleFocus
    } else {
        SpectralType::NodeFocus
    };
    Ok(EigenStructure {
        lambda_slow: lambda,
        alpha,
        beta,
        v_slow,
        plane_basis,
        kind,
        charpoly: c,
    })
}
