//! Builders for the concrete slow-fast systems.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::eigen::{eigenstructure, SpectralType};
use crate::error::{Error, Result};
use crate::flow::{RegionSpec, StateVec};
use crate::system::{ModelKind, PwlSystem};

const NEG_INF: f64 = f64::NEG_INFINITY;
const POS_INF: f64 = f64::INFINITY;

fn drift_region(id: &str, s: f64, n: f64, eps: f64, lo: f64, hi: f64) -> Result<RegionSpec> {
    RegionSpec::new(
        id,
        Matrix3::new(s, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0),
        Vector3::new(n, 0.0, eps),
        lo,
        hi,
    )
}

fn check_slope(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must lie in (0, 2)"
        )))
    }
}

fn check_eps(eps: f64, strict: bool) -> Result<()> {
    let ok = eps.is_finite() && if strict { eps > 0.0 } else { eps >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon = {eps} out of range"
        )))
    }
}

/// `x' = f(x) - y`, `y' = x - z`, `z' = eps` with `f = -m x` (x < 0), `k x` (x > 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoRegionModel {
    pub m: f64,
    pub k: f64,
    pub epsilon: f64,
}

impl TwoRegionModel {
    pub fn new(m: f64, k: f64, epsilon: f64) -> Result<Self> {
        let model = Self { m, k, epsilon };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_slope("m", self.m)?;
        check_slope("k", self.k)?;
        check_eps(self.epsilon, false)
    }

    pub fn build(&self) -> Result<PwlSystem> {
        self.validate()?;
        let eps = self.epsilon;
        PwlSystem::new(
            vec![
                drift_region("L", -self.m, 0.0, eps, NEG_INF, 0.0)?,
                drift_region("R", self.k, 0.0, eps, 0.0, POS_INF)?,
            ],
            eps,
            ModelKind::TwoRegion,
        )
    }

    /// Attracting ray meets the switching plane at `(0, -eps, m eps)`.
    pub fn attracting_point(&self) -> StateVec {
        Vector3::new(0.0, -self.epsilon, self.m * self.epsilon)
    }

    /// Repelling ray meets the switching plane at `(0, -eps, -k eps)`.
    pub fn repelling_point(&self) -> StateVec {
        Vector3::new(0.0, -self.epsilon, -self.k * self.epsilon)
    }
}

/// Three-region variant: a central slab `rho < x < mu` with slope `l` and
/// offset `n` fixed by continuity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeRegionModel {
    pub rho: f64,
    pub mu: f64,
    pub m: f64,
    pub k: f64,
    pub epsilon: f64,
}

/// Full parameter set of a three-region system including the derived
/// central slope and offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeRegionParams {
    pub rho: f64,
    pub mu: f64,
    pub m: f64,
    pub k: f64,
    pub l: f64,
    pub n: f64,
    pub epsilon: f64,
}

pub fn central_slope(rho: f64, mu: f64, m: f64, k: f64) -> f64 {
    (m * rho + k * mu) / (mu - rho)
}

pub fn central_offset(rho: f64, mu: f64, m: f64, k: f64) -> f64 {
    -rho * mu * (k + m) / (mu - rho)
}

impl ThreeRegionModel {
    pub fn new(rho: f64, mu: f64, m: f64, k: f64, epsilon: f64) -> Result<Self> {
        let model = Self {
            rho,
            mu,
            m,
            k,
            epsilon,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn l(&self) -> f64 {
        central_slope(self.rho, self.mu, self.m, self.k)
    }

    pub fn n(&self) -> f64 {
        central_offset(self.rho, self.mu, self.m, self.k)
    }

    pub fn params(&self) -> ThreeRegionParams {
        ThreeRegionParams {
            rho: self.rho,
            mu: self.mu,
            m: self.m,
            k: self.k,
            l: self.l(),
            n: self.n(),
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho < 0.0 && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need rho < 0 < mu, got rho = {}, mu = {}",
                self.rho, self.mu
            )));
        }
        check_slope("m", self.m)?;
        check_slope("k", self.k)?;
        check_eps(self.epsilon, false)
    }

    pub fn build(&self) -> Result<PwlSystem> {
        self.validate()?;
        let eps = self.epsilon;
        PwlSystem::new(
            vec![
                drift_region("L", -self.m, 0.0, eps, NEG_INF, self.rho)?,
                drift_region("C", self.l(), self.n(), eps, self.rho, self.mu)?,
                drift_region("R", self.k, 0.0, eps, self.mu, POS_INF)?,
            ],
            eps,
            ModelKind::ThreeRegion,
        )
    }

    /// Attracting ray at `{x = rho}`: `(rho, -m rho - eps, rho + m eps)`.
    pub fn attracting_point(&self) -> StateVec {
        let (r, m, e) = (self.rho, self.m, self.epsilon);
        Vector3::new(r, -m * r - e, r + m * e)
    }

    /// Repelling ray at `{x = mu}`: `(mu, k mu - eps, mu - k eps)`.
    pub fn repelling_point(&self) -> StateVec {
        let (u, k, e) = (self.mu, self.k, self.epsilon);
        Vector3::new(u, k * u - e, u - k * e)
    }
}

/// Three-region system with `z' = eps (a - x)`, which places an equilibrium
/// on the repelling slow manifold. `rho = -k eps - eps^2`, `mu = m eps - eps^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufferModel {
    pub a: f64,
    pub m: f64,
    pub k: f64,
    pub epsilon: f64,
}

impl BufferModel {
    pub fn new(a: f64, m: f64, k: f64, epsilon: f64) -> Result<Self> {
        let model = Self { a, m, k, epsilon };
        model.validate()?;
        Ok(model)
    }

    pub fn rho(&self) -> f64 {
        -self.k * self.epsilon - self.epsilon * self.epsilon
    }

    pub fn mu(&self) -> f64 {
        self.m * self.epsilon - self.epsilon * self.epsilon
    }

    pub fn l(&self) -> f64 {
        -self.epsilon
    }

    pub fn n(&self) -> f64 {
        central_offset(self.rho(), self.mu(), self.m, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a == 0.0 || self.a == 1.0 || !self.a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "a = {} must avoid 0 and 1",
                self.a
            )));
        }
        check_slope("m", self.m)?;
        check_slope("k", self.k)?;
        check_eps(self.epsilon, true)?;
        if !(self.rho() < 0.0 && self.mu() > 0.0) {
            return Err(Error::RegionOrdering(format!(
                "rho = {} and mu = {} must straddle 0",
                self.rho(),
                self.mu()
            )));
        }
        Ok(())
    }

    fn region(&self, id: &str, s: f64, n: f64, lo: f64, hi: f64) -> Result<RegionSpec> {
        let e = self.epsilon;
        RegionSpec::new(
            id,
            Matrix3::new(s, -1.0, 0.0, 1.0, 0.0, -1.0, -e, 0.0, 0.0),
            Vector3::new(n, 0.0, e * self.a),
            lo,
            hi,
        )
    }

    /// Builds the system and checks the spectral configuration: attracting
    /// focus on the left, repelling focus on the right, saddle-center in the
    /// middle.
    pub fn build(&self) -> Result<PwlSystem> {
        self.validate()?;
        let (rho, mu) = (self.rho(), self.mu());
        let regions = vec![
            self.region("L", -self.m, 0.0, NEG_INF, rho)?,
            self.region("C", self.l(), self.n(), rho, mu)?,
            self.region("R", self.k, 0.0, mu, POS_INF)?,
        ];
        let (l, c, r) = (regions[0].eigen(), regions[1].eigen(), regions[2].eigen());
        if !(l.alpha < 0.0 && r.alpha > 0.0 && c.kind == SpectralType::SaddleCenter) {
            return Err(Error::InvalidParameter(format!(
                "wrong spectral configuration: alpha_L = {}, alpha_C = {}, alpha_R = {}",
                l.alpha, c.alpha, r.alpha
            )));
        }
        PwlSystem::new(regions, self.epsilon, ModelKind::Buffer)
    }
}

fn default_a() -> f64 {
    0.8
}
fn default_eta() -> f64 {
    0.5
}
fn default_b() -> f64 {
    0.5
}

/// Piecewise-linear elliptic burster with `f(x) = -x + |x + 1| - |x - 1|`:
/// `x' = f(x) - y - z + I`, `y' = eta (x - a y)`, `z' = eps (x - b z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkModel {
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(rename = "I")]
    pub i_app: f64,
    pub epsilon: f64,
}

#[allow(clippy::too_many_arguments)]
fn dk_region(
    id: &str,
    slope: f64,
    offset: f64,
    eta: f64,
    a: f64,
    b: f64,
    eps: f64,
    lo: f64,
    hi: f64,
) -> Result<RegionSpec> {
    RegionSpec::new(
        id,
        Matrix3::new(slope, -1.0, -1.0, eta, -eta * a, 0.0, eps, 0.0, -eps * b),
        Vector3::new(offset, 0.0, 0.0),
        lo,
        hi,
    )
}

/// Equilibrium of the middle-region field, `-I / (1 - 1/a - 1/b) (1, 1/a, 1/b)`.
pub fn dk_equilibrium(a: f64, b: f64, i_app: f64) -> Result<StateVec> {
    let den = 1.0 - 1.0 / a - 1.0 / b;
    if den.abs() < 1e-14 {
        return Err(Error::NoIsolatedEquilibrium);
    }
    let x = -i_app / den;
    Ok(Vector3::new(x, x / a, x / b))
}

impl DkModel {
    /// Default `(a, eta, b) = (0.8, 0.5, 0.5)`.
    pub fn new(i_app: f64, epsilon: f64) -> Result<Self> {
        let model = Self {
            a: default_a(),
            eta: default_eta(),
            b: default_b(),
            i_app,
            epsilon,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.epsilon, false)?;
        for (name, v) in [
            ("a", self.a),
            ("eta", self.eta),
            ("b", self.b),
            ("I", self.i_app),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.a == 0.0 || self.b == 0.0 {
            return Err(Error::InvalidParameter("a and b must be non-zero".into()));
        }
        Ok(())
    }

    pub fn equilibrium(&self) -> Result<StateVec> {
        dk_equilibrium(self.a, self.b, self.i_app)
    }

    /// Non-fatal remarks: the equilibrium should be real in the middle
    /// region, with virtual images in the lateral ones.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Ok(e) = self.equilibrium() {
            if e[0] <= -1.0 || e[0] >= 1.0 {
                out.push(format!(
                    "equilibrium x = {} lies outside the middle region",
                    e[0]
                ));
            }
        }
        out
    }

    pub fn build(&self) -> Result<PwlSystem> {
        self.validate()?;
        let (a, eta, b, eps, i) = (self.a, self.eta, self.b, self.epsilon, self.i_app);
        PwlSystem::new(
            vec![
                dk_region("L", -1.0, i - 2.0, eta, a, b, eps, NEG_INF, -1.0)?,
                dk_region("M", 1.0, i, eta, a, b, eps, -1.0, 1.0)?,
                dk_region("R", -1.0, i + 2.0, eta, a, b, eps, 1.0, POS_INF)?,
            ],
            eps,
            ModelKind::Dk,
        )
    }
}

/// DK model with an extra slab `rho < x < mu` of slope `s` left of the middle
/// region; `mu = (rho (s + 1) + 2) / (s - 1)` keeps `f` continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedDkModel {
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(rename = "I")]
    pub i_app: f64,
    pub epsilon: f64,
    pub s: f64,
    pub rho: f64,
    /// When set, `eta = 1/a + eta1 eps` overrides `eta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
}

pub fn modified_dk_mu(s: f64, rho: f64) -> f64 {
    (rho * (s + 1.0) + 2.0) / (s - 1.0)
}

impl ModifiedDkModel {
    pub fn new(i_app: f64, epsilon: f64, s: f64, rho: f64, eta1: Option<f64>) -> Result<Self> {
        let model = Self {
            a: default_a(),
            eta: default_eta(),
            b: default_b(),
            i_app,
            epsilon,
            s,
            rho,
            eta1,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn effective_eta(&self) -> f64 {
        match self.eta1 {
            Some(e1) => 1.0 / self.a + e1 * self.epsilon,
            None => self.eta,
        }
    }

    pub fn mu(&self) -> f64 {
        modified_dk_mu(self.s, self.rho)
    }

    pub fn classical(&self) -> DkModel {
        DkModel {
            a: self.a,
            eta: self.effective_eta(),
            b: self.b,
            i_app: self.i_app,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.classical().validate()?;
        if self.s == 1.0 || !self.s.is_finite() || !self.rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "s = {} must be finite and differ from 1",
                self.s
            )));
        }
        let mu = self.mu();
        if !(self.rho < mu && mu < 1.0) {
            return Err(Error::RegionOrdering(format!(
                "need rho < mu < 1, got rho = {}, mu = {mu}",
                self.rho
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<PwlSystem> {
        self.validate()?;
        let (a, b, eps, i) = (self.a, self.b, self.epsilon, self.i_app);
        let eta = self.effective_eta();
        let (rho, mu, s) = (self.rho, self.mu(), self.s);
        PwlSystem::new(
            vec![
                dk_region("L", -1.0, i - 2.0, eta, a, b, eps, NEG_INF, rho)?,
                dk_region("N", s, i - 2.0 - (1.0 + s) * rho, eta, a, b, eps, rho, mu)?,
                dk_region("M", 1.0, i, eta, a, b, eps, mu, 1.0)?,
                dk_region("R", -1.0, i + 2.0, eta, a, b, eps, 1.0, POS_INF)?,
            ],
            eps,
            ModelKind::ModifiedDk,
        )
    }
}

/// Serializable model descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    TwoRegion(TwoRegionModel),
    ThreeRegion(ThreeRegionModel),
    Buffer(BufferModel),
    Dk(DkModel),
    ModifiedDk(ModifiedDkModel),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::TwoRegion(_) => ModelKind::TwoRegion,
            ModelSpec::ThreeRegion(_) => ModelKind::ThreeRegion,
            ModelSpec::Buffer(_) => ModelKind::Buffer,
            ModelSpec::Dk(_) => ModelKind::Dk,
            ModelSpec::ModifiedDk(_) => ModelKind::ModifiedDk,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            ModelSpec::TwoRegion(m) => m.epsilon,
            ModelSpec::ThreeRegion(m) => m.epsilon,
            ModelSpec::Buffer(m) => m.epsilon,
            ModelSpec::Dk(m) => m.epsilon,
            ModelSpec::ModifiedDk(m) => m.epsilon,
        }
    }

    /// Same model at a different timescale ratio. Three-region and buffer
    /// slopes are kept as given; re-solve the connection if it must hold.
    pub fn with_epsilon(&self, eps: f64) -> Self {
        let mut out = *self;
        match &mut out {
            ModelSpec::TwoRegion(m) => m.epsilon = eps,
            ModelSpec::ThreeRegion(m) => m.epsilon = eps,
            ModelSpec::Buffer(m) => m.epsilon = eps,
            ModelSpec::Dk(m) => m.epsilon = eps,
            ModelSpec::ModifiedDk(m) => m.epsilon = eps,
        }
        out
    }

    pub fn build(&self) -> Result<PwlSystem> {
        match self {
            ModelSpec::TwoRegion(m) => m.build(),
            ModelSpec::ThreeRegion(m) => m.build(),
            ModelSpec::Buffer(m) => m.build(),
            ModelSpec::Dk(m) => m.build(),
            ModelSpec::ModifiedDk(m) => m.build(),
        }
    }
}

/// Middle-region eigenvalues of the DK fast-slow block at one `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOrderRow {
    pub epsilon: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOrderReport {
    pub rows: Vec<EigenOrderRow>,
    /// Limit of `lambda / eps` estimated by Richardson extrapolation of the
    /// two smallest `eps` values.
    pub lambda_over_eps: f64,
    /// Limit of `alpha` estimated the same way.
    pub alpha_limit: f64,
    /// True when `|alpha| <= C |lambda|` with `C = 10` at the smallest `eps`.
    pub same_order: bool,
}

/// Middle-region eigenvalue scaling over an `eps` ladder. With `eta1` set,
/// `eta = 1/a + eta1 eps` follows each `eps`.
pub fn dk_eigen_orders(
    a: f64,
    eta: f64,
    b: f64,
    eta1: Option<f64>,
    ladder: &[f64],
) -> Result<EigenOrderReport> {
    if ladder.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: ladder.len(),
        });
    }
    let mut rows = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let eta_e = eta1.map_or(eta, |e1| 1.0 / a + e1 * eps);
        let m = Matrix3::new(1.0, -1.0, -1.0, eta_e, -eta_e * a, 0.0, eps, 0.0, -eps * b);
        let es = eigenstructure(&m)?;
        rows.push(EigenOrderRow {
            epsilon: eps,
            lambda: es.lambda_slow,
            alpha: es.alpha,
            beta: es.beta,
        });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|p, q| p.epsilon.total_cmp(&q.epsilon));
    let (r0, r1) = (sorted[0], sorted[1]);
    // Linear extrapolation in eps to eps = 0.
    let extrap = |f0: f64, f1: f64| f0 - (f1 - f0) * r0.epsilon / (r1.epsilon - r0.epsilon);
    let lambda_over_eps = extrap(r0.lambda / r0.epsilon, r1.lambda / r1.epsilon);
    let alpha_limit = extrap(r0.alpha, r1.alpha);
    let same_order = r0.alpha.abs() <= 10.0 * r0.lambda.abs();
    Ok(EigenOrderReport {
        rows,
        lambda_over_eps,
        alpha_limit,
        same_order,
    })
}
