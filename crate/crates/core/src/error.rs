use thiserror::Error;

/// Errors raised by the solvers and builders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("slope at stability boundary: |4 - s^2| = {0:e}")]
    StabilityBoundarySlope(f64),
    #[error("no focus block: matrix has three real eigenvalues")]
    NoFocusBlock,
    #[error("degenerate spectrum: repeated eigenvalues")]
    DegenerateSpectrum,
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("discontinuous vector field at x = {boundary}: mismatch {mismatch:e}")]
    Discontinuous { boundary: f64, mismatch: f64 },
    #[error("event budget exceeded")]
    EventBudgetExceeded,
    #[error("out of region: flowed point x = {x} outside [{lower}, {upper}]")]
    OutOfRegion { x: f64, lower: f64, upper: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("slopes out of admissible range: m = {m}, k = {k}")]
    SlopesOutOfRange { m: f64, k: f64 },
    #[error("connection verification failed: residual {0:e}")]
    VerificationFailed(f64),
    #[error("continuation stalled at eps = {eps}: residual {residual:e}")]
    ContinuationStalled { eps: f64, residual: f64 },
    #[error("singular jacobian (|det| = {0:e})")]
    SingularJacobian(f64),
    #[error("no isolated equilibrium: 1 - 1/a - 1/b = 0")]
    NoIsolatedEquilibrium,
    #[error("shooting diverged at (t, s, rho) = ({t}, {s}, {rho}): residual {residual:e}")]
    ShootingDiverged {
        t: f64,
        s: f64,
        rho: f64,
        residual: f64,
    },
    #[error("region ordering violated: {0}")]
    RegionOrdering(String),
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("negative amplitude radicand {0:e}")]
    NegativeRadicand(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
