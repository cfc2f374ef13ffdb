//! Closed-form flows and delayed-loss-of-stability diagnostics for
//! piecewise-linear slow-fast systems in three dimensions.
//!
//! Each model is a stack of affine regions separated by planes `x = const`.
//! Inside a region the flow is exact, so trajectories are sequences of
//! analytic arcs joined at bisected crossing events.

pub mod connection;
pub mod eigen;
pub mod error;
pub mod fast;
pub mod flow;
pub mod integrate;
pub mod manifolds;
pub mod models;
pub mod newton;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod system;
pub mod wayinout;

pub use error::{Error, Result};
pub use flow::{local_flow, ArcCoeffs, RegionSpec, StateVec};
pub use integrate::{integrate, Trajectory, TrajectoryArc};
pub use manifolds::{canonical_slow_manifolds, SlowManifoldRay};
pub use models::{
    BufferModel, DkModel, ModelSpec, ModifiedDkModel, ThreeRegionModel, TwoRegionModel,
};
pub use system::{ModelKind, PwlSystem};
pub use wayinout::{Passage, WorkPrecision};
