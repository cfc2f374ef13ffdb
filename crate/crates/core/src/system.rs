//! Ordered collections of affine regions forming a continuous PWL vector field.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{RegionSpec, StateVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TwoRegion,
    ThreeRegion,
    Buffer,
    Dk,
    ModifiedDk,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TwoRegion => "two-region",
            ModelKind::ThreeRegion => "three-region",
            ModelKind::Buffer => "buffer",
            ModelKind::Dk => "dk",
            ModelKind::ModifiedDk => "modified-dk",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwlSystem {
    pub regions: Vec<RegionSpec>,
    pub epsilon: f64,
    pub kind: ModelKind,
}

impl PwlSystem {
    /// Validates slab adjacency and field continuity on every shared plane.
    pub fn new(regions: Vec<RegionSpec>, epsilon: f64, kind: ModelKind) -> Result<Self> {
        let (Some(first), Some(last)) = (regions.first(), regions.last()) else {
            return Err(Error::InvalidRegion("system has no regions".into()));
        };
        if first.lower_x != f64::NEG_INFINITY || last.upper_x != f64::INFINITY {
            return Err(Error::InvalidRegion(
                "regions must cover the whole x-axis".into(),
            ));
        }
        for pair in regions.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.upper_x != b.lower_x {
                return Err(Error::InvalidRegion(format!(
                    "{} ends at {} but {} starts at {}",
                    a.id, a.upper_x, b.id, b.lower_x
                )));
            }
            let x = a.upper_x;
            let mismatch = continuity_mismatch(a, b, x);
            if mismatch > 1e-12 * (1.0 + x.abs()) {
                return Err(Error::Discontinuous {
                    boundary: x,
                    mismatch,
                });
            }
        }
        Ok(Self {
            regions,
            epsilon,
            kind,
        })
    }

    /// Switching planes in increasing order.
    pub fn boundaries(&self) -> Vec<f64> {
        self.regions[1..].iter().map(|r| r.lower_x).collect()
    }

    pub fn region_index(&self, id: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.id == id)
    }

    /// Region containing `p`. On a switching plane the side the field points
    /// into wins; a tangential field picks the upper side.
    pub fn locate(&self, p: &StateVec) -> usize {
        let x = p[0];
        let i = self
            .regions
            .iter()
            .position(|r| x < r.upper_x)
            .unwrap_or(self.regions.len() - 1);
        if i > 0 && x == self.regions[i].lower_x && self.regions[i].field(p)[0] < 0.0 {
            i - 1
        } else {
            i
        }
    }

    pub fn field(&self, p: &StateVec) -> StateVec {
        self.regions[self.locate(p)].field(p)
    }

    /// Largest field mismatch over all switching planes.
    pub fn continuity_defect(&self) -> f64 {
        self.regions
            .windows(2)
            .map(|w| continuity_mismatch(&w[0], &w[1], w[0].upper_x))
            .fold(0.0, f64::max)
    }
}

/// Field disagreement at three non-collinear points of the plane `{x = x0}`.
fn continuity_mismatch(a: &RegionSpec, b: &RegionSpec, x0: f64) -> f64 {
    [
        Vector3::new(x0, 0.0, 0.0),
        Vector3::new(x0, 1.0, 0.0),
        Vector3::new(x0, 0.0, 1.0),
    ]
    .iter()
    .map(|p| (a.field(p) - b.field(p)).norm())
    .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn drift(id: &str, s: f64, n: f64, lo: f64, hi: f64) -> RegionSpec {
        RegionSpec::new(
            id,
            Matrix3::new(s, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0),
            Vector3::new(n, 0.0, 0.1),
            lo,
            hi,
        )
        .unwrap()
    }

    #[test]
    fn discontinuous_field_rejected() {
        let l = drift("L", -1.0, 0.0, f64::NEG_INFINITY, 0.0);
        let r = drift("R", 0.5, 0.3, 0.0, f64::INFINITY);
        let err = PwlSystem::new(vec![l, r], 0.1, ModelKind::TwoRegion).unwrap_err();
        assert!(matches!(err, Error::Discontinuous { .. }));
    }

    #[test]
    fn gap_between_slabs_rejected() {
        let l = drift("L", -1.0, 0.0, f64::NEG_INFINITY, 0.0);
        let r = drift("R", 0.5, 0.0, 0.1, f64::INFINITY);
        assert!(PwlSystem::new(vec![l, r], 0.1, ModelKind::TwoRegion).is_err());
    }

    #[test]
    fn locate_uses_field_direction_on_boundary() {
        let l = drift("L", -1.0, 0.0, f64::NEG_INFINITY, 0.0);
        let r = drift("R", 0.5, 0.0, 0.0, f64::INFINITY);
        let sys = PwlSystem::new(vec![l, r], 0.1, ModelKind::TwoRegion).unwrap();
        // x' = -y on the plane.
        assert_eq!(sys.locate(&Vector3::new(0.0, -1.0, 0.0)), 1);
        assert_eq!(sys.locate(&Vector3::new(0.0, 1.0, 0.0)), 0);
        assert_eq!(sys.locate(&Vector3::new(-3.0, 1.0, 0.0)), 0);
        assert_eq!(sys.boundaries(), vec![0.0]);
    }
}
