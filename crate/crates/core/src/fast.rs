//! Layer problem: the planar `(x, y)` dynamics with `z` frozen.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::system::PwlSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    StableFocus,
    UnstableFocus,
    StableNode,
    UnstableNode,
    Saddle,
    Center,
    /// Sits on a switching line, where the linearization is undefined.
    NonHyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarRegion {
    pub id: String,
    pub matrix: [[f64; 2]; 2],
    pub offset: [f64; 2],
    pub lower_x: f64,
    pub upper_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarEquilibrium {
    pub point: [f64; 2],
    pub region: usize,
    pub kind: EquilibriumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastSubsystem {
    pub z: f64,
    pub regions: Vec<PlanarRegion>,
    pub equilibria: Vec<PlanarEquilibrium>,
}

fn classify(m: &Matrix2<f64>) -> EquilibriumKind {
    let tr = m.trace();
    let det = m.determinant();
    if det < 0.0 {
        EquilibriumKind::Saddle
    } else if tr == 0.0 {
        EquilibriumKind::Center
    } else if tr * tr < 4.0 * det {
        if tr < 0.0 {
            EquilibriumKind::StableFocus
        } else {
            EquilibriumKind::UnstableFocus
        }
    } else if tr < 0.0 {
        EquilibriumKind::StableNode
    } else {
        EquilibriumKind::UnstableNode
    }
}

/// Planar PWL system obtained by freezing `z`, with its equilibria.
pub fn fast_subsystem(system: &PwlSystem, z: f64) -> FastSubsystem {
    let mut regions = Vec::with_capacity(system.regions.len());
    let mut equilibria: Vec<PlanarEquilibrium> = Vec::new();
    for (i, r) in system.regions.iter().enumerate() {
        let a = &r.matrix;
        let m = Matrix2::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        let c = Vector2::new(r.offset[0] + a[(0, 2)] * z, r.offset[1] + a[(1, 2)] * z);
        regions.push(PlanarRegion {
            id: r.id.clone(),
            matrix: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            offset: [c[0], c[1]],
            lower_x: r.lower_x,
            upper_x: r.upper_x,
        });
        let Some(inv) = m.try_inverse() else { continue };
        let q = -(inv * c);
        if !r.contains_x(q[0]) {
            continue;
        }
        let on_line = [r.lower_x, r.upper_x]
            .iter()
            .filter(|b| b.is_finite())
            .any(|b| (q[0] - b).abs() <= 1e-12 * (1.0 + b.abs()));
        if on_line
            && equilibria
                .iter()
                .any(|e| (e.point[0] - q[0]).abs() <= 1e-12 * (1.0 + q[0].abs()))
        {
            continue;
        }
        let kind = if on_line {
            EquilibriumKind::NonHyperbolic
        } else {
            classify(&m)
        };
        equilibria.push(PlanarEquilibrium {
            point: [q[0], q[1]],
            region: i,
            kind,
        });
    }
    FastSubsystem {
        z,
        regions,
        equilibria,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TwoRegionModel;

    #[test]
    fn two_region_layer_equilibria() {
        let m = 1.0;
        let sys = TwoRegionModel::new(m, 0.1, 0.2).unwrap().build().unwrap();
        let below = fast_subsystem(&sys, -0.5);
        assert_eq!(below.equilibria.len(), 1);
        let e = &below.equilibria[0];
        assert_eq!(e.point, [-0.5, 0.5]);
        assert_eq!(e.kind, EquilibriumKind::StableFocus);

        let above = fast_subsystem(&sys, 0.5);
        assert_eq!(above.equilibria.len(), 1);
        assert_eq!(above.equilibria[0].kind, EquilibriumKind::UnstableFocus);

        let at = fast_subsystem(&sys, 0.0);
        assert_eq!(at.equilibria.len(), 1);
        assert_eq!(at.equilibria[0].point, [0.0, 0.0]);
        assert_eq!(at.equilibria[0].kind, EquilibriumKind::NonHyperbolic);
    }
}
