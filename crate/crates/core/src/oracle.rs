//! Independent reference integrator: adaptive Dormand-Prince 5(4) on the
//! full piecewise vector field, unaware of regions or closed forms.

use crate::flow::StateVec;
use crate::system::PwlSystem;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `p0` over `[0, t_end]` with mixed absolute/relative
/// tolerance `tol`.
pub fn dopri(system: &PwlSystem, p0: &StateVec, t_end: f64, tol: f64) -> StateVec {
    let f = |p: &StateVec| system.field(p);
    let mut t = 0.0;
    let mut y = *p0;
    let mut h = (t_end * 1e-3).clamp(1e-8, 1e-2);
    while t < t_end {
        h = h.min(t_end - t);
        let mut k = [StateVec::zeros(); 7];
        k[0] = f(&y);
        for s in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                yi += kj * (h * A[s][j]);
            }
            k[s] = f(&yi);
        }
        let mut y5 = y;
        let mut err = StateVec::zeros();
        for s in 0..7 {
            y5 += k[s] * (h * B5[s]);
            err += k[s] * (h * (B5[s] - B4[s]));
        }
        let scale = |i: usize| tol * (1.0 + y[i].abs().max(y5[i].abs()));
        let e = (0..3)
            .map(|i| (err[i] / scale(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / 3f64.sqrt();
        if e <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}
