use nalgebra::Vector3;
use proptest::prelude::*;
use pwlhopf::integrate::integrate;
use pwlhopf::oracle::dopri;
use pwlhopf::{DkModel, PwlSystem, TwoRegionModel};

fn relative_error(sys: &PwlSystem, p: Vector3<f64>, t: f64) -> f64 {
    let exact = integrate(sys, &p, t, None).unwrap().final_state();
    let reference = dopri(sys, &p, t, 1e-13);
    (exact - reference).norm() / (1.0 + reference.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_region_matches_runge_kutta(m in 0.1..1.9f64, k in 0.1..1.9f64, eps in 0.01..0.3f64,
                                      x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..0.0f64, t in 1.0..20.0f64) {
        let sys = TwoRegionModel::new(m, k, eps).unwrap().build().unwrap();
        let err = relative_error(&sys, Vector3::new(x, y, z), t);
        prop_assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn dk_matches_runge_kutta(i in -3.0..3.0f64, eps in 1e-3..1e-1f64,
                              x in -2.0..2.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64, t in 1.0..30.0f64) {
        let sys = DkModel::new(i, eps).unwrap().build().unwrap();
        let err = relative_error(&sys, Vector3::new(x, y, z), t);
        prop_assert!(err < 1e-8, "relative error {err}");
    }
}
