use cvsr_core::MU_0;
use cvsr_core::material::MaterialCurve;
use proptest::prelude::*;

fn curves() -> Vec<MaterialCurve> {
    vec![
        MaterialCurve::default(),
        MaterialCurve::analytic(1.34, 2500.0, 1.0).unwrap(),
        MaterialCurve::analytic(1.34, 2500.0, 3.0).unwrap(),
        MaterialCurve::analytic(1.8, 8000.0, 0.8).unwrap(),
    ]
}

proptest! {
    #[test]
    fn inverse_is_monotone(b1 in -3.0f64..3.0, b2 in -3.0f64..3.0) {
        prop_assume!(b1 != b2);
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        for c in curves() {
            prop_assert!(c.h_of_b(lo).unwrap() < c.h_of_b(hi).unwrap());
        }
    }

    #[test]
    fn roundtrip_h_b_h(h in -1.0e5f64..1.0e5) {
        for c in curves() {
            let back = c.h_of_b(c.b_of_h(h).unwrap()).unwrap();
            prop_assert!((back - h).abs() <= 1e-8 * h.abs().max(1.0), "h {} back {}", h, back);
        }
    }

    #[test]
    fn forward_is_odd_and_steeper_than_vacuum(h in 0.0f64..1.0e6) {
        for c in curves() {
            prop_assert_eq!(c.b_of_h(-h).unwrap(), -c.b_of_h(h).unwrap());
            prop_assert!(c.db_dh(h).unwrap() > MU_0);
        }
    }

    #[test]
    fn dh_db_matches_finite_differences(b in -2.2f64..2.2) {
        for c in curves() {
            let d = 1e-6 * b.abs().max(0.05);
            let fd = (c.h_of_b(b + d).unwrap() - c.h_of_b(b - d).unwrap()) / (2.0 * d);
            let an = c.dh_db(b).unwrap();
            prop_assert!(an > 0.0);
            prop_assert!((an - fd).abs() <= 1e-4 * fd.abs(), "b {} an {} fd {}", b, an, fd);
        }
    }

    #[test]
    fn table_inverse_roundtrip(h in -5.0e4f64..5.0e4) {
        let t = MaterialCurve::table(&[(0.0, 0.0), (50.0, 0.6), (200.0, 1.2), (2000.0, 1.5), (2.0e4, 1.6)]).unwrap();
        let back = t.h_of_b(t.b_of_h(h).unwrap()).unwrap();
        prop_assert!((back - h).abs() <= 1e-9 * h.abs().max(1.0));
    }
}

#[test]
fn slope_at_origin_within_one_percent() {
    for c in curves() {
        let MaterialCurve::Analytic(a) = &c else { unreachable!() };
        let s = c.db_dh(0.0).unwrap();
        assert!((s / (a.mu_r_init() * MU_0) - 1.0).abs() < 0.01);
    }
}

#[test]
fn asymptotic_slope_beyond_ten_knees() {
    // the plain atan tail (k = 1) decays as 1/H² and is excluded
    for c in curves().into_iter().filter(|c| match c {
        MaterialCurve::Analytic(a) => a.knee_sharpness() > 1.0,
        _ => true,
    }) {
        let h_knee = c.h_of_b(1.34).unwrap();
        for h in [10.0 * h_knee, 30.0 * h_knee, 100.0 * h_knee] {
            let fd = (c.b_of_h(h + 1.0).unwrap() - c.b_of_h(h).unwrap()) / 1.0;
            assert!((fd / MU_0 - 1.0).abs() < 0.05, "h {h}: slope {}", fd / MU_0);
        }
    }
}
