use cvsr_core::magnetics::{CvsrNetwork, CvsrParams, build_cvsr, magnetic_residual, residual_jacobian};
use cvsr_core::material::MaterialCurve;
use cvsr_core::solver::{CvsrSystem, dc_operating_point};
use proptest::prelude::*;

fn net() -> CvsrNetwork {
    build_cvsr(&CvsrParams::default()).unwrap()
}

fn central_jacobian(n: &CvsrNetwork, x: [f64; 3], i_dc: f64) -> [[f64; 3]; 2] {
    let mut j = [[0.0; 3]; 2];
    for col in 0..3 {
        let h = if col == 2 { 1e-3 } else { 1e-7 * x[col].abs().max(1e-3) };
        let mut up = x;
        let mut dn = x;
        up[col] += h;
        dn[col] -= h;
        let ru = magnetic_residual(n, up[0], up[1], up[2], i_dc).unwrap();
        let rd = magnetic_residual(n, dn[0], dn[1], dn[2], i_dc).unwrap();
        for row in 0..2 {
            j[row][col] = (ru[row] - rd[row]) / (2.0 * h);
        }
    }
    j
}

proptest! {
    #[test]
    fn mmf_drops_are_odd_and_increasing(phi in 0.0f64..0.03, dphi in 1e-6f64..0.01) {
        let n = net();
        for leg in [&n.middle, &n.left, &n.right] {
            prop_assert_eq!(leg.mmf(-phi).unwrap(), -leg.mmf(phi).unwrap());
            prop_assert!(leg.mmf(phi + dphi).unwrap() > leg.mmf(phi).unwrap());
        }
        prop_assert_eq!(n.gap.mmf(-phi), -n.gap.mmf(phi));
        prop_assert!(n.gap.mmf(phi + dphi) > n.gap.mmf(phi));
    }

    #[test]
    fn jacobian_matches_central_differences(
        fl in -0.02f64..0.02,
        fr in -0.02f64..0.02,
        i_ac in -50.0f64..50.0,
        i_dc in -5.0f64..5.0,
    ) {
        let n = net();
        let an = residual_jacobian(&n, fl, fr, i_ac, i_dc).unwrap();
        let fd = central_jacobian(&n, [fl, fr, i_ac], i_dc);
        for row in 0..2 {
            for col in 0..3 {
                let scale = fd[row][col].abs().max(1.0);
                prop_assert!((an[row][col] - fd[row][col]).abs() <= 1e-5 * scale,
                    "[{}][{}] {} vs {}", row, col, an[row][col], fd[row][col]);
            }
        }
    }

    #[test]
    fn relabeling_symmetry_of_operating_point(i_dc in -5.0f64..5.0) {
        let sys = CvsrSystem::with_bias(i_dc).unwrap();
        let a = dc_operating_point(&sys, i_dc).unwrap();
        let b = dc_operating_point(&sys, -i_dc).unwrap();
        prop_assert!((a.flux_left - b.flux_right).abs() <= 1e-12 * a.flux_left.abs().max(1e-9));
        prop_assert!((a.flux_right - b.flux_left).abs() <= 1e-12 * a.flux_right.abs().max(1e-9));
    }
}

#[test]
fn cross_partial_at_zero_state() {
    let n = net();
    let an = residual_jacobian(&n, 0.0, 0.0, 0.0, 0.0).unwrap();
    // ∂r_left/∂Φ_right = −(dF_mid/dΦ + dF_gap/dΦ): difference the shared
    // middle-leg + gap drop directly.
    let h = 1e-9;
    let shared = |phi: f64| n.middle.mmf(phi).unwrap() + n.gap.mmf(phi);
    let fd = -(shared(h) - shared(-h)) / (2.0 * h);
    assert!((an[0][1] - fd).abs() <= 1e-6 * fd.abs(), "{} vs {fd}", an[0][1]);
    assert_eq!(an[0][2], 300.0);
}

#[test]
fn full_jacobian_at_saturated_state() {
    let n = net();
    let x = [-0.0151, 0.0149, 12.0];
    let an = residual_jacobian(&n, x[0], x[1], x[2], 5.0).unwrap();
    let fd = central_jacobian(&n, x, 5.0);
    for row in 0..2 {
        for col in 0..3 {
            assert!((an[row][col] - fd[row][col]).abs() <= 1e-5 * fd[row][col].abs());
        }
    }
}

/// Bisection oracle for the symmetric dc state: with Φ_left = −φ and
/// Φ_right = φ the middle flux vanishes and both loops reduce to
/// F_outer(φ) = N_dc·i_dc.
fn symmetric_flux_by_bisection(n: &CvsrNetwork, i_dc: f64) -> f64 {
    let target = 450.0 * i_dc;
    let (mut lo, mut hi) = (-0.1, 0.1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if n.right.mmf(mid).unwrap() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn dc_bias_alone_circulates_flux() {
    let n = net();
    for i_dc in [0.02, 0.075, 0.5, 5.0] {
        let phi = symmetric_flux_by_bisection(&n, i_dc);
        let r = magnetic_residual(&n, -phi, phi, 0.0, i_dc).unwrap();
        assert!(r[0].abs() < 1e-6 && r[1].abs() < 1e-6);
        let sys = CvsrSystem::with_bias(i_dc).unwrap();
        let s = dc_operating_point(&sys, i_dc).unwrap();
        assert!((s.flux_right - phi).abs() <= 1e-10 * phi.abs());
        assert!((s.flux_left + phi).abs() <= 1e-10 * phi.abs());
        assert!(s.flux_middle().abs() <= 1e-15);
    }
}

#[test]
fn operating_point_from_asymmetric_network() {
    // Unequal outer legs: the solution no longer has zero middle flux but
    // must still satisfy both loop balances.
    let mut n = net();
    n.left = cvsr_core::magnetics::MagneticLeg::new(0.7, 0.0103, MaterialCurve::default()).unwrap();
    let mut sys = CvsrSystem::with_bias(0.5).unwrap();
    sys.network = n;
    let s = dc_operating_point(&sys, 0.5).unwrap();
    let r = sys.network.residual(s.flux_left, s.flux_right, 0.0, 0.5).unwrap();
    assert!(r[0].abs() < 1e-6 && r[1].abs() < 1e-6, "{r:?}");
    assert!(s.flux_middle().abs() > 0.0);
}

#[test]
fn gap_permeance_default_fringing() {
    let n = net();
    let side = 0.0103f64.sqrt() + 0.002014;
    let expected = cvsr_core::MU_0 * side * side / 0.002014;
    assert!((n.gap.permeance() - expected).abs() < 1e-18);
    assert!(n.gap.permeance() > 6.43e-6);
}
