use std::f64::consts::PI;

use cvsr_core::MU_0;
use cvsr_core::analysis::{TimeSeries, mean_of, rms_of};
use cvsr_core::balance::energy_balance;
use cvsr_core::circuits::{AcSource, DcBias, FaultSpec, SeriesLoad};
use cvsr_core::magnetics::{CvsrParams, build_cvsr};
use cvsr_core::material::MaterialCurve;
use cvsr_core::solver::{CvsrSystem, SolverConfig, run, run_with_stats};

const SPC: usize = 2000;

fn linear_system(mu_r: f64) -> CvsrSystem {
    let params = CvsrParams {
        material: MaterialCurve::linear(mu_r).unwrap(),
        ..CvsrParams::default()
    };
    CvsrSystem::new(
        build_cvsr(&params).unwrap(),
        AcSource::default(),
        SeriesLoad::default(),
        FaultSpec::default(),
        DcBias::default(),
    )
    .unwrap()
}

/// Steady RMS current from phasor arithmetic, with the reactor reduced to
/// a single inductance through its series permeance.
fn phasor_current(mu_r: f64) -> f64 {
    let area = 0.0103;
    let g = 0.002014;
    let r_mid = 0.4572 / (mu_r * MU_0 * area);
    let r_outer = 0.8636 / (mu_r * MU_0 * area);
    let side = area.sqrt() + g;
    let r_gap = g / (MU_0 * side * side);
    let l_cvsr = 300.0f64.powi(2) / (r_mid + r_gap + 0.5 * r_outer);
    let w = 2.0 * PI * 60.0;
    2400.0 / (100.0f64.powi(2) + (w * (0.13 + l_cvsr)).powi(2)).sqrt()
}

fn last_cycle<'a>(ts: &'a TimeSeries, name: &str, spc: usize) -> &'a [f64] {
    let x = ts.require(name).unwrap();
    &x[x.len() - 1 - spc..x.len() - 1]
}

#[test]
fn linear_core_matches_phasor_solution() {
    let ts = run(&linear_system(2500.0), &SolverConfig::default()).unwrap();
    let sim = rms_of(last_cycle(&ts, "i_ac", SPC));
    let oracle = phasor_current(2500.0);
    assert!((sim / oracle - 1.0).abs() < 0.005, "sim {sim} oracle {oracle}");
}

#[test]
fn trapezoidal_rule_is_second_order() {
    let sys = linear_system(2500.0);
    let runs: Vec<Vec<f64>> = [1, 2, 4]
        .iter()
        .map(|&m| {
            let cfg = SolverConfig::for_frequency(60.0, 10.0, (SPC * m) as u32);
            run(&sys, &cfg).unwrap().require("i_ac").unwrap().to_vec()
        })
        .collect();
    let n = runs[0].len();
    let mut e1 = 0.0f64;
    let mut e2 = 0.0f64;
    for k in 0..n {
        e1 = e1.max((runs[0][k] - runs[2][4 * k]).abs());
        e2 = e2.max((runs[1][2 * k] - runs[2][4 * k]).abs());
    }
    // against a dt/4 reference e1/e2 = 2^p + 1
    let ratio = e1 / e2;
    assert!((2.5..=10.0).contains(&ratio), "ratio {ratio}");
    let order = (ratio - 1.0).log2();
    assert!((order - 2.0).abs() <= 0.3, "order {order} ratio {ratio}");
}

#[test]
fn halving_dt_leaves_steady_current_unchanged() {
    for i_dc in [0.0, 0.075] {
        let sys = CvsrSystem::with_bias(i_dc).unwrap();
        let a = run(&sys, &SolverConfig::default()).unwrap();
        let b = run(&sys, &SolverConfig::for_frequency(60.0, 10.0, 2 * SPC as u32)).unwrap();
        let ra = rms_of(last_cycle(&a, "i_ac", SPC));
        let rb = rms_of(last_cycle(&b, "i_ac", 2 * SPC));
        assert!((ra / rb - 1.0).abs() < 1e-3, "dc {i_dc}: {ra} vs {rb}");
    }
}

#[test]
fn emitted_states_satisfy_loop_balance() {
    for i_dc in [0.0, 0.075, 5.0] {
        let sys = CvsrSystem::with_bias(i_dc).unwrap();
        let cfg = SolverConfig::for_frequency(60.0, 3.0, SPC as u32);
        let (ts, stats) = run_with_stats(&sys, &cfg).unwrap();
        assert!(stats.max_residual <= cfg.newton_tol);
        let fl = ts.require("flux_left").unwrap();
        let fr = ts.require("flux_right").unwrap();
        let i = ts.require("i_ac").unwrap();
        for k in 0..ts.len() {
            let r = sys.network.residual(fl[k], fr[k], i[k], i_dc).unwrap();
            assert!(r[0].abs().max(r[1].abs()) <= 1e-6, "dc {i_dc} k {k}: {r:?}");
        }
    }
}

#[test]
fn zero_bias_keeps_outer_legs_identical() {
    let sys = CvsrSystem::with_bias(0.0).unwrap();
    let ts = run(&sys, &SolverConfig::for_frequency(60.0, 5.0, SPC as u32)).unwrap();
    let bl = ts.require("b_left").unwrap();
    let br = ts.require("b_right").unwrap();
    assert!(bl.iter().zip(br).all(|(a, b)| (a - b).abs() <= 1e-9));
    let e = rms_of(ts.require("e_dc").unwrap());
    let v = rms_of(ts.require("v_ac_winding").unwrap());
    assert!(e < 1e-3 * v);
}

#[test]
fn relabeling_symmetry_of_transient() {
    let cfg = SolverConfig::for_frequency(60.0, 2.0, SPC as u32);
    let a = run(&CvsrSystem::with_bias(0.075).unwrap(), &cfg).unwrap();
    let b = run(&CvsrSystem::with_bias(-0.075).unwrap(), &cfg).unwrap();
    let scale = 0.02;
    for (x, y) in [("flux_left", "flux_right"), ("flux_right", "flux_left"), ("i_ac", "i_ac")] {
        let xs = a.require(x).unwrap();
        let ys = b.require(y).unwrap();
        let s = if x == "i_ac" { 20.0 } else { scale };
        assert!(xs.iter().zip(ys).all(|(p, q)| (p - q).abs() <= 1e-9 * s), "{x}/{y}");
    }
}

#[test]
fn steady_energy_balance_per_cycle() {
    for (i_dc, fault) in [(0.075, false), (5.0, false), (0.075, true)] {
        let mut sys = CvsrSystem::with_bias(i_dc).unwrap();
        if fault {
            sys.fault = FaultSpec::after_cycles(2.0, 60.0);
        }
        let ts = run(&sys, &SolverConfig::for_frequency(60.0, 6.0, SPC as u32)).unwrap();
        for cyc in energy_balance(&sys, &ts, SPC).unwrap() {
            assert!(cyc.relative_error() <= 5e-3, "dc {i_dc} fault {fault}: {cyc:?}");
        }
    }
}

#[test]
fn induced_voltage_has_zero_mean_over_half_cycles() {
    let sys = CvsrSystem::with_bias(0.075).unwrap();
    let ts = run(&sys, &SolverConfig::default()).unwrap();
    let e = ts.require("e_dc").unwrap();
    let tail = &e[e.len() - 1 - 4 * SPC..e.len() - 1];
    assert!(mean_of(tail).abs() <= 1e-3 * rms_of(tail), "{}", mean_of(tail));
}

#[test]
fn identical_runs_are_bit_identical() {
    let sys = CvsrSystem::with_bias(0.075).unwrap();
    let cfg = SolverConfig::for_frequency(60.0, 2.0, SPC as u32);
    let a = run(&sys, &cfg).unwrap();
    let b = run(&sys, &cfg).unwrap();
    for (ca, cb) in a.channels().iter().zip(b.channels()) {
        assert!(ca.data.iter().zip(&cb.data).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn output_length_follows_sample_count() {
    let cfg = SolverConfig::for_frequency(60.0, 1.5, 400);
    let ts = run(&CvsrSystem::with_bias(0.0).unwrap(), &cfg).unwrap();
    assert_eq!(ts.len(), 601);
    assert_eq!(ts.channels().len(), 12);
}

#[test]
fn empty_run_is_rejected() {
    let cfg = SolverConfig {
        t_end: 1e-6,
        ..SolverConfig::default()
    };
    assert!(run(&CvsrSystem::with_bias(0.0).unwrap(), &cfg).is_err());
}
