//! Implicit time integration of the coupled electro-magnetic DAE.
//!
//! Unknowns at each time point are the outer-leg fluxes and the ac current.
//! Per step the solver enforces the two magnetic loop balances and the ac
//! KVL
//!
//! ```text
//! v_s(t) = R_eff·i + L_eff·di/dt + N_ac·(dΦ_left/dt + dΦ_right/dt)
//! ```
//!
//! with the time derivatives replaced by the trapezoidal (default) or
//! backward-Euler rule, and solves the 3×3 nonlinear system by damped
//! Newton iteration. The dc winding is fed by an ideal current source, so
//! its voltage is an output rather than an unknown.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::analysis::{TimeSeries, induced_dc_voltage};
use crate::circuits::{AcSource, DcBias, FaultSpec, SeriesLoad, effective_load};
use crate::linalg;
use crate::magnetics::{CvsrNetwork, CvsrParams, build_cvsr};
use crate::{Error, Result};

/// Channels produced by [`run`], with units, in emission order.
pub const CHANNELS: [(&str, &str); 12] = [
    ("t", "s"),
    ("v_source", "V"),
    ("i_ac", "A"),
    ("flux_left", "Wb"),
    ("flux_right", "Wb"),
    ("flux_middle", "Wb"),
    ("b_left", "T"),
    ("b_right", "T"),
    ("b_middle", "T"),
    ("v_ac_winding", "V"),
    ("e_dc", "V"),
    ("p_dc_inst", "W"),
];

/// The reactor together with its electrical surroundings.
#[derive(Debug, Clone, PartialEq)]
pub struct CvsrSystem {
    pub network: CvsrNetwork,
    pub source: AcSource,
    pub load: SeriesLoad,
    pub fault: FaultSpec,
    pub bias: DcBias,
}

impl CvsrSystem {
    pub fn new(
        network: CvsrNetwork,
        source: AcSource,
        load: SeriesLoad,
        fault: FaultSpec,
        bias: DcBias,
    ) -> Result<Self> {
        source.validate()?;
        load.validate()?;
        fault.validate()?;
        bias.validate()?;
        Ok(Self {
            network,
            source,
            load,
            fault,
            bias,
        })
    }

    /// Model-default device and circuit with the given dc bias.
    pub fn with_bias(i_dc: f64) -> Result<Self> {
        Self::new(
            build_cvsr(&CvsrParams::default())?,
            AcSource::default(),
            SeriesLoad::default(),
            FaultSpec::default(),
            DcBias { i_dc },
        )
    }

    pub fn load_at(&self, t: f64) -> (f64, f64) {
        effective_load(&self.load, &self.fault, t)
    }

    fn n_ac(&self) -> f64 {
        self.network.ac_winding.gain()
    }

    fn voltage_scale(&self) -> f64 {
        if self.source.v_rms > 0.0 { self.source.v_rms } else { 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Trapezoidal,
    BackwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Startup {
    /// All fluxes and currents start at zero.
    Cold,
    /// Start from the static dc operating point.
    #[default]
    DcPreset,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    /// Bound on the scaled mixed residual: magnetic loops in A-turns / N_ac,
    /// KVL in volts / V_rms.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub startup: Startup,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::for_frequency(60.0, 10.0, 2000)
    }
}

impl SolverConfig {
    pub fn for_frequency(frequency: f64, cycles: f64, samples_per_cycle: u32) -> Self {
        let period = 1.0 / frequency;
        Self {
            dt: period / f64::from(samples_per_cycle),
            t_end: cycles * period,
            method: Method::Trapezoidal,
            newton_tol: 1e-8,
            newton_max_iter: 50,
            startup: Startup::DcPreset,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("solver.dt", "must be finite and > 0"));
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(Error::invalid("solver.t_end", format!("must exceed dt = {}", self.dt)));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(Error::invalid("solver.newton_tol", "must be finite and > 0"));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::invalid("solver.newton_max_iter", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of emitted samples, `floor(t_end/dt) + 1`.
    pub fn sample_count(&self) -> usize {
        // tolerate t_end/dt landing a few ulps below an integer
        let ratio = self.t_end / self.dt;
        libm::floor(ratio * (1.0 + 8.0 * f64::EPSILON)) as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimState {
    pub t: f64,
    pub flux_left: f64,
    pub flux_right: f64,
    pub i_ac: f64,
}

impl SimState {
    pub fn flux_middle(&self) -> f64 {
        CvsrNetwork::middle_flux(self.flux_left, self.flux_right)
    }

    fn vector(&self) -> [f64; 3] {
        [self.flux_left, self.flux_right, self.i_ac]
    }
}

/// Time derivatives of the state unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub flux_left: f64,
    pub flux_right: f64,
    pub i_ac: f64,
}

impl Rates {
    fn from_vector(v: [f64; 3]) -> Self {
        Self {
            flux_left: v[0],
            flux_right: v[1],
            i_ac: v[2],
        }
    }

    fn vector(&self) -> [f64; 3] {
        [self.flux_left, self.flux_right, self.i_ac]
    }
}

/// An accepted solution point: state, its discrete time derivatives and
/// the Newton diagnostics that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub state: SimState,
    pub rates: Rates,
    /// Scaled mixed residual at acceptance.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub max_residual: f64,
    /// Steps that needed the half-step retry.
    pub retries: usize,
}

const OP_MAX_ITER: usize = 100;

/// Static magnetic state with `i_ac = 0` under a dc bias current.
pub fn dc_operating_point(system: &CvsrSystem, i_dc: f64) -> Result<SimState> {
    if !i_dc.is_finite() {
        return Err(Error::NonFinite("dc_operating_point"));
    }
    let net = &system.network;
    let scale = net.ac_winding.gain().abs();
    // With identical outer legs the solution is a pure circulating flux;
    // that is the starting guess in every case.
    let h = net.dc_right.mmf(i_dc) / net.right.length();
    let guess = net.right.curve().b_of_h(h)? * net.right.area();
    let mut x = [-guess, guess];
    let tol = 1e-12 * net.dc_right.mmf(i_dc).abs().max(1.0);
    let mut trace = Vec::new();
    for _ in 0..OP_MAX_ITER {
        let (r, j) = net.residual_and_jacobian(x[0], x[1], 0.0, i_dc)?;
        let norm = r[0].abs().max(r[1].abs());
        trace.push(norm / scale);
        if norm <= tol {
            return Ok(SimState {
                t: 0.0,
                flux_left: x[0],
                flux_right: x[1],
                i_ac: 0.0,
            });
        }
        let dx = linalg::solve([[j[0][0], j[0][1]], [j[1][0], j[1][1]]], [-r[0], -r[1]])?;
        let mut lambda = 1.0;
        loop {
            let trial = [x[0] + lambda * dx[0], x[1] + lambda * dx[1]];
            let rt = net.residual(trial[0], trial[1], 0.0, i_dc)?;
            if rt[0].abs().max(rt[1].abs()) < norm || lambda < 1e-6 {
                x = trial;
                break;
            }
            lambda *= 0.5;
        }
    }
    Err(Error::OperatingPoint {
        iterations: OP_MAX_ITER,
        trace,
    })
}

/// Derivatives consistent with the constraints at `state`: the magnetic
/// balance differentiated in time (constant dc current) plus the KVL with
/// load `(r, l)`.
pub fn consistent_rates(system: &CvsrSystem, state: &SimState, load: (f64, f64)) -> Result<Rates> {
    let (_, j) = system
        .network
        .residual_and_jacobian(state.flux_left, state.flux_right, state.i_ac, system.bias.i_dc)?;
    let n = system.n_ac();
    let (r, l) = load;
    let a = [j[0], j[1], [n, n, l]];
    let b = [0.0, 0.0, system.source.voltage(state.t) - r * state.i_ac];
    Ok(Rates::from_vector(linalg::solve(a, b)?))
}

/// Newton settings for a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub method: Method,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl From<&SolverConfig> for StepOptions {
    fn from(c: &SolverConfig) -> Self {
        Self {
            method: c.method,
            newton_tol: c.newton_tol,
            newton_max_iter: c.newton_max_iter,
        }
    }
}

/// Advances one step of length `dt` from `point`, using the load in effect
/// at the start of the step.
pub fn step(system: &CvsrSystem, point: &Point, dt: f64, opts: &StepOptions) -> Result<Point> {
    let load = system.load_at(point.state.t);
    step_with_load(system, point, dt, load, opts)
}

fn step_with_load(
    system: &CvsrSystem,
    point: &Point,
    dt: f64,
    (r_load, l_load): (f64, f64),
    opts: &StepOptions,
) -> Result<Point> {
    let net = &system.network;
    let i_dc = system.bias.i_dc;
    let n_ac = system.n_ac();
    let m_scale = 1.0 / n_ac.abs();
    let v_scale = 1.0 / system.voltage_scale();
    let t1 = point.state.t + dt;
    let v1 = system.source.voltage(t1);
    let x0 = point.state.vector();
    let d0 = point.rates.vector();
    let (alpha, carry) = match opts.method {
        Method::Trapezoidal => (2.0 / dt, 1.0),
        Method::BackwardEuler => (1.0 / dt, 0.0),
    };
    let rates_at = |x: &[f64; 3]| -> [f64; 3] {
        core::array::from_fn(|k| alpha * (x[k] - x0[k]) - carry * d0[k])
    };
    let eval = |x: &[f64; 3]| -> Result<([f64; 3], [[f64; 3]; 3])> {
        let (rm, jm) = net.residual_and_jacobian(x[0], x[1], x[2], i_dc)?;
        let d = rates_at(x);
        let kvl = v1 - r_load * x[2] - l_load * d[2] - n_ac * (d[0] + d[1]);
        let f = [rm[0] * m_scale, rm[1] * m_scale, kvl * v_scale];
        let jac = [
            jm[0].map(|v| v * m_scale),
            jm[1].map(|v| v * m_scale),
            [-n_ac * alpha * v_scale, -n_ac * alpha * v_scale, -(r_load + l_load * alpha) * v_scale],
        ];
        Ok((f, jac))
    };
    let norm = |f: &[f64; 3]| f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    // explicit predictor
    let mut x: [f64; 3] = core::array::from_fn(|k| x0[k] + dt * d0[k]);
    let (mut f, mut jac) = eval(&x)?;
    let mut res = norm(&f);
    let mut iterations = 0;
    loop {
        if res <= opts.newton_tol && res.is_finite() {
            // one more correction so the magnetic balance also sits well
            // below the tolerance in unscaled A-turns
            if res > 0.0 {
                if let Ok(dx) = linalg::solve(jac, f.map(|v| -v)) {
                    let trial: [f64; 3] = core::array::from_fn(|k| x[k] + dx[k]);
                    if let Ok((ft, _)) = eval(&trial) {
                        let rt = norm(&ft);
                        if rt <= res {
                            x = trial;
                            res = rt;
                        }
                    }
                }
            }
            return Ok(Point {
                state: SimState {
                    t: t1,
                    flux_left: x[0],
                    flux_right: x[1],
                    i_ac: x[2],
                },
                rates: Rates::from_vector(rates_at(&x)),
                residual: res,
                iterations,
            });
        }
        if iterations >= opts.newton_max_iter || !res.is_finite() {
            return Err(Error::StepFailed {
                t: t1,
                iterations,
                residual: res,
                flux_left: x[0],
                flux_right: x[1],
                i_ac: x[2],
            });
        }
        iterations += 1;
        let dx = linalg::solve(jac, f.map(|v| -v))?;
        let mut lambda = 1.0;
        loop {
            let trial: [f64; 3] = core::array::from_fn(|k| x[k] + lambda * dx[k]);
            let (ft, jt) = eval(&trial)?;
            let rt = norm(&ft);
            if rt < res || lambda < 1.0 / 64.0 {
                x = trial;
                f = ft;
                jac = jt;
                res = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
}

fn initial_point(system: &CvsrSystem, config: &SolverConfig, faulted: bool) -> Result<Point> {
    let state = match config.startup {
        Startup::Cold => SimState::default(),
        Startup::DcPreset => dc_operating_point(system, system.bias.i_dc)?,
    };
    let load = interval_load(system, faulted);
    Ok(Point {
        rates: consistent_rates(system, &state, load)?,
        state,
        residual: 0.0,
        iterations: 0,
    })
}

fn interval_load(system: &CvsrSystem, faulted: bool) -> (f64, f64) {
    if faulted {
        let f = system.fault.retained_fraction;
        (f * system.load.resistance, f * system.load.inductance)
    } else {
        (system.load.resistance, system.load.inductance)
    }
}

struct Integrator<'a> {
    system: &'a CvsrSystem,
    opts: StepOptions,
    stats: RunStats,
}

impl Integrator<'_> {
    fn advance(&mut self, point: &Point, dt: f64, load: (f64, f64)) -> Result<Point> {
        match step_with_load(self.system, point, dt, load, &self.opts) {
            Ok(p) => Ok(self.accept(p)),
            Err(Error::StepFailed { .. }) => {
                self.stats.retries += 1;
                let half = step_with_load(self.system, point, 0.5 * dt, load, &self.opts)?;
                let half = self.accept(half);
                let mut p = step_with_load(self.system, &half, 0.5 * dt, load, &self.opts)?;
                p.state.t = point.state.t + dt;
                Ok(self.accept(p))
            }
            Err(e) => Err(e),
        }
    }

    fn accept(&mut self, p: Point) -> Point {
        self.stats.newton_iterations += p.iterations;
        self.stats.max_residual = self.stats.max_residual.max(p.residual);
        p
    }
}

/// Full simulation returning the standard channel set.
pub fn run(system: &CvsrSystem, config: &SolverConfig) -> Result<TimeSeries> {
    run_with_stats(system, config).map(|(ts, _)| ts)
}

pub fn run_with_stats(system: &CvsrSystem, config: &SolverConfig) -> Result<(TimeSeries, RunStats)> {
    config.validate()?;
    let points = integrate(system, config)?;
    let stats = points.1;
    let points = points.0;
    Ok((assemble(system, config, &points)?, stats))
}

/// Accepted points on the uniform output grid `t_k = k·dt`.
pub fn integrate(system: &CvsrSystem, config: &SolverConfig) -> Result<(Vec<Point>, RunStats)> {
    config.validate()?;
    let n = config.sample_count();
    let dt = config.dt;
    let fault = system.fault;
    // boundary coincidence tolerance for the fault switch
    let snap = 1e-9 * dt;
    let mut faulted = fault.enabled && fault.t_fault <= snap;
    let mut integ = Integrator {
        system,
        opts: StepOptions::from(config),
        stats: RunStats::default(),
    };
    let mut points = Vec::with_capacity(n);
    let mut point = initial_point(system, config, faulted)?;
    points.push(point);
    for k in 0..n - 1 {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        point.state.t = t0;
        let mut load = interval_load(system, faulted);
        if fault.enabled && !faulted && fault.t_fault < t1 + snap {
            if fault.t_fault > t0 + snap && fault.t_fault < t1 - snap {
                // split so the switch lands on a step boundary
                let mut mid = integ.advance(&point, fault.t_fault - t0, load)?;
                mid.state.t = fault.t_fault;
                faulted = true;
                load = interval_load(system, true);
                mid.rates = consistent_rates(system, &mid.state, load)?;
                point = integ.advance(&mid, t1 - fault.t_fault, load)?;
            } else if fault.t_fault <= t0 + snap {
                faulted = true;
                load = interval_load(system, true);
                point.rates = consistent_rates(system, &point.state, load)?;
                point = integ.advance(&point, dt, load)?;
            } else {
                // switch at t1; this step still sees the pre-fault load
                point = integ.advance(&point, dt, load)?;
            }
        } else {
            point = integ.advance(&point, dt, load)?;
        }
        point.state.t = t1;
        integ.stats.steps += 1;
        points.push(point);
    }
    Ok((points, integ.stats))
}

fn assemble(system: &CvsrSystem, config: &SolverConfig, points: &[Point]) -> Result<TimeSeries> {
    let net = &system.network;
    let a_mid = net.middle.area();
    let a_left = net.left.area();
    let a_right = net.right.area();
    let col = |f: &dyn Fn(&Point) -> f64| points.iter().map(f).collect::<Vec<f64>>();
    let rate_left = col(&|p| p.rates.flux_left);
    let rate_right = col(&|p| p.rates.flux_right);
    let e_dc = induced_dc_voltage(&rate_left, &rate_right, f64::from(net.dc_right.turns()))?;
    let i_dc = system.bias.i_dc;
    let p_dc: Vec<f64> = e_dc.iter().map(|e| e * i_dc).collect();
    let ac = net.ac_winding;

    let mut ts = TimeSeries::new(config.dt)?;
    let data: [Vec<f64>; 12] = [
        col(&|p| p.state.t),
        col(&|p| system.source.voltage(p.state.t)),
        col(&|p| p.state.i_ac),
        col(&|p| p.state.flux_left),
        col(&|p| p.state.flux_right),
        col(&|p| p.state.flux_middle()),
        col(&|p| p.state.flux_left / a_left),
        col(&|p| p.state.flux_right / a_right),
        col(&|p| p.state.flux_middle() / a_mid),
        col(&|p| ac.emf(p.rates.flux_left + p.rates.flux_right)),
        e_dc,
        p_dc,
    ];
    for ((name, unit), d) in CHANNELS.iter().zip(data) {
        ts.push_channel(name, unit, d)?;
    }
    let meta = [
        ("frequency_hz", system.source.frequency),
        ("v_rms", system.source.v_rms),
        ("i_dc", i_dc),
        ("n_ac", f64::from(ac.turns())),
        ("n_dc", f64::from(net.dc_right.turns())),
        ("fault_enabled", if system.fault.enabled { 1.0 } else { 0.0 }),
        ("t_fault", system.fault.t_fault),
        ("retained_fraction", system.fault.retained_fraction),
        ("load_resistance", system.load.resistance),
        ("load_inductance", system.load.inductance),
    ];
    for (k, v) in meta {
        ts.metadata.insert(k.to_string(), format!("{v}"));
    }
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::AcSource;

    #[test]
    fn zero_bias_operating_point_is_zero() {
        let sys = CvsrSystem::with_bias(0.0).unwrap();
        let s = dc_operating_point(&sys, 0.0).unwrap();
        assert_eq!((s.flux_left, s.flux_right, s.i_ac), (0.0, 0.0, 0.0));
    }

    #[test]
    fn operating_point_satisfies_residual() {
        let sys = CvsrSystem::with_bias(0.3).unwrap();
        let s = dc_operating_point(&sys, 0.3).unwrap();
        let r = sys.network.residual(s.flux_left, s.flux_right, 0.0, 0.3).unwrap();
        assert!(r[0].abs() < 1e-9 && r[1].abs() < 1e-9);
        assert!((s.flux_left + s.flux_right).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_stays_put() {
        let mut sys = CvsrSystem::with_bias(0.0).unwrap();
        sys.source = AcSource {
            v_rms: 0.0,
            ..AcSource::default()
        };
        let cfg = SolverConfig {
            t_end: 0.01,
            ..SolverConfig::default()
        };
        let ts = run(&sys, &cfg).unwrap();
        for name in ["i_ac", "flux_left", "flux_right", "e_dc"] {
            assert!(ts.channel(name).unwrap().iter().all(|&v| v == 0.0), "{name}");
        }
    }

    #[test]
    fn sample_count_and_validation() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.sample_count(), 20_001);
        let bad = SolverConfig {
            t_end: cfg.dt * 0.5,
            ..cfg
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter { field: "solver.t_end", .. })));
        let sys = CvsrSystem::with_bias(0.0).unwrap();
        assert!(run(&sys, &bad).is_err());
        assert!(SolverConfig { dt: -1.0, ..cfg }.validate().is_err());
        assert!(SolverConfig { newton_max_iter: 0, ..cfg }.validate().is_err());
    }

    #[test]
    fn step_failure_reports_time() {
        let sys = CvsrSystem::with_bias(0.0).unwrap();
        let p0 = Point::default();
        let opts = StepOptions {
            method: Method::Trapezoidal,
            newton_tol: 1e-300,
            newton_max_iter: 1,
        };
        let err = step(&sys, &p0, 1e-4, &opts).unwrap_err();
        assert!(matches!(err, Error::StepFailed { t, .. } if (t - 1e-4).abs() < 1e-18));
    }
}
