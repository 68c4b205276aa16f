//! Per-cycle energy bookkeeping for a finished run.
//!
//! Over any interval the source work must equal the load dissipation plus
//! the change of stored energy (load inductance and magnetic field) minus
//! the energy fed in by the dc source through the dc winding. All terms use
//! trapezoidal quadrature on the output grid; the inductor term is summed
//! per step with the inductance in effect on that step, so the energy
//! released when the fault bypasses part of the load counts as dissipated.

use alloc::vec::Vec;

use crate::analysis::TimeSeries;
use crate::solver::CvsrSystem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBalance {
    pub t_start: f64,
    pub t_end: f64,
    /// Energy delivered by the ac source, J.
    pub source: f64,
    /// Resistive dissipation, J.
    pub resistive: f64,
    /// Work done on the load inductance, J.
    pub inductive: f64,
    /// Change of stored field energy in core and gap, J.
    pub field: f64,
    /// Energy delivered into the winding by the dc source, J.
    pub dc_input: f64,
}

impl EnergyBalance {
    pub fn imbalance(&self) -> f64 {
        self.source + self.dc_input - self.resistive - self.inductive - self.field
    }

    /// |imbalance| relative to the source energy.
    pub fn relative_error(&self) -> f64 {
        self.imbalance().abs() / self.source.abs()
    }

    /// Average source power over the interval, W.
    pub fn source_power(&self) -> f64 {
        self.source / (self.t_end - self.t_start)
    }
}

/// Energy balance over consecutive windows of `window` samples.
pub fn energy_balance(system: &CvsrSystem, ts: &TimeSeries, window: usize) -> Result<Vec<EnergyBalance>> {
    if window == 0 {
        return Err(Error::EmptyWindow);
    }
    let t = ts.require("t")?;
    let v = ts.require("v_source")?;
    let i = ts.require("i_ac")?;
    let fl = ts.require("flux_left")?;
    let fr = ts.require("flux_right")?;
    let p_dc = ts.require("p_dc_inst")?;
    let n = t.len();
    if n < window + 1 {
        return Err(Error::ShortSeries { len: n, window: window + 1 });
    }
    let dt = ts.dt();
    let field: Vec<f64> = fl
        .iter()
        .zip(fr)
        .map(|(&a, &b)| system.network.field_energy(a, b))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut start = 0;
    while start + window < n {
        let end = start + window;
        let mut acc = EnergyBalance {
            t_start: t[start],
            t_end: t[end],
            field: field[end] - field[start],
            ..EnergyBalance::default()
        };
        for k in start..end {
            let (r, l) = system.load_at(t[k] + 0.5 * dt);
            acc.source += 0.5 * dt * (v[k] * i[k] + v[k + 1] * i[k + 1]);
            acc.resistive += 0.5 * dt * r * (i[k] * i[k] + i[k + 1] * i[k + 1]);
            acc.inductive += 0.5 * l * (i[k + 1] * i[k + 1] - i[k] * i[k]);
            acc.dc_input += 0.5 * dt * (p_dc[k] + p_dc[k + 1]);
        }
        out.push(acc);
        start = end;
    }
    Ok(out)
}
