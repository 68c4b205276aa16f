//! Electrical environment of the reactor: sinusoidal source, series R-L
//! load with an optional bolted fault, and an ideal dc bias current.

use core::f64::consts::{PI, SQRT_2};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcSource {
    pub v_rms: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Default for AcSource {
    fn default() -> Self {
        Self {
            v_rms: 2400.0,
            frequency: 60.0,
            phase: 0.0,
        }
    }
}

impl AcSource {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_rms.is_finite() && self.v_rms >= 0.0) {
            return Err(Error::invalid("source.v_rms", "must be finite and >= 0"));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::invalid("source.frequency", "must be finite and > 0"));
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid("source.phase", "must be finite"));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    pub fn voltage(&self, t: f64) -> f64 {
        SQRT_2 * self.v_rms * libm::sin(self.omega() * t + self.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesLoad {
    pub resistance: f64,
    pub inductance: f64,
}

impl Default for SeriesLoad {
    fn default() -> Self {
        Self {
            resistance: 100.0,
            inductance: 0.13,
        }
    }
}

impl SeriesLoad {
    pub fn validate(&self) -> Result<()> {
        if !(self.resistance.is_finite() && self.resistance >= 0.0) {
            return Err(Error::invalid("load.resistance", "must be finite and >= 0"));
        }
        if !(self.inductance.is_finite() && self.inductance >= 0.0) {
            return Err(Error::invalid("load.inductance", "must be finite and >= 0"));
        }
        if self.resistance == 0.0 && self.inductance == 0.0 {
            return Err(Error::invalid("load", "resistance and inductance cannot both be 0"));
        }
        Ok(())
    }

    /// Impedance magnitude at angular frequency `omega`, Ω.
    pub fn impedance(&self, omega: f64) -> f64 {
        libm::hypot(self.resistance, omega * self.inductance)
    }

    pub fn power_factor(&self, omega: f64) -> f64 {
        self.resistance / self.impedance(omega)
    }
}

/// Bolted fault that bypasses part of the load at `t_fault`, leaving
/// `retained_fraction` of both R and L in circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub enabled: bool,
    pub t_fault: f64,
    pub retained_fraction: f64,
}

impl Default for FaultSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            t_fault: 2.0 / 60.0,
            retained_fraction: 0.1,
        }
    }
}

impl FaultSpec {
    /// Enabled fault after a whole number of source cycles.
    pub fn after_cycles(cycles: f64, frequency: f64) -> Self {
        Self {
            enabled: true,
            t_fault: cycles / frequency,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_fault.is_finite() && self.t_fault >= 0.0) {
            return Err(Error::invalid("fault.t_fault", "must be finite and >= 0"));
        }
        if !(self.retained_fraction > 0.0 && self.retained_fraction <= 1.0) {
            return Err(Error::invalid("fault.retained_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.enabled && t >= self.t_fault
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DcBias {
    pub i_dc: f64,
}

impl DcBias {
    pub fn validate(&self) -> Result<()> {
        if self.i_dc.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("dc_bias", "must be finite"))
        }
    }
}

pub fn source_voltage(src: &AcSource, t: f64) -> f64 {
    src.voltage(t)
}

/// `(R_eff, L_eff)` in circuit at time `t`.
pub fn effective_load(load: &SeriesLoad, fault: &FaultSpec, t: f64) -> (f64, f64) {
    if fault.is_active(t) {
        (
            fault.retained_fraction * load.resistance,
            fault.retained_fraction * load.inductance,
        )
    } else {
        (load.resistance, load.inductance)
    }
}
