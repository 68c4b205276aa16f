//! Time-domain model of a three-leg continuously variable series reactor
//! (CVSR) built on the gyrator-capacitor magnetic-circuit analogy.
//!
//! Windings act as gyrators between the electric and magnetic domains
//! (MMF = n·i, terminal voltage = n·dΦ/dt) and the magnetic paths act as
//! nonlinear capacitors whose "voltage" is the MMF drop of a saturable
//! leg. The crate assembles the fixed CVSR network, couples it to an ac
//! source with a series R-L load and an ideal dc bias current, and
//! integrates the resulting DAE with an implicit one-step rule and Newton
//! iteration per step.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, scenario
//! handling and the command line live in the companion `cvsr` crate.
//!
//! Modules, bottom-up:
//!
//! - [`material`]: anhysteretic B-H curves.
//! - [`magnetics`]: legs, air gap, windings, network residual and Jacobian.
//! - [`circuits`]: ac source, series load with fault switching, dc bias.
//! - [`solver`]: dc operating point, implicit stepping, full runs.
//! - [`analysis`]: waveform post-processing.
//! - [`balance`]: per-cycle energy bookkeeping.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod balance;
pub mod circuits;
mod error;
mod linalg;
pub mod magnetics;
pub mod material;
pub mod solver;

pub use error::{Error, Result};

/// Vacuum permeability in H/m.
pub const MU_0: f64 = 4.0e-7 * core::f64::consts::PI;
