//! Gyrator-capacitor elements and the fixed three-leg CVSR network.
//!
//! Topology: the ac winding sits on the middle leg together with the air
//! gap; the two outer legs close the flux path and each carries one coil
//! of the dc winding. The T-node forces `Φ_middle = Φ_left + Φ_right`, so
//! the only independent magnetic unknowns are the two outer-leg fluxes.
//!
//! Dot convention: positive ac current drives positive flux up the middle
//! leg. The right dc coil aids that direction (+1) and the left coil opposes
//! it (−1), so a positive dc current circulates flux around the outer loop.
//! Winding terminal voltages use the receiver convention `v = n·dΦ/dt`.

use crate::material::MaterialCurve;
use crate::{Error, MU_0, Result};

/// Saturable ferromagnetic path with uniform cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticLeg {
    length: f64,
    area: f64,
    curve: MaterialCurve,
}

impl MagneticLeg {
    pub fn new(length: f64, area: f64, curve: MaterialCurve) -> Result<Self> {
        positive("leg length", length)?;
        positive("leg area", area)?;
        Ok(Self { length, area, curve })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn curve(&self) -> &MaterialCurve {
        &self.curve
    }

    pub fn flux_density(&self, flux: f64) -> f64 {
        flux / self.area
    }

    /// MMF drop `H(Φ/A)·l` across the leg, A-turns.
    pub fn mmf(&self, flux: f64) -> Result<f64> {
        Ok(self.curve.h_of_b(flux / self.area)? * self.length)
    }

    /// Incremental reluctance dF/dΦ, A-turns/Wb.
    pub fn mmf_slope(&self, flux: f64) -> Result<f64> {
        Ok(self.curve.dh_db(flux / self.area)? * self.length / self.area)
    }

    pub fn mmf_and_slope(&self, flux: f64) -> Result<(f64, f64)> {
        let (h, dh) = self.curve.h_and_dh_db(flux / self.area)?;
        Ok((h * self.length, dh * self.length / self.area))
    }

    /// Stored magnetic energy at a given flux, J.
    pub fn energy(&self, flux: f64) -> Result<f64> {
        Ok(self.curve.energy_density(flux / self.area)? * self.length * self.area)
    }
}

/// Linear air-gap permeance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirGap {
    gap_length: f64,
    core_area: f64,
    fringing: bool,
}

impl AirGap {
    pub fn new(gap_length: f64, core_area: f64, fringing: bool) -> Result<Self> {
        positive("gap length", gap_length)?;
        positive("gap core area", core_area)?;
        Ok(Self {
            gap_length,
            core_area,
            fringing,
        })
    }

    pub fn gap_length(&self) -> f64 {
        self.gap_length
    }

    pub fn core_area(&self) -> f64 {
        self.core_area
    }

    pub fn fringing(&self) -> bool {
        self.fringing
    }

    /// Flux-carrying area: the core area, or with fringing a square section
    /// grown by one gap length, `(√A + g)²`.
    pub fn effective_area(&self) -> f64 {
        if self.fringing {
            let side = libm::sqrt(self.core_area) + self.gap_length;
            side * side
        } else {
            self.core_area
        }
    }

    /// Permeance `μ0·A_eff/g`, Wb/A-turn.
    pub fn permeance(&self) -> f64 {
        MU_0 * self.effective_area() / self.gap_length
    }

    pub fn mmf(&self, flux: f64) -> f64 {
        flux / self.permeance()
    }

    pub fn energy(&self, flux: f64) -> f64 {
        0.5 * flux * flux / self.permeance()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }
}

/// Gyrator coupling a coil to the flux of the leg it is wound on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    turns: u32,
    polarity: Polarity,
}

impl Winding {
    pub fn new(turns: u32, polarity: Polarity) -> Result<Self> {
        if turns == 0 {
            return Err(Error::invalid("turns", "must be at least 1"));
        }
        Ok(Self { turns, polarity })
    }

    pub fn turns(&self) -> u32 {
        self.turns
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    /// Signed turns.
    pub fn gain(&self) -> f64 {
        self.polarity.sign() * f64::from(self.turns)
    }

    /// MMF impressed by a coil current, A-turns.
    pub fn mmf(&self, current: f64) -> f64 {
        self.gain() * current
    }

    /// Terminal voltage for a flux rate of change, V.
    pub fn emf(&self, flux_rate: f64) -> f64 {
        self.gain() * flux_rate
    }
}

/// Device parameters of the three-leg reactor (model defaults).
#[derive(Debug, Clone, PartialEq)]
pub struct CvsrParams {
    /// Mean path length of the middle leg, m.
    pub middle_length: f64,
    /// Mean path length of each outer leg, m.
    pub outer_length: f64,
    /// Cross-section shared by all legs, m².
    pub area: f64,
    /// Air gap in the middle leg, m.
    pub gap_length: f64,
    pub fringing: bool,
    pub n_ac: u32,
    /// Turns of each dc coil.
    pub n_dc: u32,
    pub material: MaterialCurve,
}

impl Default for CvsrParams {
    fn default() -> Self {
        Self {
            middle_length: 0.4572,
            outer_length: 0.8636,
            area: 0.0103,
            gap_length: 0.002014,
            fringing: true,
            n_ac: 300,
            n_dc: 450,
            material: MaterialCurve::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvsrNetwork {
    pub middle: MagneticLeg,
    pub left: MagneticLeg,
    pub right: MagneticLeg,
    pub gap: AirGap,
    pub ac_winding: Winding,
    pub dc_left: Winding,
    pub dc_right: Winding,
}

/// Partial derivatives of the two loop residuals with respect to
/// `(Φ_left, Φ_right, i_ac)`.
pub type ResidualJacobian = [[f64; 3]; 2];

pub fn build_cvsr(params: &CvsrParams) -> Result<CvsrNetwork> {
    if !(params.area.is_finite() && params.area > 0.0) {
        return Err(Error::invalid("area", "must be finite and > 0"));
    }
    let middle = MagneticLeg::new(params.middle_length, params.area, params.material.clone())
        .map_err(|_| Error::invalid("middle_length", "must be finite and > 0"))?;
    let left = MagneticLeg::new(params.outer_length, params.area, params.material.clone())
        .map_err(|_| Error::invalid("outer_length", "must be finite and > 0"))?;
    let right = left.clone();
    let gap = AirGap::new(params.gap_length, params.area, params.fringing)
        .map_err(|_| Error::invalid("gap_length", "must be finite and > 0"))?;
    let ac_winding = Winding::new(params.n_ac, Polarity::Positive)
        .map_err(|_| Error::invalid("n_ac", "must be at least 1"))?;
    let dc_left = Winding::new(params.n_dc, Polarity::Negative)
        .map_err(|_| Error::invalid("n_dc", "must be at least 1"))?;
    let dc_right = Winding::new(params.n_dc, Polarity::Positive)?;
    Ok(CvsrNetwork {
        middle,
        left,
        right,
        gap,
        ac_winding,
        dc_left,
        dc_right,
    })
}

impl CvsrNetwork {
    /// Parameters the network was built from.
    pub fn params(&self) -> CvsrParams {
        CvsrParams {
            middle_length: self.middle.length(),
            outer_length: self.left.length(),
            area: self.middle.area(),
            gap_length: self.gap.gap_length(),
            fringing: self.gap.fringing(),
            n_ac: self.ac_winding.turns(),
            n_dc: self.dc_right.turns(),
            material: self.middle.curve().clone(),
        }
    }

    pub fn middle_flux(flux_left: f64, flux_right: f64) -> f64 {
        flux_left + flux_right
    }

    /// Loop MMF balance of the left and right meshes, A-turns. Both entries
    /// vanish at a consistent magnetic state.
    pub fn residual(&self, flux_left: f64, flux_right: f64, i_ac: f64, i_dc: f64) -> Result<[f64; 2]> {
        finite4("magnetic_residual", flux_left, flux_right, i_ac, i_dc)?;
        let phi_m = Self::middle_flux(flux_left, flux_right);
        let shared = self.middle.mmf(phi_m)? + self.gap.mmf(phi_m);
        let drive = self.ac_winding.mmf(i_ac);
        Ok([
            drive + self.dc_left.mmf(i_dc) - (shared + self.left.mmf(flux_left)?),
            drive + self.dc_right.mmf(i_dc) - (shared + self.right.mmf(flux_right)?),
        ])
    }

    pub fn jacobian(&self, flux_left: f64, flux_right: f64, i_ac: f64, i_dc: f64) -> Result<ResidualJacobian> {
        finite4("residual_jacobian", flux_left, flux_right, i_ac, i_dc)?;
        Ok(self.residual_and_jacobian(flux_left, flux_right, i_ac, i_dc)?.1)
    }

    /// Residual and Jacobian from a single pass over the legs.
    pub fn residual_and_jacobian(
        &self,
        flux_left: f64,
        flux_right: f64,
        i_ac: f64,
        i_dc: f64,
    ) -> Result<([f64; 2], ResidualJacobian)> {
        let phi_m = Self::middle_flux(flux_left, flux_right);
        let (f_mid, k_mid) = self.middle.mmf_and_slope(phi_m)?;
        let (f_left, k_left) = self.left.mmf_and_slope(flux_left)?;
        let (f_right, k_right) = self.right.mmf_and_slope(flux_right)?;
        let shared = f_mid + self.gap.mmf(phi_m);
        let k_shared = k_mid + 1.0 / self.gap.permeance();
        let drive = self.ac_winding.mmf(i_ac);
        let n_ac = self.ac_winding.gain();
        let r = [
            drive + self.dc_left.mmf(i_dc) - (shared + f_left),
            drive + self.dc_right.mmf(i_dc) - (shared + f_right),
        ];
        let j = [
            [-(k_shared + k_left), -k_shared, n_ac],
            [-k_shared, -(k_shared + k_right), n_ac],
        ];
        Ok((r, j))
    }

    /// Total stored field energy (three legs plus gap), J.
    pub fn field_energy(&self, flux_left: f64, flux_right: f64) -> Result<f64> {
        let phi_m = Self::middle_flux(flux_left, flux_right);
        Ok(self.middle.energy(phi_m)?
            + self.gap.energy(phi_m)
            + self.left.energy(flux_left)?
            + self.right.energy(flux_right)?)
    }
}

pub fn leg_mmf(leg: &MagneticLeg, flux: f64) -> Result<f64> {
    leg.mmf(flux)
}

pub fn gap_mmf(gap: &AirGap, flux: f64) -> f64 {
    gap.mmf(flux)
}

pub fn winding_mmf(winding: &Winding, current: f64) -> f64 {
    winding.mmf(current)
}

pub fn winding_emf(winding: &Winding, flux_rate: f64) -> f64 {
    winding.emf(flux_rate)
}

pub fn magnetic_residual(
    net: &CvsrNetwork,
    flux_left: f64,
    flux_right: f64,
    i_ac: f64,
    i_dc: f64,
) -> Result<[f64; 2]> {
    net.residual(flux_left, flux_right, i_ac, i_dc)
}

pub fn residual_jacobian(
    net: &CvsrNetwork,
    flux_left: f64,
    flux_right: f64,
    i_ac: f64,
    i_dc: f64,
) -> Result<ResidualJacobian> {
    net.jacobian(flux_left, flux_right, i_ac, i_dc)
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite and > 0"))
    }
}

fn finite4(op: &'static str, a: f64, b: f64, c: f64, d: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}
