//! Anhysteretic B-H relations.
//!
//! The default curve is an odd, smooth saturating law
//!
//! ```text
//! B(H) = B_sat · S(H / H_knee) + μ0 · H
//! S(x) = sign(x) · [ (2/π) · atan((π/2) · |x|^k) ]^(1/k)
//! ```
//!
//! with `H_knee = B_sat / (μ0 · (μ_r_init − 1))`, so that the slope at the
//! origin is exactly `μ_r_init · μ0` and the slope tends to `μ0` in deep
//! saturation. `k` (knee sharpness) only shapes the transition; `k = 1` is
//! the plain arctangent curve.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, FRAC_PI_2};

use crate::{Error, MU_0, Result};

const INVERSE_MAX_ITER: usize = 100;

/// Saturating anhysteretic curve parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticCurve {
    b_sat: f64,
    mu_r_init: f64,
    knee_sharpness: f64,
    h_knee: f64,
}

impl AnalyticCurve {
    pub const DEFAULT_B_SAT: f64 = 1.34;
    pub const DEFAULT_MU_R_INIT: f64 = 600.0;
    pub const DEFAULT_KNEE_SHARPNESS: f64 = 1.4;

    pub fn new(b_sat: f64, mu_r_init: f64, knee_sharpness: f64) -> Result<Self> {
        if !(b_sat.is_finite() && b_sat > 0.0) {
            return Err(Error::invalid("b_sat", "must be finite and > 0"));
        }
        if !(mu_r_init.is_finite() && mu_r_init > 1.0) {
            return Err(Error::invalid("mu_r_init", "must be finite and > 1"));
        }
        if !(knee_sharpness.is_finite() && knee_sharpness > 0.0) {
            return Err(Error::invalid("knee_sharpness", "must be finite and > 0"));
        }
        Ok(Self {
            b_sat,
            mu_r_init,
            knee_sharpness,
            h_knee: b_sat / (MU_0 * (mu_r_init - 1.0)),
        })
    }

    pub fn b_sat(&self) -> f64 {
        self.b_sat
    }

    pub fn mu_r_init(&self) -> f64 {
        self.mu_r_init
    }

    pub fn knee_sharpness(&self) -> f64 {
        self.knee_sharpness
    }

    /// Field intensity scale of the knee, A/m.
    pub fn h_knee(&self) -> f64 {
        self.h_knee
    }

    // atan(z)/z, finite at z = 0
    fn atan_ratio(z: f64) -> f64 {
        if z < 1e-8 { 1.0 - z * z / 3.0 } else { libm::atan(z) / z }
    }

    fn shape(&self, x: f64) -> f64 {
        let ax = x.abs();
        let k = self.knee_sharpness;
        let z = FRAC_PI_2 * libm::pow(ax, k);
        let s = ax * libm::pow(Self::atan_ratio(z), 1.0 / k);
        s.copysign(x)
    }

    fn shape_slope(&self, x: f64) -> f64 {
        let ax = x.abs();
        let k = self.knee_sharpness;
        let z = FRAC_PI_2 * libm::pow(ax, k);
        libm::pow(Self::atan_ratio(z), 1.0 / k - 1.0) / (1.0 + z * z)
    }

    fn shape_integral(&self, x: f64) -> f64 {
        let ax = x.abs();
        if self.knee_sharpness == 1.0 {
            // closed form of ∫ (2/π)·atan(πx/2) dx
            let z = FRAC_PI_2 * ax;
            return FRAC_2_PI * (ax * libm::atan(z) - libm::log1p(z * z) / core::f64::consts::PI);
        }
        // smooth and monotone: fixed Gauss-Legendre panels, narrow through
        // the knee and doubling in the tail
        let mut acc = 0.0;
        let mut lo = 0.0;
        while lo < ax {
            let hi = if lo < 4.0 { (lo + 0.25).min(ax) } else { (lo * 2.0).min(ax) };
            acc += gauss_legendre(&|t| self.shape(t), lo, hi);
            lo = hi;
        }
        acc
    }

    fn b_of_h(&self, h: f64) -> f64 {
        self.b_sat * self.shape(h / self.h_knee) + MU_0 * h
    }

    fn db_dh(&self, h: f64) -> f64 {
        self.b_sat / self.h_knee * self.shape_slope(h / self.h_knee) + MU_0
    }

    fn h_of_b(&self, b: f64) -> Result<f64> {
        if b == 0.0 {
            return Ok(0.0);
        }
        let target = b.abs();
        // B(H) ≥ μ0·H for H ≥ 0 bounds the root from above.
        let mut lo = 0.0_f64;
        let mut hi = target / MU_0;
        // The curve is concave on H > 0, so both guesses sit at or below the
        // root and the Newton sequence from there increases monotonically.
        let mut h = (target / (self.mu_r_init * MU_0)).max((target - self.b_sat) / MU_0);
        for _ in 0..INVERSE_MAX_ITER {
            let f = self.b_of_h(h) - target;
            if f == 0.0 {
                return Ok(h.copysign(b));
            }
            if f < 0.0 {
                lo = lo.max(h);
            } else {
                hi = hi.min(h);
            }
            let mut next = h - f / self.db_dh(h);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - h).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next.copysign(b));
            }
            h = next;
        }
        Err(Error::InverseNotConverged { b, lo: lo.copysign(b), hi: hi.copysign(b) })
    }

    fn energy_density(&self, b: f64) -> Result<f64> {
        let h = self.h_of_b(b)?.abs();
        let co = self.b_sat * self.h_knee * self.shape_integral(h / self.h_knee) + 0.5 * MU_0 * h * h;
        Ok(h * b.abs() - co)
    }
}

const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Ten-point Gauss-Legendre rule on `[a, b]`.
fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let sum: f64 = GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(x, w)| w * (f(c - r * x) + f(c + r * x)))
        .sum();
    r * sum
}

/// Monotone piecewise-linear B-H table, odd-extended when only H ≥ 0 is
/// supplied. Outside the tabulated range the slope is μ0.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCurve {
    h: Vec<f64>,
    b: Vec<f64>,
}

impl TableCurve {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("curve", "need at least two points"));
        }
        if points.iter().any(|(h, b)| !h.is_finite() || !b.is_finite()) {
            return Err(Error::NonFinite("TableCurve::new"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid("curve", "H must be strictly increasing"));
            }
            if !(w[1].1 > w[0].1) {
                return Err(Error::invalid("curve", "B must be strictly increasing"));
            }
        }
        if !points.iter().any(|&(h, b)| h == 0.0 && b == 0.0) {
            return Err(Error::invalid("curve", "must contain the point H = 0, B = 0"));
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len() * 2);
        if points[0].0 == 0.0 {
            pts.extend(points.iter().skip(1).rev().map(|&(h, b)| (-h, -b)));
        }
        pts.extend_from_slice(points);
        Ok(Self {
            h: pts.iter().map(|p| p.0).collect(),
            b: pts.iter().map(|p| p.1).collect(),
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.h.iter().copied().zip(self.b.iter().copied())
    }

    // Segment index i such that xs[i] ≤ x < xs[i+1], clamped to the ends.
    fn segment(xs: &[f64], x: f64) -> usize {
        let i = xs.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(xs.len() - 2)
    }

    fn b_of_h(&self, h: f64) -> f64 {
        let n = self.h.len();
        if h <= self.h[0] {
            return self.b[0] + MU_0 * (h - self.h[0]);
        }
        if h >= self.h[n - 1] {
            return self.b[n - 1] + MU_0 * (h - self.h[n - 1]);
        }
        let i = Self::segment(&self.h, h);
        let t = (h - self.h[i]) / (self.h[i + 1] - self.h[i]);
        self.b[i] + t * (self.b[i + 1] - self.b[i])
    }

    fn h_of_b(&self, b: f64) -> f64 {
        let n = self.b.len();
        if b <= self.b[0] {
            return self.h[0] + (b - self.b[0]) / MU_0;
        }
        if b >= self.b[n - 1] {
            return self.h[n - 1] + (b - self.b[n - 1]) / MU_0;
        }
        let i = Self::segment(&self.b, b);
        let t = (b - self.b[i]) / (self.b[i + 1] - self.b[i]);
        self.h[i] + t * (self.h[i + 1] - self.h[i])
    }

    fn dh_db(&self, b: f64) -> f64 {
        let n = self.b.len();
        if b < self.b[0] || b >= self.b[n - 1] {
            return 1.0 / MU_0;
        }
        let i = Self::segment(&self.b, b);
        (self.h[i + 1] - self.h[i]) / (self.b[i + 1] - self.b[i])
    }

    fn energy_density(&self, b: f64) -> f64 {
        // ∫_0^b H dB, exact for piecewise-linear H(B)
        let (lo, hi, sign) = if b >= 0.0 { (0.0, b, 1.0) } else { (b, 0.0, -1.0) };
        let mut knots: Vec<f64> = Vec::with_capacity(self.b.len() + 2);
        knots.push(lo);
        knots.extend(self.b.iter().copied().filter(|&v| v > lo && v < hi));
        knots.push(hi);
        let area: f64 = knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.h_of_b(w[0]) + self.h_of_b(w[1])))
            .sum();
        sign * area
    }
}

/// Single-valued B-H relation used by every magnetic leg.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialCurve {
    Analytic(AnalyticCurve),
    /// Constant permeability `μ_r·μ0`; no saturation.
    Linear { mu_r: f64 },
    Table(TableCurve),
}

impl Default for MaterialCurve {
    fn default() -> Self {
        MaterialCurve::Analytic(
            AnalyticCurve::new(
                AnalyticCurve::DEFAULT_B_SAT,
                AnalyticCurve::DEFAULT_MU_R_INIT,
                AnalyticCurve::DEFAULT_KNEE_SHARPNESS,
            )
            .expect("default curve parameters are valid"),
        )
    }
}

impl MaterialCurve {
    pub fn analytic(b_sat: f64, mu_r_init: f64, knee_sharpness: f64) -> Result<Self> {
        AnalyticCurve::new(b_sat, mu_r_init, knee_sharpness).map(MaterialCurve::Analytic)
    }

    pub fn linear(mu_r: f64) -> Result<Self> {
        if !(mu_r.is_finite() && mu_r > 0.0) {
            return Err(Error::invalid("mu_r", "must be finite and > 0"));
        }
        Ok(MaterialCurve::Linear { mu_r })
    }

    pub fn table(points: &[(f64, f64)]) -> Result<Self> {
        TableCurve::new(points).map(MaterialCurve::Table)
    }

    /// Flux density for a field intensity, T.
    pub fn b_of_h(&self, h: f64) -> Result<f64> {
        if !h.is_finite() {
            return Err(Error::NonFinite("b_of_h"));
        }
        Ok(match self {
            MaterialCurve::Analytic(c) => c.b_of_h(h),
            MaterialCurve::Linear { mu_r } => mu_r * MU_0 * h,
            MaterialCurve::Table(t) => t.b_of_h(h),
        })
    }

    /// Differential permeability dB/dH at a field intensity, H/m.
    pub fn db_dh(&self, h: f64) -> Result<f64> {
        if !h.is_finite() {
            return Err(Error::NonFinite("db_dh"));
        }
        Ok(match self {
            MaterialCurve::Analytic(c) => c.db_dh(h),
            MaterialCurve::Linear { mu_r } => mu_r * MU_0,
            MaterialCurve::Table(t) => 1.0 / t.dh_db(t.b_of_h(h)),
        })
    }

    /// Field intensity for a flux density, A/m.
    pub fn h_of_b(&self, b: f64) -> Result<f64> {
        if !b.is_finite() {
            return Err(Error::NonFinite("h_of_b"));
        }
        match self {
            MaterialCurve::Analytic(c) => c.h_of_b(b),
            MaterialCurve::Linear { mu_r } => Ok(b / (mu_r * MU_0)),
            MaterialCurve::Table(t) => Ok(t.h_of_b(b)),
        }
    }

    /// Differential reluctivity dH/dB at a flux density, (A/m)/T.
    pub fn dh_db(&self, b: f64) -> Result<f64> {
        if !b.is_finite() {
            return Err(Error::NonFinite("dh_db"));
        }
        match self {
            MaterialCurve::Analytic(c) => Ok(1.0 / c.db_dh(c.h_of_b(b)?)),
            MaterialCurve::Linear { mu_r } => Ok(1.0 / (mu_r * MU_0)),
            MaterialCurve::Table(t) => Ok(t.dh_db(b)),
        }
    }

    /// Field intensity and dH/dB in one inverse evaluation.
    pub fn h_and_dh_db(&self, b: f64) -> Result<(f64, f64)> {
        match self {
            MaterialCurve::Analytic(c) => {
                if !b.is_finite() {
                    return Err(Error::NonFinite("h_of_b"));
                }
                let h = c.h_of_b(b)?;
                Ok((h, 1.0 / c.db_dh(h)))
            }
            _ => Ok((self.h_of_b(b)?, self.dh_db(b)?)),
        }
    }

    /// Stored energy density ∫₀ᴮ H dB', J/m³.
    pub fn energy_density(&self, b: f64) -> Result<f64> {
        if !b.is_finite() {
            return Err(Error::NonFinite("energy_density"));
        }
        match self {
            MaterialCurve::Analytic(c) => c.energy_density(b),
            MaterialCurve::Linear { mu_r } => Ok(0.5 * b * b / (mu_r * MU_0)),
            MaterialCurve::Table(t) => Ok(t.energy_density(b)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> MaterialCurve {
        MaterialCurve::default()
    }

    #[test]
    fn origin_and_symmetry() {
        let c = curve();
        assert_eq!(c.b_of_h(0.0).unwrap(), 0.0);
        assert_eq!(c.h_of_b(0.0).unwrap(), 0.0);
        let b = c.b_of_h(100.0).unwrap();
        assert_eq!(c.b_of_h(-100.0).unwrap(), -b);
        assert_eq!(c.dh_db(0.7).unwrap(), c.dh_db(-0.7).unwrap());
    }

    #[test]
    fn initial_slope() {
        for k in [0.7, 1.0, 1.4, 3.0] {
            let a = AnalyticCurve::new(1.34, 2500.0, k).unwrap();
            let c = MaterialCurve::Analytic(a);
            let slope = c.db_dh(0.0).unwrap();
            assert!((slope / (2500.0 * MU_0) - 1.0).abs() < 1e-12, "k = {k}");
            let dh = c.dh_db(0.0).unwrap();
            assert!((dh * 2500.0 * MU_0 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn deep_saturation_slope_is_mu0() {
        let c = curve();
        let h_big = 1.0e6;
        assert!(c.b_of_h(h_big).unwrap() > 0.99 * (1.34 + MU_0 * h_big));
        let fd = (c.b_of_h(h_big + 1000.0).unwrap() - c.b_of_h(h_big).unwrap()) / 1000.0;
        assert!((fd / MU_0 - 1.0).abs() < 0.05, "fd slope {fd}");
    }

    #[test]
    fn asymptote_ten_knees_out() {
        let MaterialCurve::Analytic(a) = curve() else { unreachable!() };
        let c = curve();
        let h_sat = c.h_of_b(1.34).unwrap();
        let h = 10.0 * h_sat;
        let fd = (c.b_of_h(h + 1.0).unwrap() - c.b_of_h(h - 1.0).unwrap()) / 2.0;
        assert!((fd / MU_0 - 1.0).abs() < 0.05, "slope {fd}, h_knee {}", a.h_knee());
    }

    #[test]
    fn inverse_roundtrip_at_500() {
        let c = curve();
        let h = c.h_of_b(c.b_of_h(500.0).unwrap()).unwrap();
        assert!((h - 500.0).abs() / 500.0 < 1e-8);
    }

    #[test]
    fn inverse_lies_in_monotone_bracket() {
        let c = curve();
        let h_star = 2.0e4;
        let b = 0.99 * c.b_of_h(h_star).unwrap();
        let h = c.h_of_b(b).unwrap();
        assert!(h > 0.0 && h < h_star);
    }

    #[test]
    fn dh_db_matches_central_difference() {
        let c = curve();
        let b = 0.5;
        let d = 1e-6;
        let fd = (c.h_of_b(b + d).unwrap() - c.h_of_b(b - d).unwrap()) / (2.0 * d);
        let an = c.dh_db(b).unwrap();
        assert!((an - fd).abs() / fd < 1e-4, "{an} vs {fd}");
    }

    #[test]
    fn non_finite_is_rejected() {
        let c = curve();
        assert!(matches!(c.b_of_h(f64::NAN), Err(Error::NonFinite(_))));
        assert!(matches!(c.h_of_b(f64::INFINITY), Err(Error::NonFinite(_))));
        assert!(matches!(c.dh_db(f64::NAN), Err(Error::NonFinite(_))));
    }

    #[test]
    fn invalid_parameters() {
        assert!(MaterialCurve::analytic(0.0, 2500.0, 1.0).is_err());
        assert!(MaterialCurve::analytic(1.34, 1.0, 1.0).is_err());
        assert!(MaterialCurve::analytic(1.34, 2500.0, 0.0).is_err());
        assert!(MaterialCurve::linear(-1.0).is_err());
    }

    #[test]
    fn energy_density_matches_quadrature() {
        // Oracle: midpoint rule on ∫ H(B) dB with the inverse curve.
        for c in [
            curve(),
            MaterialCurve::analytic(1.34, 2500.0, 1.0).unwrap(),
            MaterialCurve::linear(2500.0).unwrap(),
        ] {
            for b in [0.3, 1.2, 1.5, -1.45] {
                let n = 20_000;
                let step = b / n as f64;
                let mut acc = 0.0;
                for i in 0..n {
                    acc += c.h_of_b((i as f64 + 0.5) * step).unwrap() * step;
                }
                let w = c.energy_density(b).unwrap();
                assert!((w - acc).abs() <= 1e-7 * acc.abs(), "b {b}: {w} vs {acc}");
            }
        }
    }

    #[test]
    fn energy_density_derivative_is_field() {
        for c in [curve(), MaterialCurve::analytic(1.8, 8000.0, 3.0).unwrap()] {
            for b in [0.05, 0.7, 1.3, 1.42, 1.9, -2.5] {
                let d = 1e-5;
                let fd = (c.energy_density(b + d).unwrap() - c.energy_density(b - d).unwrap()) / (2.0 * d);
                let h = c.h_of_b(b).unwrap();
                assert!((fd - h).abs() <= 1e-6 * h.abs().max(1.0), "b {b}: {fd} vs {h}");
            }
        }
    }

    #[test]
    fn table_curve_is_odd_extended() {
        let t = MaterialCurve::table(&[(0.0, 0.0), (100.0, 1.0), (1000.0, 1.5)]).unwrap();
        assert_eq!(t.b_of_h(50.0).unwrap(), 0.5);
        assert_eq!(t.b_of_h(-50.0).unwrap(), -0.5);
        assert_eq!(t.h_of_b(1.25).unwrap(), 550.0);
        assert!((t.db_dh(5000.0).unwrap() - MU_0).abs() < 1e-18);
        assert!((t.energy_density(1.0).unwrap() - 50.0).abs() < 1e-12);
        assert!((t.energy_density(-1.0).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn table_curve_validation() {
        assert!(MaterialCurve::table(&[(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(MaterialCurve::table(&[(1.0, 0.5), (2.0, 1.0)]).is_err());
        assert!(MaterialCurve::table(&[(0.0, 0.0), (1.0, -1.0)]).is_err());
    }
}
