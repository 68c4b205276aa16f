//! Waveform post-processing on uniformly sampled series.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub unit: String,
    pub data: Vec<f64>,
}

/// Uniformly sampled named channels sharing one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    channels: Vec<Channel>,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be finite and > 0"));
        }
        Ok(Self {
            dt,
            channels: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Samples per channel (0 when there are no channels).
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.data.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn push_channel(&mut self, name: &str, unit: &str, data: Vec<f64>) -> Result<()> {
        if let Some(first) = self.channels.first() {
            if first.data.len() != data.len() {
                return Err(Error::LengthMismatch {
                    left: first.data.len(),
                    right: data.len(),
                });
            }
        }
        if self.channels.iter().any(|c| c.name == name) {
            return Err(Error::invalid("channel", alloc::format!("duplicate channel `{name}`")));
        }
        self.channels.push(Channel {
            name: name.to_string(),
            unit: unit.to_string(),
            data,
        });
        Ok(())
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.data.as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.channel(name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    /// Keeps only the named channels, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<TimeSeries> {
        let mut out = TimeSeries::new(self.dt)?;
        out.metadata = self.metadata.clone();
        for &name in names {
            let c = self
                .channels
                .iter()
                .find(|c| c.name == name)
                .ok_or_else(|| Error::UnknownChannel(name.to_string()))?;
            out.push_channel(&c.name, &c.unit, c.data.clone())?;
        }
        Ok(out)
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(|v| v.parse().ok())
    }
}

/// Real, reactive and apparent power over one window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerTriple {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

/// Dc-winding voltage `N_dc·(dΦ_right/dt − dΦ_left/dt)` from flux rates.
pub fn induced_dc_voltage(flux_left_rate: &[f64], flux_right_rate: &[f64], n_dc: f64) -> Result<Vec<f64>> {
    if flux_left_rate.len() != flux_right_rate.len() {
        return Err(Error::LengthMismatch {
            left: flux_left_rate.len(),
            right: flux_right_rate.len(),
        });
    }
    Ok(flux_left_rate
        .iter()
        .zip(flux_right_rate)
        .map(|(l, r)| n_dc * (r - l))
        .collect())
}

/// Sliding-window sums, re-accumulated from scratch once per window to
/// bound the drift of the running update.
struct SlidingSum<'a> {
    x: &'a [f64],
    window: usize,
}

impl SlidingSum<'_> {
    fn sums(&self) -> Vec<f64> {
        let w = self.window;
        let n = self.x.len();
        let mut out = Vec::with_capacity(n + 1 - w);
        let mut acc = 0.0;
        for end in w - 1..n {
            let start = end + 1 - w;
            if (end + 1 - w) % w == 0 {
                acc = self.x[start..=end].iter().sum();
            } else {
                acc += self.x[end] - self.x[start - 1];
            }
            out.push(acc);
        }
        out
    }
}

/// Trailing-window power of a voltage/current pair. Output sample `j`
/// covers input samples `j ..= j + window − 1`, i.e. it is aligned to the
/// window end and the first `window − 1` samples have no output.
pub fn rolling_power(v: &[f64], i: &[f64], window: usize) -> Result<Vec<PowerTriple>> {
    if window == 0 {
        return Err(Error::EmptyWindow);
    }
    if v.len() != i.len() {
        return Err(Error::LengthMismatch {
            left: v.len(),
            right: i.len(),
        });
    }
    if v.len() < window {
        return Err(Error::ShortSeries {
            len: v.len(),
            window,
        });
    }
    let vi: Vec<f64> = v.iter().zip(i).map(|(a, b)| a * b).collect();
    let vv: Vec<f64> = v.iter().map(|a| a * a).collect();
    let ii: Vec<f64> = i.iter().map(|a| a * a).collect();
    let n = window as f64;
    let p_sum = SlidingSum { x: &vi, window }.sums();
    let v_sum = SlidingSum { x: &vv, window }.sums();
    let i_sum = SlidingSum { x: &ii, window }.sums();
    Ok(p_sum
        .iter()
        .zip(v_sum.iter().zip(&i_sum))
        .map(|(&ps, (&vs, &is))| {
            let p = ps / n;
            let s = libm::sqrt((vs / n).max(0.0) * (is / n).max(0.0)).max(p.abs());
            // below ~√ε·s the difference s² − p² is pure rounding noise
            let d = s * s - p * p;
            let q = if d <= 16.0 * f64::EPSILON * s * s { 0.0 } else { libm::sqrt(d) };
            // keep s² = p² + q² exact up to rounding
            let s = libm::sqrt(p * p + q * q);
            PowerTriple { p, q, s }
        })
        .collect())
}

/// Trailing-window RMS, aligned like [`rolling_power`].
pub fn rms(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::EmptyWindow);
    }
    if series.len() < window {
        return Err(Error::ShortSeries {
            len: series.len(),
            window,
        });
    }
    let sq: Vec<f64> = series.iter().map(|x| x * x).collect();
    let n = window as f64;
    Ok(SlidingSum { x: &sq, window }
        .sums()
        .into_iter()
        .map(|s| libm::sqrt((s / n).max(0.0)))
        .collect())
}

/// RMS over a whole slice; 0 for an empty slice.
pub fn rms_of(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    libm::sqrt(series.iter().map(|x| x * x).sum::<f64>() / series.len() as f64)
}

pub fn mean_of(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    series.iter().sum::<f64>() / series.len() as f64
}

/// Single-sided amplitude of the DFT component at `freq` over the whole
/// series (mean removed). For a sinusoid spanning an integer number of its
/// periods this is its peak amplitude.
pub fn spectral_magnitude(series: &[f64], dt: f64, freq: f64) -> f64 {
    let n = series.len();
    if n == 0 {
        return 0.0;
    }
    let mean = mean_of(series);
    let (mut re, mut im) = (0.0, 0.0);
    let w = 2.0 * PI * freq * dt;
    for (k, x) in series.iter().enumerate() {
        let ph = w * k as f64;
        re += (x - mean) * libm::cos(ph);
        im -= (x - mean) * libm::sin(ph);
    }
    2.0 * libm::hypot(re, im) / n as f64
}

/// Frequency of the largest spectral bin strictly between 0 and `f_max`
/// of the Hann-windowed, mean-removed series, refined by a parabola through
/// the log magnitudes of the neighbouring bins. `None` when the series
/// carries no energy beyond its mean.
pub fn dominant_frequency(series: &[f64], dt: f64, f_max: f64) -> Option<f64> {
    let n = series.len();
    if n < 4 || !(dt > 0.0) {
        return None;
    }
    let mean = mean_of(series);
    let energy: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    let scale = series.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if !(energy > (scale * 1e-12) * (scale * 1e-12) * n as f64) {
        return None;
    }
    let windowed: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(k, x)| (x - mean) * (0.5 - 0.5 * libm::cos(2.0 * PI * k as f64 / n as f64)))
        .collect();
    let df = 1.0 / (n as f64 * dt);
    let k_max = (libm::ceil(f_max / df) as usize).max(2).min(n / 2);
    let mags: Vec<f64> = (0..=k_max)
        .map(|k| if k == 0 { 0.0 } else { spectral_magnitude(&windowed, dt, k as f64 * df) })
        .collect();
    let (k_best, &m_best) = mags
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(k, _)| (*k as f64) * df < f_max)
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(m_best > 0.0) {
        return None;
    }
    let mut offset = 0.0;
    if k_best + 1 < mags.len() && mags[k_best - 1] > 0.0 && mags[k_best + 1] > 0.0 {
        let (a, b, c) = (
            libm::log(mags[k_best - 1]),
            libm::log(m_best),
            libm::log(mags[k_best + 1]),
        );
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Some((k_best as f64 + offset) * df)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationReport {
    pub flags: Vec<bool>,
    /// Fraction of samples with |B| ≥ b_sat.
    pub fraction: f64,
    /// Time of the first flagged sample, relative to `t0`.
    pub first_time: Option<f64>,
}

pub fn saturation_flags(b: &[f64], b_sat: f64, dt: f64, t0: f64) -> SaturationReport {
    let flags: Vec<bool> = b.iter().map(|x| x.abs() >= b_sat).collect();
    let count = flags.iter().filter(|&&f| f).count();
    SaturationReport {
        fraction: if flags.is_empty() { 0.0 } else { count as f64 / flags.len() as f64 },
        first_time: flags.iter().position(|&f| f).map(|k| t0 + k as f64 * dt),
        flags,
    }
}

/// Lag in samples (within ±`max_lag`) maximizing the normalized
/// cross-correlation of the mean-removed series; positive when `b` lags
/// `a`.
pub fn cross_correlation_peak_lag(a: &[f64], b: &[f64], max_lag: usize) -> Result<isize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    let (ma, mb) = (mean_of(a), mean_of(b));
    let mut best = (0_isize, f64::NEG_INFINITY);
    let max_lag = max_lag.min(n.saturating_sub(1)) as isize;
    for lag in -max_lag..=max_lag {
        let (mut acc, mut count) = (0.0, 0usize);
        for k in 0..n as isize {
            let j = k + lag;
            if j >= 0 && (j as usize) < n {
                acc += (a[k as usize] - ma) * (b[j as usize] - mb);
                count += 1;
            }
        }
        let c = if count > 0 { acc / n as f64 } else { 0.0 };
        if c > best.1 {
            best = (lag, c);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sine(n: usize, cycles: f64, phase: f64, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|k| amp * libm::sin(2.0 * PI * cycles * k as f64 / n as f64 + phase))
            .collect()
    }

    #[test]
    fn induced_voltage_examples() {
        let same = vec![1e-3, -2e-3, 5e-4];
        assert!(induced_dc_voltage(&same, &same, 450.0).unwrap().iter().all(|&v| v == 0.0));
        let e = induced_dc_voltage(&[2e-3], &[-1e-3], 450.0).unwrap();
        assert!((e[0] + 1.35).abs() < 1e-12);
        assert!(induced_dc_voltage(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn rolling_power_zero_and_in_phase() {
        let z = vec![0.0; 10];
        assert!(rolling_power(&z, &z, 5).unwrap().iter().all(|t| *t == PowerTriple::default()));
        let n = 200;
        let v = sine(n, 1.0, 0.0, core::f64::consts::SQRT_2);
        let out = rolling_power(&v, &v, n).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].p - 1.0).abs() < 1e-12);
        assert!(out[0].q.abs() < 1e-6);
        assert!((out[0].s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rolling_power_quadrature() {
        let n = 200;
        let v = sine(n * 3, 3.0, 0.0, core::f64::consts::SQRT_2);
        let i = sine(n * 3, 3.0, PI / 2.0, core::f64::consts::SQRT_2);
        for t in rolling_power(&v, &i, n).unwrap() {
            assert!(t.p.abs() < 1e-12);
            assert!((t.q - 1.0).abs() < 1e-12);
            assert!((t.s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rolling_power_short_series() {
        assert!(matches!(
            rolling_power(&[1.0; 3], &[1.0; 3], 4),
            Err(Error::ShortSeries { len: 3, window: 4 })
        ));
    }

    #[test]
    fn rms_examples() {
        let c = vec![-3.0; 50];
        assert!(rms(&c, 10).unwrap().iter().all(|&r| (r - 3.0).abs() < 1e-12));
        let s = sine(1000, 1.0, 0.3, core::f64::consts::SQRT_2);
        assert!((rms(&s, 1000).unwrap()[0] - 1.0).abs() < 1e-6);
        assert_eq!(rms(&s, 0), Err(Error::EmptyWindow));
    }

    #[test]
    fn dominant_frequency_examples() {
        let dt = 1.0 / 120_000.0;
        let n = 8000; // four 60 Hz cycles
        let x: Vec<f64> = (0..n).map(|k| libm::sin(2.0 * PI * 120.0 * k as f64 * dt)).collect();
        let f = dominant_frequency(&x, dt, 600.0).unwrap();
        assert!((f - 120.0).abs() < 0.5, "{f}");
        assert_eq!(dominant_frequency(&vec![2.5; n], dt, 600.0), None);
        assert_eq!(dominant_frequency(&vec![0.0; n], dt, 600.0), None);
    }

    #[test]
    fn dominant_frequency_interpolates_between_bins() {
        let dt = 1e-3;
        let n = 1000; // 1 Hz bins
        let x: Vec<f64> = (0..n).map(|k| libm::sin(2.0 * PI * 50.3 * k as f64 * dt)).collect();
        let f = dominant_frequency(&x, dt, 200.0).unwrap();
        assert!((f - 50.3).abs() < 0.2, "{f}");
    }

    #[test]
    fn saturation_summary() {
        let r = saturation_flags(&[0.1, -0.5, 1.0], 1.34, 0.1, 0.0);
        assert_eq!(r.flags, vec![false; 3]);
        assert_eq!(r.first_time, None);
        let r = saturation_flags(&[0.1, 1.4, -1.5, 0.0], 1.34, 0.5, 1.0);
        assert_eq!(r.fraction, 0.5);
        assert_eq!(r.first_time, Some(1.5));
    }

    #[test]
    fn cross_correlation_finds_shift() {
        let a = sine(400, 4.0, 0.0, 1.0);
        let shifted: Vec<f64> = (0..400).map(|k| a[(k + 400 - 7) % 400]).collect();
        assert_eq!(cross_correlation_peak_lag(&a, &shifted, 40).unwrap(), 7);
        assert_eq!(cross_correlation_peak_lag(&a, &a, 40).unwrap(), 0);
    }

    #[test]
    fn time_series_rejects_ragged_channels() {
        let mut ts = TimeSeries::new(0.1).unwrap();
        ts.push_channel("a", "V", vec![1.0, 2.0]).unwrap();
        assert!(ts.push_channel("b", "V", vec![1.0]).is_err());
        assert!(ts.push_channel("a", "V", vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new(0.0).is_err());
    }
}
