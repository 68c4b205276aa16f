//! Per-scenario figures of merit.
//!
//! Everything here is computed from the emitted channels plus a few
//! scenario constants, so the same numbers can be recomputed from a
//! waveform CSV. The time step is taken from the `t` channel rather than
//! the solver configuration for the same reason.

use std::fmt::Write as _;
use std::io::{self, Write};

use cvsr_core::analysis::{TimeSeries, dominant_frequency, rms_of, rolling_power, saturation_flags};

use crate::config::Scenario;
use crate::csvio::format_value;

/// Scenario constants needed to interpret a waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryContext {
    pub frequency: f64,
    pub i_dc: f64,
    pub b_sat: f64,
    /// Fault instant, when a fault is applied.
    pub t_fault: Option<f64>,
}

impl SummaryContext {
    pub fn of(s: &Scenario) -> Self {
        Self {
            frequency: s.source.frequency,
            i_dc: s.dc_bias,
            b_sat: s.material.saturation_threshold(),
            t_fault: s.fault.enabled.then_some(s.fault.t_fault),
        }
    }
}

/// Figures for one run; `None` when a needed channel was not emitted or
/// the run is too short.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    /// RMS ac current over the last cycle.
    pub rms_i_ac: Option<f64>,
    /// RMS ac current over the cycle just before the fault.
    pub rms_i_ac_prefault: Option<f64>,
    pub peak_b_middle: Option<f64>,
    pub peak_b_left: Option<f64>,
    pub peak_b_right: Option<f64>,
    /// RMS of the voltage induced across the dc winding, last cycle.
    pub rms_e_dc: Option<f64>,
    pub rms_v_ac_winding: Option<f64>,
    /// Dc-side real, reactive and apparent power over the last cycle.
    pub p_dc: Option<f64>,
    pub q_dc: Option<f64>,
    pub s_dc: Option<f64>,
    /// Dominant frequency of e_dc over the last four cycles; `None` when
    /// e_dc is at noise level.
    pub f_dom_e_dc: Option<f64>,
    /// Share of the last cycle with |B| at or above saturation.
    pub sat_fraction_middle: Option<f64>,
    pub sat_fraction_left: Option<f64>,
    pub sat_fraction_right: Option<f64>,
    /// First instant the middle leg reaches saturation.
    pub t_sat_middle: Option<f64>,
}

impl Metrics {
    pub fn columns(&self) -> [(&'static str, Option<f64>); 15] {
        [
            ("rms_i_ac_A", self.rms_i_ac),
            ("rms_i_ac_prefault_A", self.rms_i_ac_prefault),
            ("peak_b_middle_T", self.peak_b_middle),
            ("peak_b_left_T", self.peak_b_left),
            ("peak_b_right_T", self.peak_b_right),
            ("rms_e_dc_V", self.rms_e_dc),
            ("rms_v_ac_winding_V", self.rms_v_ac_winding),
            ("p_dc_W", self.p_dc),
            ("q_dc_var", self.q_dc),
            ("s_dc_VA", self.s_dc),
            ("f_dom_e_dc_Hz", self.f_dom_e_dc),
            ("sat_fraction_middle", self.sat_fraction_middle),
            ("sat_fraction_left", self.sat_fraction_left),
            ("sat_fraction_right", self.sat_fraction_right),
            ("t_sat_middle_s", self.t_sat_middle),
        ]
    }
}

/// Induced voltage below this share of the ac winding voltage is treated
/// as numerical noise when picking its dominant frequency.
pub const NOISE_FLOOR: f64 = 1e-9;

/// Sample spacing and samples per source cycle, from the time channel.
fn grid(ts: &TimeSeries, frequency: f64) -> Option<(f64, usize)> {
    let t = ts.channel("t")?;
    if t.len() < 2 {
        return None;
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let n = (1.0 / (frequency * dt)).round() as usize;
    (n >= 1).then_some((dt, n))
}

/// The last `cycles` whole cycles, excluding the final sample so that a
/// window of `n` samples spans exactly one period.
fn tail(x: &[f64], n: usize, cycles: usize) -> Option<&[f64]> {
    let len = n * cycles;
    (x.len() > len).then(|| &x[x.len() - 1 - len..x.len() - 1])
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn summarize(ts: &TimeSeries, ctx: &SummaryContext) -> Metrics {
    let mut m = Metrics::default();
    let Some((dt, n)) = grid(ts, ctx.frequency) else {
        return m;
    };
    let last = |name: &str| ts.channel(name).and_then(|x| tail(x, n, 1));

    m.rms_i_ac = last("i_ac").map(rms_of);
    if let (Some(tf), Some(i)) = (ctx.t_fault, ts.channel("i_ac")) {
        let t0 = ts.channel("t").map_or(0.0, |t| t[0]);
        let kf = ((tf - t0) / dt).round();
        if kf >= n as f64 && (kf as usize) < i.len() {
            let kf = kf as usize;
            m.rms_i_ac_prefault = Some(rms_of(&i[kf - n..kf]));
        }
    }
    m.peak_b_middle = ts.channel("b_middle").map(peak);
    m.peak_b_left = ts.channel("b_left").map(peak);
    m.peak_b_right = ts.channel("b_right").map(peak);
    m.rms_e_dc = last("e_dc").map(rms_of);
    m.rms_v_ac_winding = last("v_ac_winding").map(rms_of);
    if let Some(e) = last("e_dc") {
        let i = vec![ctx.i_dc; e.len()];
        if let Ok(p) = rolling_power(e, &i, n) {
            let p = p[p.len() - 1];
            (m.p_dc, m.q_dc, m.s_dc) = (Some(p.p), Some(p.q), Some(p.s));
        }
    }
    // rounding noise has no meaningful spectrum
    let audible = match (m.rms_e_dc, m.rms_v_ac_winding) {
        (Some(e), Some(v)) => e > NOISE_FLOOR * v,
        _ => true,
    };
    if let (Some(e), true) = (ts.channel("e_dc"), audible) {
        let cycles = (e.len().saturating_sub(1) / n).min(4);
        if let Some(w) = tail(e, n, cycles.max(1)) {
            m.f_dom_e_dc = dominant_frequency(w, dt, 10.0 * ctx.frequency);
        }
    }
    let frac = |name: &str| last(name).map(|b| saturation_flags(b, ctx.b_sat, dt, 0.0).fraction);
    m.sat_fraction_middle = frac("b_middle");
    m.sat_fraction_left = frac("b_left");
    m.sat_fraction_right = frac("b_right");
    if let (Some(b), Some(t)) = (ts.channel("b_middle"), ts.channel("t")) {
        m.t_sat_middle = saturation_flags(b, ctx.b_sat, dt, 0.0)
            .flags
            .iter()
            .position(|&f| f)
            .map(|k| t[k]);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub name: String,
    pub i_dc: f64,
    pub fault: bool,
    pub status: Status,
    pub metrics: Metrics,
}

impl SummaryReport {
    pub fn ok(&self) -> bool {
        self.status == Status::Ok
    }
}

const FIXED_COLUMNS: [&str; 4] = ["name", "status", "i_dc_A", "fault"];

/// Machine-readable summary: one row per scenario, same number format as
/// the waveform files, empty cells for unavailable figures.
pub fn write_summary_csv<W: Write>(reports: &[SummaryReport], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
    header.extend(Metrics::default().columns().iter().map(|(k, _)| *k));
    header.push("error");
    w.write_record(&header)?;
    for r in reports {
        let (status, error) = match &r.status {
            Status::Ok => ("ok", String::new()),
            Status::Failed(e) => ("failed", e.clone()),
        };
        let mut row = vec![
            r.name.clone(),
            status.to_string(),
            format_value(r.i_dc),
            r.fault.to_string(),
        ];
        row.extend(r.metrics.columns().iter().map(|(_, v)| v.map(format_value).unwrap_or_default()));
        row.push(error);
        w.write_record(&row)?;
    }
    w.flush()
}

fn short(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

/// Plain-text rendering of the summary table.
pub fn render_text(reports: &[SummaryReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<22} {:>7} {:>5} {:>6}  {:>12} {:>12} {:>10} {:>10} {:>10} {:>12} {:>10}",
        "scenario", "i_dc/A", "fault", "status", "I_ac rms/A", "I_pre rms/A", "|B|mid/T", "|B|left/T", "|B|right/T", "e_dc rms/V", "f_e_dc/Hz"
    );
    for r in reports {
        let m = &r.metrics;
        let status = if r.ok() { "ok" } else { "FAILED" };
        let _ = writeln!(
            s,
            "{:<22} {:>7} {:>5} {:>6}  {:>12} {:>12} {:>10} {:>10} {:>10} {:>12} {:>10}",
            r.name,
            r.i_dc,
            if r.fault { "yes" } else { "no" },
            status,
            short(m.rms_i_ac),
            short(m.rms_i_ac_prefault),
            short(m.peak_b_middle),
            short(m.peak_b_left),
            short(m.peak_b_right),
            short(m.rms_e_dc),
            short(m.f_dom_e_dc),
        );
        if let Status::Failed(e) = &r.status {
            let _ = writeln!(s, "    error: {e}");
        }
    }
    s
}
