//! Scenario files.
//!
//! A scenario is a TOML document. Every key is optional; an empty file
//! describes the reference device on a 2.4 kV, 60 Hz feeder run for ten
//! cycles with no fault.
//!
//! ```toml
//! schema_version = 1
//! name = "fault-75mA"
//! dc_bias = 0.075            # A
//!
//! [device]                   # middle_length, outer_length, area, gap_length,
//! n_ac = 300                 # fringing, n_ac, n_dc
//!
//! [material]                 # model = "analytic" | "linear" | "table"
//! model = "analytic"         # analytic: b_sat, mu_r_init, knee_sharpness
//!                            # linear: mu_r     table: curve_csv
//! [source]                   # v_rms, frequency, phase
//! [load]                     # resistance, inductance
//! [fault]                    # enabled, t_fault | after_cycles, retained_fraction
//! enabled = true
//!
//! [solver]                   # dt | samples_per_cycle, t_end | cycles,
//!                            # method, newton_tol, newton_max_iter, startup
//! [outputs]
//! channels = ["i_ac", "b_middle"]
//!
//! [sweep]                    # one scenario per listed bias
//! dc_bias = [0.0, 0.02]
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use cvsr_core::circuits::{AcSource, DcBias, FaultSpec, SeriesLoad};
use cvsr_core::magnetics::{CvsrParams, build_cvsr};
use cvsr_core::material::{AnalyticCurve, MaterialCurve};
use cvsr_core::solver::{CHANNELS, CvsrSystem, Method, SolverConfig, Startup};
use toml::{Table, Value};

use crate::curve::load_curve_csv;

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed document: {0}")]
    Syntax(String),

    #[error("unknown keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("`{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("unknown suite `{0}` (available: paper-nominal, paper-fault)")]
    UnknownSuite(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

impl From<cvsr_core::Error> for ConfigError {
    fn from(e: cvsr_core::Error) -> Self {
        match e {
            cvsr_core::Error::InvalidParameter { field, reason } => invalid(field, reason),
            other => invalid("scenario", other.to_string()),
        }
    }
}

/// Material model as written in the file; a table keeps its source path.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialSpec {
    Analytic {
        b_sat: f64,
        mu_r_init: f64,
        knee_sharpness: f64,
    },
    Linear {
        mu_r: f64,
    },
    Table {
        path: PathBuf,
    },
}

impl Default for MaterialSpec {
    fn default() -> Self {
        MaterialSpec::Analytic {
            b_sat: AnalyticCurve::DEFAULT_B_SAT,
            mu_r_init: AnalyticCurve::DEFAULT_MU_R_INIT,
            knee_sharpness: AnalyticCurve::DEFAULT_KNEE_SHARPNESS,
        }
    }
}

impl MaterialSpec {
    /// Flux density treated as saturation when summarizing a run.
    pub fn saturation_threshold(&self) -> f64 {
        match self {
            MaterialSpec::Analytic { b_sat, .. } => *b_sat,
            _ => AnalyticCurve::DEFAULT_B_SAT,
        }
    }
}

/// A fully validated simulation case.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub device: CvsrParams,
    pub material: MaterialSpec,
    pub source: AcSource,
    pub load: SeriesLoad,
    pub fault: FaultSpec,
    pub dc_bias: f64,
    pub solver: SolverConfig,
    /// Emitted channels, always starting with `t`.
    pub outputs: Vec<String>,
}

impl Default for Scenario {
    fn default() -> Self {
        let source = AcSource::default();
        Self {
            name: "scenario".into(),
            device: CvsrParams::default(),
            material: MaterialSpec::default(),
            fault: FaultSpec {
                t_fault: 2.0 / source.frequency,
                ..FaultSpec::default()
            },
            source,
            load: SeriesLoad::default(),
            dc_bias: 0.0,
            solver: SolverConfig::for_frequency(source.frequency, 10.0, 2000),
            outputs: CHANNELS.iter().map(|(n, _)| n.to_string()).collect(),
        }
    }
}

impl Scenario {
    /// Builds the simulated system, checking every physical parameter.
    pub fn system(&self) -> Result<CvsrSystem, ConfigError> {
        CvsrSystem::new(
            build_cvsr(&self.device).map_err(|e| prefix("device", e))?,
            self.source,
            self.load,
            self.fault,
            DcBias { i_dc: self.dc_bias },
        )
        .map_err(Into::into)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(invalid(
                "name",
                format!("`{}` must be non-empty and use only [A-Za-z0-9._-]", self.name),
            ));
        }
        self.system()?;
        self.solver.validate()?;
        Ok(())
    }
}

/// Human-friendly label for a bias current: `0A`, `20mA`, `5A`.
pub fn bias_label(i_dc: f64) -> String {
    if i_dc == 0.0 || i_dc.abs() >= 1.0 {
        format!("{}A", i_dc)
    } else {
        format!("{}mA", (i_dc * 1e6).round() / 1e3)
    }
}

/// Reads a scenario file; relative curve paths resolve against its folder.
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = parse_scenarios(&text, base)?;
    if !has_key(&text, "name") {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            let stem: String = stem
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
                .collect();
            let single = out.len() == 1;
            for s in &mut out {
                s.name = if single { stem.clone() } else { s.name.replacen("scenario", &stem, 1) };
            }
        }
    }
    Ok(out)
}

fn has_key(text: &str, key: &str) -> bool {
    text.parse::<Table>().map(|t| t.contains_key(key)).unwrap_or(false)
}

/// Parses a document that describes exactly one scenario.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, ConfigError> {
    let mut all = parse_scenarios(text, base_dir)?;
    if all.len() != 1 {
        return Err(invalid("sweep", "a single scenario was expected"));
    }
    Ok(all.remove(0))
}

/// Parses a document into one scenario, or one per swept bias.
pub fn parse_scenarios(text: &str, base_dir: &Path) -> Result<Vec<Scenario>, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut unknown = Vec::new();
    let doc = Document::read(&root, &mut unknown)?;
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownKeys(unknown));
    }
    doc.build(base_dir)
}

/// Typed view of one TOML table that remembers which keys were consumed.
struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
    seen: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: Option<&'a Table>) -> Self {
        Self {
            path: path.into(),
            table,
            seen: BTreeSet::new(),
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() { key.into() } else { format!("{}.{}", self.path, key) }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(invalid(self.field(key), format!("expected a number, found {}", v.type_str()))),
        }
    }

    fn u32(&mut self, key: &'static str) -> Result<Option<u32>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => u32::try_from(*i)
                .map(Some)
                .map_err(|_| invalid(self.field(key), format!("must lie in [0, {}]", u32::MAX))),
            Some(v) => Err(invalid(self.field(key), format!("expected an integer, found {}", v.type_str()))),
        }
    }

    fn bool(&mut self, key: &'static str) -> Result<Option<bool>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(invalid(self.field(key), format!("expected a boolean, found {}", v.type_str()))),
        }
    }

    fn str(&mut self, key: &'static str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(invalid(self.field(key), format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn list(&mut self, key: &'static str) -> Result<Option<&'a [Value]>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a.as_slice())),
            Some(v) => Err(invalid(self.field(key), format!("expected an array, found {}", v.type_str()))),
        }
    }

    /// Records every key of the table that was never asked for.
    fn finish(self, unknown: &mut Vec<String>) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.seen.contains(k.as_str()) {
                    unknown.push(self.field(k));
                }
            }
        }
    }
}

const SECTIONS: [&str; 8] = ["device", "material", "source", "load", "fault", "solver", "outputs", "sweep"];

fn sub_table<'a>(root: &'a Table, key: &str) -> Result<Option<&'a Table>, ConfigError> {
    match root.get(key) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(v) => Err(invalid(key, format!("expected a table, found {}", v.type_str()))),
    }
}

/// Raw values of one document, before defaults are applied.
#[derive(Default)]
struct Document<'a> {
    name: Option<&'a str>,
    dc_bias: Option<f64>,
    device: [Option<f64>; 4],
    fringing: Option<bool>,
    n_ac: Option<u32>,
    n_dc: Option<u32>,
    model: Option<&'a str>,
    b_sat: Option<f64>,
    mu_r_init: Option<f64>,
    knee_sharpness: Option<f64>,
    mu_r: Option<f64>,
    curve_csv: Option<&'a str>,
    v_rms: Option<f64>,
    frequency: Option<f64>,
    phase: Option<f64>,
    resistance: Option<f64>,
    inductance: Option<f64>,
    fault_enabled: Option<bool>,
    t_fault: Option<f64>,
    after_cycles: Option<f64>,
    retained_fraction: Option<f64>,
    dt: Option<f64>,
    samples_per_cycle: Option<f64>,
    t_end: Option<f64>,
    cycles: Option<f64>,
    method: Option<&'a str>,
    newton_tol: Option<f64>,
    newton_max_iter: Option<u32>,
    startup: Option<&'a str>,
    channels: Option<&'a [Value]>,
    sweep: Option<&'a [Value]>,
}

impl<'a> Document<'a> {
    fn read(root: &'a Table, unknown: &mut Vec<String>) -> Result<Self, ConfigError> {
        let mut d = Document::default();
        let mut top = Section::new("", Some(root));
        match top.get("schema_version") {
            None => {}
            Some(Value::Integer(SCHEMA_VERSION)) => {}
            Some(v) => {
                return Err(invalid("schema_version", format!("unsupported version {v}; expected {SCHEMA_VERSION}")));
            }
        }
        d.name = top.str("name")?;
        d.dc_bias = top.f64("dc_bias")?;
        for s in SECTIONS {
            top.seen.insert(s);
        }
        top.finish(unknown);

        let mut s = Section::new("device", sub_table(root, "device")?);
        d.device = [
            s.f64("middle_length")?,
            s.f64("outer_length")?,
            s.f64("area")?,
            s.f64("gap_length")?,
        ];
        d.fringing = s.bool("fringing")?;
        d.n_ac = s.u32("n_ac")?;
        d.n_dc = s.u32("n_dc")?;
        s.finish(unknown);

        let mut s = Section::new("material", sub_table(root, "material")?);
        d.model = s.str("model")?;
        d.b_sat = s.f64("b_sat")?;
        d.mu_r_init = s.f64("mu_r_init")?;
        d.knee_sharpness = s.f64("knee_sharpness")?;
        d.mu_r = s.f64("mu_r")?;
        d.curve_csv = s.str("curve_csv")?;
        s.finish(unknown);

        let mut s = Section::new("source", sub_table(root, "source")?);
        d.v_rms = s.f64("v_rms")?;
        d.frequency = s.f64("frequency")?;
        d.phase = s.f64("phase")?;
        s.finish(unknown);

        let mut s = Section::new("load", sub_table(root, "load")?);
        d.resistance = s.f64("resistance")?;
        d.inductance = s.f64("inductance")?;
        s.finish(unknown);

        let mut s = Section::new("fault", sub_table(root, "fault")?);
        d.fault_enabled = s.bool("enabled")?;
        d.t_fault = s.f64("t_fault")?;
        d.after_cycles = s.f64("after_cycles")?;
        d.retained_fraction = s.f64("retained_fraction")?;
        s.finish(unknown);

        let mut s = Section::new("solver", sub_table(root, "solver")?);
        d.dt = s.f64("dt")?;
        d.samples_per_cycle = s.f64("samples_per_cycle")?;
        d.t_end = s.f64("t_end")?;
        d.cycles = s.f64("cycles")?;
        d.method = s.str("method")?;
        d.newton_tol = s.f64("newton_tol")?;
        d.newton_max_iter = s.u32("newton_max_iter")?;
        d.startup = s.str("startup")?;
        s.finish(unknown);

        let mut s = Section::new("outputs", sub_table(root, "outputs")?);
        d.channels = s.list("channels")?;
        s.finish(unknown);

        let mut s = Section::new("sweep", sub_table(root, "sweep")?);
        d.sweep = s.list("dc_bias")?;
        s.finish(unknown);
        Ok(d)
    }

    fn build(&self, base_dir: &Path) -> Result<Vec<Scenario>, ConfigError> {
        let mut sc = Scenario::default();
        if let Some(n) = self.name {
            sc.name = n.into();
        }
        if let Some(i) = self.dc_bias {
            sc.dc_bias = i;
        }

        let dev = &mut sc.device;
        for (slot, v) in [
            &mut dev.middle_length,
            &mut dev.outer_length,
            &mut dev.area,
            &mut dev.gap_length,
        ]
        .into_iter()
        .zip(self.device)
        {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(f) = self.fringing {
            dev.fringing = f;
        }
        if let Some(n) = self.n_ac {
            dev.n_ac = n;
        }
        if let Some(n) = self.n_dc {
            dev.n_dc = n;
        }

        sc.material = self.material(base_dir)?;
        sc.device.material = realize_material(&sc.material)?;

        let src = &mut sc.source;
        src.v_rms = self.v_rms.unwrap_or(src.v_rms);
        src.frequency = self.frequency.unwrap_or(src.frequency);
        src.phase = self.phase.unwrap_or(src.phase);
        src.validate()?;
        let period = 1.0 / src.frequency;

        sc.load.resistance = self.resistance.unwrap_or(sc.load.resistance);
        sc.load.inductance = self.inductance.unwrap_or(sc.load.inductance);

        sc.fault.enabled = self.fault_enabled.unwrap_or(false);
        sc.fault.t_fault = match (self.t_fault, self.after_cycles) {
            (Some(_), Some(_)) => return Err(invalid("fault.t_fault", "give either t_fault or after_cycles, not both")),
            (Some(t), None) => t,
            (None, Some(c)) => c * period,
            (None, None) => 2.0 * period,
        };
        sc.fault.retained_fraction = self.retained_fraction.unwrap_or(sc.fault.retained_fraction);

        let solver = &mut sc.solver;
        solver.dt = match (self.dt, self.samples_per_cycle) {
            (Some(_), Some(_)) => return Err(invalid("solver.dt", "give either dt or samples_per_cycle, not both")),
            (Some(dt), None) => dt,
            (None, Some(n)) if n >= 1.0 => period / n,
            (None, Some(n)) => return Err(invalid("solver.samples_per_cycle", format!("{n} must be >= 1"))),
            (None, None) => period / 2000.0,
        };
        solver.t_end = match (self.t_end, self.cycles) {
            (Some(_), Some(_)) => return Err(invalid("solver.t_end", "give either t_end or cycles, not both")),
            (Some(t), None) => t,
            (None, Some(c)) => c * period,
            (None, None) => 10.0 * period,
        };
        if let Some(m) = self.method {
            solver.method = match m {
                "trapezoidal" => Method::Trapezoidal,
                "backward-euler" => Method::BackwardEuler,
                other => {
                    return Err(invalid(
                        "solver.method",
                        format!("`{other}` is not one of trapezoidal, backward-euler"),
                    ));
                }
            };
        }
        if let Some(s) = self.startup {
            solver.startup = match s {
                "dc-preset" => Startup::DcPreset,
                "cold" => Startup::Cold,
                other => return Err(invalid("solver.startup", format!("`{other}` is not one of dc-preset, cold"))),
            };
        }
        solver.newton_tol = self.newton_tol.unwrap_or(solver.newton_tol);
        solver.newton_max_iter = self.newton_max_iter.map_or(solver.newton_max_iter, |n| n as usize);

        if let Some(list) = self.channels {
            sc.outputs = channel_selection(list)?;
        }
        sc.validate()?;

        let Some(biases) = self.sweep else {
            return Ok(vec![sc]);
        };
        if biases.is_empty() {
            return Err(invalid("sweep.dc_bias", "must list at least one current"));
        }
        let mut out = Vec::with_capacity(biases.len());
        for (k, v) in biases.iter().enumerate() {
            let i_dc = match v {
                Value::Float(x) => *x,
                Value::Integer(i) => *i as f64,
                other => {
                    return Err(invalid(format!("sweep.dc_bias[{k}]"), format!("expected a number, found {}", other.type_str())));
                }
            };
            let mut s = sc.clone();
            s.dc_bias = i_dc;
            s.name = format!("{}-dc-{}", sc.name, bias_label(i_dc));
            s.validate()?;
            out.push(s);
        }
        check_unique_names(&out)?;
        Ok(out)
    }

    fn material(&self, base_dir: &Path) -> Result<MaterialSpec, ConfigError> {
        let model = self.model.unwrap_or("analytic");
        let stray = |allowed: &[&str]| -> Result<(), ConfigError> {
            for (key, present) in [
                ("b_sat", self.b_sat.is_some()),
                ("mu_r_init", self.mu_r_init.is_some()),
                ("knee_sharpness", self.knee_sharpness.is_some()),
                ("mu_r", self.mu_r.is_some()),
                ("curve_csv", self.curve_csv.is_some()),
            ] {
                if present && !allowed.contains(&key) {
                    return Err(invalid(format!("material.{key}"), format!("not used by model `{model}`")));
                }
            }
            Ok(())
        };
        match model {
            "analytic" => {
                stray(&["b_sat", "mu_r_init", "knee_sharpness"])?;
                let MaterialSpec::Analytic {
                    b_sat,
                    mu_r_init,
                    knee_sharpness,
                } = MaterialSpec::default()
                else {
                    unreachable!()
                };
                Ok(MaterialSpec::Analytic {
                    b_sat: self.b_sat.unwrap_or(b_sat),
                    mu_r_init: self.mu_r_init.unwrap_or(mu_r_init),
                    knee_sharpness: self.knee_sharpness.unwrap_or(knee_sharpness),
                })
            }
            "linear" => {
                stray(&["mu_r"])?;
                Ok(MaterialSpec::Linear {
                    mu_r: self.mu_r.unwrap_or(2500.0),
                })
            }
            "table" => {
                stray(&["curve_csv"])?;
                let p = self
                    .curve_csv
                    .ok_or_else(|| invalid("material.curve_csv", "required when model = \"table\""))?;
                Ok(MaterialSpec::Table { path: base_dir.join(p) })
            }
            other => Err(invalid(
                "material.model",
                format!("`{other}` is not one of analytic, linear, table"),
            )),
        }
    }
}

/// Turns a material description into a curve, reading table files.
pub fn realize_material(spec: &MaterialSpec) -> Result<MaterialCurve, ConfigError> {
    match spec {
        MaterialSpec::Analytic {
            b_sat,
            mu_r_init,
            knee_sharpness,
        } => MaterialCurve::analytic(*b_sat, *mu_r_init, *knee_sharpness).map_err(|e| prefix("material", e)),
        MaterialSpec::Linear { mu_r } => MaterialCurve::linear(*mu_r).map_err(|e| prefix("material", e)),
        MaterialSpec::Table { path } => load_curve_csv(path),
    }
}

fn prefix(section: &str, e: cvsr_core::Error) -> ConfigError {
    match e {
        cvsr_core::Error::InvalidParameter { field, reason } => invalid(format!("{section}.{field}"), reason),
        other => other.into(),
    }
}

fn channel_selection(list: &[Value]) -> Result<Vec<String>, ConfigError> {
    let mut out = vec!["t".to_string()];
    for (k, v) in list.iter().enumerate() {
        let Value::String(name) = v else {
            return Err(invalid(format!("outputs.channels[{k}]"), "expected a channel name"));
        };
        if !CHANNELS.iter().any(|(n, _)| n == name) {
            let known: Vec<&str> = CHANNELS.iter().map(|(n, _)| *n).collect();
            return Err(invalid(
                format!("outputs.channels[{k}]"),
                format!("unknown channel `{name}`; known: {}", known.join(", ")),
            ));
        }
        if !out.contains(name) {
            out.push(name.clone());
        }
    }
    Ok(out)
}

pub(crate) fn check_unique_names(list: &[Scenario]) -> Result<(), ConfigError> {
    let mut seen = BTreeSet::new();
    for s in list {
        if !seen.insert(s.name.as_str()) {
            return Err(invalid("name", format!("duplicate scenario name `{}`", s.name)));
        }
    }
    Ok(())
}

impl fmt::Display for MaterialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaterialSpec::Analytic {
                b_sat,
                mu_r_init,
                knee_sharpness,
            } => write!(f, "analytic(b_sat={b_sat}, mu_r_init={mu_r_init}, k={knee_sharpness})"),
            MaterialSpec::Linear { mu_r } => write!(f, "linear(mu_r={mu_r})"),
            MaterialSpec::Table { path } => write!(f, "table({})", path.display()),
        }
    }
}
