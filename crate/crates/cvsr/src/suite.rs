//! Running lists of scenarios.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::sync::atomic::{AtomicUsize, Ordering};

use cvsr_core::analysis::TimeSeries;
use cvsr_core::solver::run;

use crate::config::{ConfigError, Scenario, bias_label, check_unique_names};
use crate::csvio::emit_csv;
use crate::summary::{Status, SummaryContext, SummaryReport, render_text, summarize, write_summary_csv};

/// Bias currents of the reference study, A.
pub const REFERENCE_BIASES: [f64; 4] = [0.0, 0.02, 0.075, 5.0];

pub const SUITES: [&str; 2] = ["paper-nominal", "paper-fault"];

/// Expands a built-in suite around `base`, which supplies device, source,
/// load, material, solver and output settings.
pub fn builtin_suite(name: &str, base: &Scenario) -> Result<Vec<Scenario>, ConfigError> {
    let fault = match name {
        "paper-nominal" => false,
        "paper-fault" => true,
        other => return Err(ConfigError::UnknownSuite(other.into())),
    };
    let period = 1.0 / base.source.frequency;
    let out: Vec<Scenario> = REFERENCE_BIASES
        .iter()
        .map(|&i_dc| {
            let mut s = base.clone();
            s.name = format!("{name}-dc-{}", bias_label(i_dc));
            s.dc_bias = i_dc;
            s.fault.enabled = fault;
            if fault {
                s.fault.t_fault = 2.0 * period;
                s.fault.retained_fraction = 0.1;
            }
            s
        })
        .collect();
    for s in &out {
        s.validate()?;
    }
    check_unique_names(&out)?;
    Ok(out)
}

/// Simulates one scenario and keeps only its selected channels.
pub fn run_scenario(s: &Scenario) -> Result<TimeSeries, String> {
    let system = s.system().map_err(|e| e.to_string())?;
    let ts = run(&system, &s.solver).map_err(|e| e.to_string())?;
    let names: Vec<&str> = s.outputs.iter().map(String::as_str).collect();
    ts.select(&names).map_err(|e| e.to_string())
}

/// Applies `f` to every item on up to `workers` threads. Results come back
/// in input order whatever the scheduling.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    let Some(item) = items.get(k) else { break };
                    let r = f(item);
                    *slots[k].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .expect("every slot is filled before the scope ends")
        })
        .collect()
}

pub fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Folder for waveform and summary files; nothing is written when unset.
    pub out_dir: Option<PathBuf>,
    pub parallel: usize,
    /// Skip the per-scenario waveform files.
    pub summary_only: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            out_dir: None,
            parallel: 1,
            summary_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub reports: Vec<SummaryReport>,
    pub summary_csv: Option<PathBuf>,
    pub summary_txt: Option<PathBuf>,
}

impl SuiteOutcome {
    pub fn all_ok(&self) -> bool {
        self.reports.iter().all(SummaryReport::ok)
    }
}

pub fn waveform_path(dir: &Path, scenario: &str) -> PathBuf {
    dir.join(format!("{scenario}.csv"))
}

fn run_one(s: &Scenario, opts: &SuiteOptions) -> SummaryReport {
    let mut report = SummaryReport {
        name: s.name.clone(),
        i_dc: s.dc_bias,
        fault: s.fault.enabled,
        status: Status::Ok,
        metrics: Default::default(),
    };
    let ts = match run_scenario(s) {
        Ok(ts) => ts,
        Err(e) => {
            report.status = Status::Failed(e);
            return report;
        }
    };
    report.metrics = summarize(&ts, &SummaryContext::of(s));
    if let (Some(dir), false) = (&opts.out_dir, opts.summary_only) {
        if let Err(e) = emit_csv(&ts, &waveform_path(dir, &s.name)) {
            report.status = Status::Failed(e.to_string());
        }
    }
    report
}

/// Runs every scenario, writes one waveform file each (unless
/// `summary_only`) and a combined summary once all have finished. A failing
/// scenario is recorded in its report and does not affect the others.
pub fn run_suite(scenarios: &[Scenario], opts: &SuiteOptions) -> std::io::Result<SuiteOutcome> {
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let reports = parallel_map(scenarios, opts.parallel, |s| run_one(s, opts));
    let mut outcome = SuiteOutcome {
        reports,
        summary_csv: None,
        summary_txt: None,
    };
    if let Some(dir) = &opts.out_dir {
        let csv_path = dir.join("summary.csv");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
        write_summary_csv(&outcome.reports, &mut file)?;
        std::io::Write::flush(&mut file)?;
        let txt_path = dir.join("summary.txt");
        std::fs::write(&txt_path, render_text(&outcome.reports))?;
        outcome.summary_csv = Some(csv_path);
        outcome.summary_txt = Some(txt_path);
    }
    Ok(outcome)
}
