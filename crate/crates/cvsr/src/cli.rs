//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, Scenario, check_unique_names, load_scenarios};
use crate::suite::{SuiteOptions, builtin_suite, default_parallelism, run_suite};
use crate::summary::render_text;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCENARIO_FAILED: i32 = 1;
pub const EXIT_CONFIG_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cvsr", version, about = "Transient simulator for a dc-biased three-leg series reactor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file or a built-in suite and write CSV waveforms plus a summary.
    Simulate {
        /// Scenario file (TOML). With --suite it supplies the shared settings.
        config: Option<PathBuf>,
        /// Output folder.
        #[arg(long, default_value = "cvsr-out")]
        out: PathBuf,
        /// Built-in suite: paper-nominal or paper-fault.
        #[arg(long)]
        suite: Option<String>,
        /// Scenarios run at once (default: available cores).
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        parallel: Option<u32>,
        /// Write only the summary, no waveform files.
        #[arg(long)]
        summary_only: bool,
    },
}

fn scenarios(config: Option<&PathBuf>, suite: Option<&str>) -> Result<Vec<Scenario>, ConfigError> {
    let list = match (config, suite) {
        (None, None) => {
            return Err(ConfigError::Invalid {
                field: "config".into(),
                reason: "give a scenario file, a --suite, or both".into(),
            });
        }
        (Some(path), None) => load_scenarios(path)?,
        (path, Some(name)) => {
            let base = match path {
                Some(p) => {
                    let mut all = load_scenarios(p)?;
                    if all.len() != 1 {
                        return Err(ConfigError::Invalid {
                            field: "sweep".into(),
                            reason: "a suite base file must describe a single scenario".into(),
                        });
                    }
                    all.remove(0)
                }
                None => Scenario::default(),
            };
            builtin_suite(name, &base)?
        }
    };
    check_unique_names(&list)?;
    Ok(list)
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let Command::Simulate {
        config,
        out,
        suite,
        parallel,
        summary_only,
    } = cli.command;
    let list = match scenarios(config.as_ref(), suite.as_deref()) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG_INVALID;
        }
    };
    let opts = SuiteOptions {
        out_dir: Some(out),
        parallel: parallel.map_or_else(default_parallelism, |p| p as usize),
        summary_only,
    };
    let outcome = match run_suite(&list, &opts) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: writing results: {e}");
            return EXIT_SCENARIO_FAILED;
        }
    };
    let _ = write!(stdout, "{}", render_text(&outcome.reports));
    if let Some(p) = &outcome.summary_csv {
        let _ = writeln!(stdout, "summary: {}", p.display());
    }
    if outcome.all_ok() { EXIT_OK } else { EXIT_SCENARIO_FAILED }
}
