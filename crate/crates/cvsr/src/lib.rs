//! Scenario files, CSV output and suite orchestration for the CVSR
//! simulator. The numerical model lives in `cvsr-core`.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod curve;
pub mod suite;
pub mod summary;

pub use config::{ConfigError, Scenario, load_scenarios, parse_scenario, parse_scenarios};
pub use suite::{SuiteOptions, SuiteOutcome, builtin_suite, run_scenario, run_suite};
pub use summary::{Metrics, SummaryContext, SummaryReport, summarize};
