//! End-to-end sessions, sweeps and comparison tables.

mod bench;
mod config;
mod report;
mod session;
mod sweep;

pub use config::{ExperimentConfig, QuantConfig, RatePolicy, SchemeSelection, SweepGrid};
pub use report::{compare_reports, emit_comparison, plot_svg, ratio, render, Comparison, ComparisonRow};
pub use session::{prepare, run_session, simulate_session, KeyPool, PreparedTraces, SchemeRun, SessionOutcome};
pub use sweep::{read_rows, run_sweep, strip_timestamps, write_rows, CsvRow, AGGREGATE_TRIAL, CSV_HEADER};
pub use bench::{turbo_ber, BerPoint};
pub(crate) use config::parse_puncture;
